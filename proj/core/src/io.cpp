#include "zsar/io.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "zsar/error.hpp"

namespace zsar::io {

void write_u32(std::ostream& out, std::uint32_t value) {
  const char bytes[4] = {
      static_cast<char>(value & 0xff),
      static_cast<char>((value >> 8) & 0xff),
      static_cast<char>((value >> 16) & 0xff),
      static_cast<char>((value >> 24) & 0xff),
  };
  out.write(bytes, 4);
}

std::uint32_t read_u32(std::istream& in, const std::string& context) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) {
    throw ParseError(context + ": truncated file while reading u32");
  }
  return static_cast<std::uint32_t>(bytes[0]) |
         (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

void write_f32(std::ostream& out, float value) {
  write_u32(out, std::bit_cast<std::uint32_t>(value));
}

float read_f32(std::istream& in, const std::string& context) {
  return std::bit_cast<float>(read_u32(in, context));
}

void write_f32_tensor(std::ostream& out, const Tensor& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    write_f32(out, static_cast<float>(t[i]));
  }
}

void read_f32_tensor(std::istream& in, Tensor& t, const std::string& context) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<double>(read_f32(in, context));
  }
  check_finite(t, context);
}

void write_magic(std::ostream& out, const char magic[4]) {
  out.write(magic, 4);
}

void expect_magic(std::istream& in, const char magic[4],
                  const std::string& context) {
  char got[4] = {};
  in.read(got, 4);
  if (!in || std::string_view(got, 4) != std::string_view(magic, 4)) {
    throw ParseError(context + ": bad magic, expected '" +
                     std::string(magic, 4) + "'");
  }
}

void write_header_blob(std::ostream& out, const std::string& json_text) {
  write_u32(out, static_cast<std::uint32_t>(json_text.size()));
  out.write(json_text.data(),
            static_cast<std::streamsize>(json_text.size()));
}

std::string read_header_blob(std::istream& in, const std::string& context) {
  const std::uint32_t length = read_u32(in, context);
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) {
    throw ParseError(context + ": truncated header blob");
  }
  return text;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open for reading: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  write_magic(out, "ZTNS");
  write_u32(out, kFormatVersion);
  write_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (int d : t.dims()) {
    write_u32(out, static_cast<std::uint32_t>(d));
  }
  write_f32_tensor(out, t);
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open for reading: " + path.string());
  }
  const std::string context = "tensor file " + path.string();
  expect_magic(in, "ZTNS", context);
  const std::uint32_t version = read_u32(in, context);
  if (version != kFormatVersion) {
    throw ParseError(context + ": unsupported version " +
                     std::to_string(version));
  }
  const std::uint32_t rank = read_u32(in, context);
  if (rank == 0 || rank > 8) {
    throw ParseError(context + ": implausible rank " + std::to_string(rank));
  }
  std::vector<int> dims(rank);
  for (auto& d : dims) {
    d = static_cast<int>(read_u32(in, context));
  }
  Tensor t(dims);
  read_f32_tensor(in, t, context);
  return t;
}

}  // namespace zsar::io
