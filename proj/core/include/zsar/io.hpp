#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "zsar/tensor.hpp"

namespace zsar::io {

// All binary artifacts are little-endian regardless of host order.

void write_u32(std::ostream& out, std::uint32_t value);
std::uint32_t read_u32(std::istream& in, const std::string& context);

void write_f32(std::ostream& out, float value);
float read_f32(std::istream& in, const std::string& context);

// Payload tensors are stored as 32-bit floats in row-major order.
void write_f32_tensor(std::ostream& out, const Tensor& t);
void read_f32_tensor(std::istream& in, Tensor& t, const std::string& context);

void write_magic(std::ostream& out, const char magic[4]);
void expect_magic(std::istream& in, const char magic[4],
                  const std::string& context);

// Length-prefixed UTF-8 JSON header blob.
void write_header_blob(std::ostream& out, const std::string& json_text);
std::string read_header_blob(std::istream& in, const std::string& context);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     const std::string& content);

// Sample tensor file: magic "ZTNS", version u32, rank u32, dims u32[rank],
// then the values as little-endian 32-bit floats.
void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

inline constexpr std::uint32_t kFormatVersion = 1;

}  // namespace zsar::io
