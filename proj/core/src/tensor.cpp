#include "zsar/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "zsar/error.hpp"

namespace zsar {

namespace {

std::size_t checked_element_count(const std::vector<int>& dims) {
  std::size_t n = 1;
  for (int d : dims) {
    if (d <= 0) {
      throw ConfigError("tensor dims must be positive, got " +
                        dims_to_string(dims));
    }
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> dims) : dims_(std::move(dims)) {
  data_.assign(checked_element_count(dims_), 0.0);
}

Tensor Tensor::zeros(std::vector<int> dims) { return Tensor(std::move(dims)); }

Tensor Tensor::from(std::vector<int> dims, std::vector<double> values) {
  if (checked_element_count(dims) != values.size()) {
    throw ShapeError("tensor value count " + std::to_string(values.size()) +
                     " does not match dims " + dims_to_string(dims));
  }
  Tensor t;
  t.dims_ = std::move(dims);
  t.data_ = std::move(values);
  return t;
}

std::span<const double> Tensor::row(int i) const {
  if (rank() != 2) {
    throw ShapeError("row() requires a rank-2 tensor, got rank " +
                     std::to_string(rank()));
  }
  const std::size_t width = static_cast<std::size_t>(dims_[1]);
  return {data_.data() + static_cast<std::size_t>(i) * width, width};
}

std::span<double> Tensor::row(int i) {
  if (rank() != 2) {
    throw ShapeError("row() requires a rank-2 tensor, got rank " +
                     std::to_string(rank()));
  }
  const std::size_t width = static_cast<std::size_t>(dims_[1]);
  return {data_.data() + static_cast<std::size_t>(i) * width, width};
}

void Tensor::fill(double value) { data_.assign(data_.size(), value); }

bool all_finite(const Tensor& t) noexcept {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) return false;
  }
  return true;
}

void check_finite(const Tensor& t, const std::string& what) {
  if (!all_finite(t)) {
    throw NumericError("non-finite value detected in " + what);
  }
}

void check_same_dims(const Tensor& a, const Tensor& b,
                     const std::string& what) {
  if (!a.same_dims(b)) {
    throw ShapeError(what + ": dims " + dims_to_string(a.dims()) + " vs " +
                     dims_to_string(b.dims()));
  }
}

bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept {
  if (!a.same_dims(b)) return false;
  if (a.size() == 0) return true;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::string dims_to_string(const std::vector<int>& dims) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i > 0) out << ", ";
    out << dims[i];
  }
  out << ']';
  return out.str();
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot: length " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

Tensor unit_normalize(const Tensor& v) {
  if (v.rank() != 1) {
    throw ShapeError("unit_normalize expects a rank-1 tensor, got rank " +
                     std::to_string(v.rank()));
  }
  const double norm = l2_norm({v.data(), v.size()});
  if (norm == 0.0) {
    throw DataError("unit_normalize: zero vector has no direction");
  }
  if (!std::isfinite(norm)) {
    throw NumericError("unit_normalize: non-finite norm");
  }
  Tensor out = v;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= norm;
  return out;
}

void unit_normalize_rows(Tensor& m) {
  if (m.rank() != 2) {
    throw ShapeError("unit_normalize_rows expects a rank-2 tensor");
  }
  for (int i = 0; i < m.dim(0); ++i) {
    auto r = m.row(i);
    const double norm = l2_norm(r);
    if (norm == 0.0) {
      throw DataError("unit_normalize_rows: row " + std::to_string(i) +
                      " is the zero vector");
    }
    for (double& x : r) x /= norm;
  }
}

}  // namespace zsar
