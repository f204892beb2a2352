#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace zsar {

// Dense row-major tensor of doubles. All training arithmetic stays in
// 64-bit floats; conversion to 32-bit happens only at the file boundary.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> dims);

  static Tensor zeros(std::vector<int> dims);
  static Tensor from(std::vector<int> dims, std::vector<double> values);

  const std::vector<int>& dims() const noexcept { return dims_; }
  int rank() const noexcept { return static_cast<int>(dims_.size()); }
  int dim(int i) const { return dims_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Unchecked row-major indexing for the ranks used in this project.
  double& operator()(int i) { return data_[static_cast<std::size_t>(i)]; }
  double operator()(int i) const { return data_[static_cast<std::size_t>(i)]; }
  double& operator()(int i, int j) {
    return data_[static_cast<std::size_t>(i) * dims_[1] + j];
  }
  double operator()(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * dims_[1] + j];
  }
  double& operator()(int i, int j, int k) {
    return data_[(static_cast<std::size_t>(i) * dims_[1] + j) * dims_[2] + k];
  }
  double operator()(int i, int j, int k) const {
    return data_[(static_cast<std::size_t>(i) * dims_[1] + j) * dims_[2] + k];
  }
  double& operator()(int i, int j, int k, int l) {
    return data_[((static_cast<std::size_t>(i) * dims_[1] + j) * dims_[2] + k) *
                     dims_[3] +
                 l];
  }
  double operator()(int i, int j, int k, int l) const {
    return data_[((static_cast<std::size_t>(i) * dims_[1] + j) * dims_[2] + k) *
                     dims_[3] +
                 l];
  }

  // Row view of a rank-2 tensor.
  std::span<const double> row(int i) const;
  std::span<double> row(int i);

  bool same_dims(const Tensor& other) const noexcept {
    return dims_ == other.dims_;
  }

  void fill(double value);

 private:
  std::vector<int> dims_;
  std::vector<double> data_;
};

bool all_finite(const Tensor& t) noexcept;

// Throws NumericError naming `what` when t holds a NaN or Inf.
void check_finite(const Tensor& t, const std::string& what);

// Throws ShapeError naming `what` when dims differ.
void check_same_dims(const Tensor& a, const Tensor& b, const std::string& what);

// Exact elementwise equality; used by determinism tests.
bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept;

std::string dims_to_string(const std::vector<int>& dims);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

// Rescales a rank-1 tensor to unit L2 norm. Throws DataError on a zero
// vector rather than silently returning zeros.
Tensor unit_normalize(const Tensor& v);

// Unit-normalizes every row of a rank-2 tensor in place.
void unit_normalize_rows(Tensor& m);

}  // namespace zsar
