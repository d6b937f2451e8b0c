#pragma once

#include <cassert>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sgnv {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense row-major n-d array of doubles. Rank is small (<= 4) in practice.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    v_.assign(static_cast<size_t>(count(shape_)), 0.0);
  }
  Tensor(std::vector<int> shape, std::vector<double> data)
      : shape_(std::move(shape)), v_(std::move(data)) {
    if (static_cast<int64_t>(v_.size()) != count(shape_))
      throw std::invalid_argument("Tensor: data size does not match shape");
  }

  static Tensor scalar(double x) { return Tensor({1}, {x}); }
  static Tensor full(std::vector<int> shape, double x) {
    Tensor t(std::move(shape));
    std::fill(t.v_.begin(), t.v_.end(), x);
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t size() const { return static_cast<int64_t>(v_.size()); }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  double& operator[](int64_t i) { return v_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return v_[static_cast<size_t>(i)]; }

  std::vector<double>& raw() { return v_; }
  const std::vector<double>& raw() const { return v_; }

  /// 2-d view. Requires rank 2 (or rank 1, treated as a row vector).
  Eigen::Map<MatrixRM> mat() {
    auto [r, c] = mat_dims();
    return {v_.data(), r, c};
  }
  Eigen::Map<const MatrixRM> mat() const {
    auto [r, c] = mat_dims();
    return {v_.data(), r, c};
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (double x : v_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  static int64_t count(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  static std::string shape_str(const std::vector<int>& shape) {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i)
      s += (i ? "," : "") + std::to_string(shape[i]);
    return s + "]";
  }

 private:
  std::pair<int, int> mat_dims() const {
    if (shape_.size() == 1) return {1, shape_[0]};
    if (shape_.size() != 2) throw std::logic_error("Tensor::mat on rank != 2");
    return {shape_[0], shape_[1]};
  }

  std::vector<int> shape_;
  std::vector<double> v_;
};

}  // namespace sgnv
