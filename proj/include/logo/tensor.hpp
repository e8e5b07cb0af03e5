#pragma once
// Dense row-major 64-bit float arrays. Value-like: copy/move freely.

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "logo/errors.hpp"

namespace logo {

class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(count_of(shape_), 0.0) {}

  Tensor(std::vector<std::size_t> shape, std::vector<double> values)
      : shape_(std::move(shape)), data_(std::move(values)) {
    if (data_.size() != count_of(shape_)) {
      throw ShapeMismatch("tensor: value count " + std::to_string(data_.size()) +
                          " does not match shape " + shape_string(shape_));
    }
  }

  static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    for (double& x : t.data_) x = v;
    return t;
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  static Tensor row(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t extent(std::size_t i) const { return shape_.at(i); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // 2-D and 3-D accessors (row-major).
  double& at2(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at2(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double& at3(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at3(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (double x : data_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  static std::string shape_string(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ')';
    return os.str();
  }

  std::string shape_string() const { return shape_string(shape_); }

  // Honored when the tensor is registered as a tape leaf.
  bool requires_grad = false;

 private:
  static std::size_t count_of(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return s.empty() ? 0 : n;
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
  if (!a.same_shape(b)) {
    throw ShapeMismatch(std::string(where) + ": " + a.shape_string() + " vs " + b.shape_string());
  }
}

}  // namespace logo
