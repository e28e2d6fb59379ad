#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "effn/error.hpp"

namespace effn {

// Dense row-major tensor over float or double. Checked factories reject
// shape/value mismatches and non-finite input values; arithmetic inside the
// library uses the unchecked path and relies on loss/gradient finiteness
// checks in the training loop.
template <typename T>
class Tensor {
  static_assert(std::is_floating_point_v<T>);

 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), v_(checked_count(shape_), T(0)) {}

  static Tensor from(std::vector<std::size_t> shape, std::vector<T> values) {
    Tensor t;
    t.shape_ = std::move(shape);
    if (checked_count(t.shape_) != values.size())
      throw DimensionError("tensor: shape does not match value count");
    for (const T x : values)
      if (!std::isfinite(x)) throw NumericError("tensor: non-finite value rejected");
    t.v_ = std::move(values);
    return t;
  }

  // Unchecked construction for internal op outputs.
  static Tensor raw(std::vector<std::size_t> shape, std::vector<T> values) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.v_ = std::move(values);
    return t;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  std::size_t rows() const { return rank() >= 1 ? shape_[0] : 0; }
  std::size_t cols() const { return rank() >= 2 ? shape_[1] : 1; }

  T& operator[](std::size_t i) { return v_[i]; }
  const T& operator[](std::size_t i) const { return v_[i]; }
  T& at(std::size_t r, std::size_t c) { return v_[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const { return v_[r * cols() + c]; }

  T* data() { return v_.data(); }
  const T* data() const { return v_.data(); }
  std::vector<T>& values() { return v_; }
  const std::vector<T>& values() const { return v_; }

  auto begin() { return v_.begin(); }
  auto end() { return v_.end(); }
  auto begin() const { return v_.begin(); }
  auto end() const { return v_.end(); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (const T x : v_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(v_.size());
    for (std::size_t i = 0; i < v_.size(); ++i) out[i] = static_cast<U>(v_[i]);
    return Tensor<U>::raw(shape_, std::move(out));
  }

 private:
  static std::size_t checked_count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (const std::size_t d : shape) {
      if (d == 0) throw DimensionError("tensor: zero extent");
      if (n > (std::size_t(1) << 40) / d) throw DimensionError("tensor: shape overflow");
      n *= d;
    }
    return n;
  }

  std::vector<std::size_t> shape_;
  std::vector<T> v_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

template <typename T>
std::string shape_str(const Tensor<T>& t) {
  std::string s = "[";
  for (std::size_t i = 0; i < t.shape().size(); ++i) {
    if (i) s += "x";
    s += std::to_string(t.shape()[i]);
  }
  return s + "]";
}

}  // namespace effn
