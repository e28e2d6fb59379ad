#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "effn/rng.hpp"
#include "effn/tensor.hpp"

namespace effn {

// C = A (m x k) * B (k x n)
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
    throw DimensionError("matmul: inner extents do not match, " + shape_str(a) + " * " + shape_str(b));
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor<T> c(std::vector<std::size_t>{m, n});
  const T* pa = a.data();
  const T* pb = b.data();
  T* pc = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const T av = pa[i * k + p];
      const T* brow = pb + p * n;
      T* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

// C = A (m x k) * B^T (n x k) -> m x n. Backward of matmul w.r.t. its
// first input: dA = dC * B^T.
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols())
    throw DimensionError("matmul_nt: inner extents do not match");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  Tensor<T> c(std::vector<std::size_t>{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* brow = b.data() + j * k;
      T s = 0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      c.at(i, j) = s;
    }
  }
  return c;
}

// C = A^T (k x m) * B (k x n) -> m x n. Backward of matmul w.r.t. its
// second input: dB = A^T * dC.
template <typename T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows())
    throw DimensionError("matmul_tn: inner extents do not match");
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  Tensor<T> c(std::vector<std::size_t>{m, n});
  for (std::size_t p = 0; p < k; ++p) {
    const T* arow = a.data() + p * m;
    const T* brow = b.data() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T av = arow[i];
      T* crow = c.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (T& v : y) v = v > T(0) ? v : T(0);
  return y;
}

// Gradient convention: d relu / dx = 1 for x > 0, else 0 (including x == 0).
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  Tensor<T> dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (!(x[i] > T(0))) dx[i] = T(0);
  return dx;
}

// Numerically stable softmax over a contiguous span, written in place.
// Accumulation runs in double regardless of T.
template <typename T>
void softmax_inplace(std::span<T> x) {
  if (x.empty()) throw DimensionError("softmax: empty input");
  double mx = static_cast<double>(x[0]);
  for (const T v : x) mx = std::max(mx, static_cast<double>(v));
  double sum = 0.0;
  for (T& v : x) {
    const double e = std::exp(static_cast<double>(v) - mx);
    v = static_cast<T>(e);
    sum += e;
  }
  const double inv = 1.0 / sum;
  for (T& v : x) v = static_cast<T>(static_cast<double>(v) * inv);
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  Tensor<T> y = x;
  softmax_inplace(std::span<T>(y.data(), y.size()));
  return y;
}

// dx_i = y_i * (dy_i - sum_j y_j dy_j), written into dx.
template <typename T>
void softmax_backward(std::span<const T> y, std::span<const T> dy, std::span<T> dx) {
  double dot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    dot += static_cast<double>(y[i]) * static_cast<double>(dy[i]);
  for (std::size_t i = 0; i < y.size(); ++i)
    dx[i] = static_cast<T>(static_cast<double>(y[i]) * (static_cast<double>(dy[i]) - dot));
}

template <typename T>
Tensor<T> tanh_op(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (T& v : y) v = std::tanh(v);
  return y;
}

// Inverted dropout. In training mode each element is zeroed with
// probability p and survivors are scaled by 1/(1-p); eval mode is the
// identity. The mask is reused to gate the backward pass.
template <typename T>
struct DropoutResult {
  Tensor<T> y;
  std::vector<std::uint8_t> mask;  // empty in eval mode or when p == 0
};

template <typename T>
DropoutResult<T> dropout(const Tensor<T>& x, double p, Rng& rng, bool training) {
  if (p < 0.0 || p >= 1.0) throw ParameterError("dropout: p must satisfy 0 <= p < 1");
  DropoutResult<T> r;
  if (!training || p == 0.0) {
    r.y = x;
    return r;
  }
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  r.y = x;
  r.mask.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool keep = rng.next_double() >= p;
    r.mask[i] = keep ? 1 : 0;
    r.y[i] = keep ? r.y[i] * scale : T(0);
  }
  return r;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& dy, const std::vector<std::uint8_t>& mask, double p) {
  if (mask.empty()) return dy;
  Tensor<T> dx = dy;
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = mask[i] ? dx[i] * scale : T(0);
  return dx;
}

template <typename T>
void add_row_inplace(Tensor<T>& m, const Tensor<T>& row) {
  const std::size_t r = m.rows(), c = m.cols();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m.at(i, j) += row[j];
}

template <typename T>
void axpy(Tensor<T>& y, T a, const Tensor<T>& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

template <typename T>
double dot_all(const Tensor<T>& a, const Tensor<T>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

}  // namespace effn
