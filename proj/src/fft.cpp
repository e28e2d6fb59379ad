#include "effn/fft.hpp"

#include <cmath>

#include "effn/error.hpp"

namespace effn {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

const std::vector<std::complex<double>>& twiddles_for(std::size_t n) {
  static std::vector<std::vector<std::complex<double>>> cache(32);
  int log2n = 0;
  while ((std::size_t(1) << log2n) < n) ++log2n;
  auto& tw = cache[log2n];
  if (tw.empty()) {
    tw.resize(n / 2);
    for (std::size_t i = 0; i < n / 2; ++i) {
      const double a = -kTwoPi * static_cast<double>(i) / static_cast<double>(n);
      tw[i] = {std::cos(a), std::sin(a)};
    }
  }
  return tw;
}

}  // namespace

void fft_pow2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw DimensionError("fft: size must be a power of two");
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const auto& tw = twiddles_for(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> w = tw[j * stride];
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
      }
    }
  }
}

std::vector<double> power_spectrum(const std::vector<double>& frame, std::size_t n_fft) {
  if (frame.size() > n_fft) throw DimensionError("power_spectrum: frame longer than n_fft");
  std::vector<std::complex<double>> buf(n_fft);
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = {frame[i], 0.0};
  fft_pow2(buf);
  std::vector<double> p(n_fft / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(buf[k]);
  return p;
}

}  // namespace effn
