#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace effn {

// In-place iterative radix-2 DIT FFT. n must be a power of two.
void fft_pow2(std::vector<std::complex<double>>& a);

// Power spectrum |X_k|^2 for k = 0..n/2 of a real frame zero-padded to
// n_fft (power of two). No 1/N scaling.
std::vector<double> power_spectrum(const std::vector<double>& frame, std::size_t n_fft);

}  // namespace effn
