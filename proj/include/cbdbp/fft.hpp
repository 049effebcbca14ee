#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace cbdbp {

using Complex = std::complex<double>;
using CVec = std::vector<Complex>;
using RVec = std::vector<double>;

/// Forward transform convention: X[k] = sum_n x[n] exp(-j 2 pi k n / N).
/// The inverse scales by 1/N. All frequency-domain code in the library
/// assumes this pair.
///
/// dft()/idft() accept power-of-two lengths only. The fft_* functions below
/// accept any length and are used for whole-record transforms.
CVec dft(std::span<const Complex> block);
CVec idft(std::span<const Complex> spectrum);

/// In-place unnormalized forward transform, any length.
void fft_inplace(std::span<Complex> data);
/// In-place inverse transform including the 1/N scale, any length.
void ifft_inplace(std::span<Complex> data);

/// Real-input forward transform: returns N/2+1 bins.
CVec rfft(std::span<const double> data);
/// Inverse of rfft for a length-n real signal (scaled by 1/n).
RVec irfft(std::span<const Complex> half_spectrum, std::size_t n);

/// Signed DFT bin index in [-N/2, N/2) for storage index k.
inline long centered_bin(std::size_t k, std::size_t n) {
  return k < (n + 1) / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

/// Storage index for a signed bin in [-N/2, N/2).
inline std::size_t storage_bin(long bin, std::size_t n) {
  return bin >= 0 ? static_cast<std::size_t>(bin) : static_cast<std::size_t>(bin + static_cast<long>(n));
}

bool is_power_of_two(std::size_t n);

}  // namespace cbdbp
