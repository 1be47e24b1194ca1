#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "swallow/error.hpp"

namespace swallow::fft {

inline bool is_power_of_two(std::size_t n) { return n != 0 && std::has_single_bit(n); }

/// In-place iterative radix-2 decimation-in-time transform (forward, unscaled).
inline void transform(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (!is_power_of_two(n)) throw Error(Errc::parameter, "FFT size must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    // Twiddles evaluated directly rather than by recurrence to keep the error
    // at a few ulps for every size.
    std::vector<std::complex<double>> twiddle(half);
    for (std::size_t k = 0; k < half; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
      twiddle[k] = {std::cos(angle), std::sin(angle)};
    }
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const auto u = a[start + k];
        const auto v = a[start + k + half] * twiddle[k];
        a[start + k] = u + v;
        a[start + k + half] = u - v;
      }
    }
  }
}

/// |X_k| for k = 0..n/2 of a real input zero-padded to n points.
inline std::vector<double> real_magnitudes(std::span<const double> input, std::size_t n) {
  if (input.size() > n) throw Error(Errc::parameter, "input longer than FFT size");
  std::vector<std::complex<double>> buffer(n);
  for (std::size_t i = 0; i < input.size(); ++i) buffer[i] = input[i];
  transform(buffer);
  std::vector<double> mags(n / 2 + 1);
  for (std::size_t k = 0; k < mags.size(); ++k) mags[k] = std::abs(buffer[k]);
  return mags;
}

}  // namespace swallow::fft
