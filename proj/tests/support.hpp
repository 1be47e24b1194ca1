#pragma once

// Independent reference implementations used as test oracles. None of these
// call into the library's DSP or statistics code.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace oracle {

/// O(n^2) one-sided DFT magnitudes of the zero-padded frame.
inline std::vector<double> naive_dft_magnitudes(const std::vector<double>& frame, std::size_t n) {
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < frame.size(); ++t) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n);
      acc += frame[t] * std::polar(1.0, angle);
    }
    out[k] = std::abs(acc);
  }
  return out;
}

inline std::vector<double> hamming(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return w;
}

/// Mel filterbank + log + orthonormal DCT-II straight from the definitions,
/// using the natural-log form of the HTK mel scale.
inline std::vector<double> reference_mfcc(const std::vector<double>& magnitudes, int sample_rate, int n_filters,
                                          double f_lo, double f_hi) {
  auto mel = [](double f) { return 1127.0 * std::log1p(f / 700.0); };
  auto inv = [](double m) { return 700.0 * std::expm1(m / 1127.0); };
  const std::size_t n_fft = (magnitudes.size() - 1) * 2;
  std::vector<double> log_e(static_cast<std::size_t>(n_filters));
  for (int m = 0; m < n_filters; ++m) {
    const double step = (mel(f_hi) - mel(f_lo)) / (n_filters + 1);
    const double l = inv(mel(f_lo) + step * m);
    const double c = inv(mel(f_lo) + step * (m + 1));
    const double r = inv(mel(f_lo) + step * (m + 2));
    double e = 0.0;
    for (std::size_t k = 0; k < magnitudes.size(); ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      const double w = std::max(0.0, std::min((f - l) / (c - l), (r - f) / (r - c)));
      e += w * magnitudes[k] * magnitudes[k];
    }
    log_e[static_cast<std::size_t>(m)] = std::log(std::max(e, 1e-10));
  }
  std::vector<double> out;
  for (int k = 1; k <= 13; ++k) {
    double s = 0.0;
    for (int m = 0; m < n_filters; ++m) s += log_e[static_cast<std::size_t>(m)] * std::cos(std::numbers::pi * k * (m + 0.5) / n_filters);
    out.push_back(std::sqrt(2.0 / n_filters) * s);
  }
  return out;
}

/// Byte-level PCM16 mono WAV writer with an extra chunk before `data`.
inline void write_pcm16_wav(const std::string& path, const std::vector<std::int16_t>& samples, int rate) {
  std::ofstream f(path, std::ios::binary);
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) f.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  auto u16 = [&](std::uint16_t v) {
    f.put(static_cast<char>(v & 0xFF));
    f.put(static_cast<char>(v >> 8));
  };
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  f.write("RIFF", 4);
  u32(4 + 8 + 16 + 8 + 4 + 8 + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  u32(16);
  u16(1);
  u16(1);
  u32(static_cast<std::uint32_t>(rate));
  u32(static_cast<std::uint32_t>(rate) * 2);
  u16(2);
  u16(16);
  f.write("LIST", 4);
  u32(4);
  f.write("INFO", 4);
  f.write("data", 4);
  u32(data_bytes);
  for (auto s : samples) u16(static_cast<std::uint16_t>(s));
}

/// Eigenvalues of a symmetric 3x3 matrix from its characteristic polynomial
/// (trigonometric solution of the depressed cubic), descending.
inline std::vector<double> symmetric3_eigenvalues(const double a[3][3]) {
  const double p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
  const double q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
  const double p2 = (a[0][0] - q) * (a[0][0] - q) + (a[1][1] - q) * (a[1][1] - q) + (a[2][2] - q) * (a[2][2] - q) + 2 * p1;
  const double p = std::sqrt(p2 / 6.0);
  double b[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) b[i][j] = (a[i][j] - (i == j ? q : 0.0)) / p;
  const double det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
                     b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
  const double r = std::clamp(det / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double e1 = q + 2 * p * std::cos(phi);
  const double e3 = q + 2 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  return {e1, 3 * q - e1 - e3, e3};
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
}

/// Fresh empty directory under the system temp dir.
inline std::string temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("swallow_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace oracle
