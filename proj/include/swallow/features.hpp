#pragma once

// Frame-based acoustic descriptors and the 25-value per-segment feature vector.
//
// A segment is cut into overlapping frames (25 ms / 10 ms hop by default). Each
// frame yields 13 MFCCs, nine spectral shape descriptors computed from the
// Hamming-windowed magnitude spectrum, and three time-domain measures (harmonic
// ratio, zero-crossing rate, short-term energy) computed from the raw frame.
// The segment's vector is the arithmetic mean of its frames.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "swallow/audio_io.hpp"
#include "swallow/error.hpp"
#include "swallow/fft.hpp"

namespace swallow {

enum class Window { hamming, rectangular };

struct FrameConfig {
  double frame_len_s = 0.025;
  double hop_s = 0.010;
  /// 0 selects the smallest power of two >= the frame length in samples.
  int fft_size = 0;
  Window window = Window::hamming;

  int frame_samples(int sample_rate_hz) const {
    return static_cast<int>(std::lround(frame_len_s * sample_rate_hz));
  }
  int hop_samples(int sample_rate_hz) const {
    return std::max(1, static_cast<int>(std::lround(hop_s * sample_rate_hz)));
  }
  int fft_points(int sample_rate_hz) const {
    const int len = frame_samples(sample_rate_hz);
    if (fft_size > 0) return fft_size;
    return static_cast<int>(std::bit_ceil(static_cast<unsigned>(std::max(len, 1))));
  }

  void validate(int sample_rate_hz) const {
    if (!(frame_len_s > 0.0) || !(hop_s > 0.0) || hop_s > frame_len_s) {
      throw Error(Errc::parameter, "frame config requires 0 < hop <= frame length");
    }
    const int len = frame_samples(sample_rate_hz);
    if (len < 2) throw Error(Errc::parameter, "frame shorter than two samples");
    const int n = fft_points(sample_rate_hz);
    if (n < len || !fft::is_power_of_two(static_cast<std::size_t>(n))) {
      throw Error(Errc::parameter, "fft size must be a power of two >= frame length");
    }
  }
};

struct MelConfig {
  static constexpr int n_coeffs = 13;
  int n_filters = 20;
  double f_min_hz = 0.0;
  /// 0 selects the Nyquist frequency.
  double f_max_hz = 0.0;

  double upper_hz(int sample_rate_hz) const { return f_max_hz > 0.0 ? f_max_hz : sample_rate_hz / 2.0; }

  void validate(int sample_rate_hz) const {
    if (n_filters <= n_coeffs) throw Error(Errc::parameter, "need more mel filters than cepstral coefficients");
    const double hi = upper_hz(sample_rate_hz);
    if (!(f_min_hz >= 0.0) || !(f_min_hz < hi) || hi > sample_rate_hz / 2.0) {
      throw Error(Errc::parameter, "mel range requires 0 <= f_min < f_max <= sample_rate/2");
    }
  }
};

inline constexpr std::size_t kFeatureCount = 25;

/// Positions inside FeatureVector::values (0-based).
namespace feature {
inline constexpr std::size_t mfcc1 = 0;  // mfcc1 .. mfcc13 occupy 0..12
inline constexpr std::size_t centroid = 13;
inline constexpr std::size_t crest = 14;
inline constexpr std::size_t entropy = 15;
inline constexpr std::size_t flatness = 16;
inline constexpr std::size_t flux = 17;
inline constexpr std::size_t kurtosis = 18;
inline constexpr std::size_t rolloff = 19;
inline constexpr std::size_t skewness = 20;
inline constexpr std::size_t spread = 21;
inline constexpr std::size_t harmonic_ratio = 22;
inline constexpr std::size_t zcr = 23;
inline constexpr std::size_t energy = 24;
}  // namespace feature

inline const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names{
      "mfcc1",    "mfcc2",    "mfcc3",    "mfcc4",    "mfcc5",    "mfcc6",    "mfcc7",
      "mfcc8",    "mfcc9",    "mfcc10",   "mfcc11",   "mfcc12",   "mfcc13",   "centroid",
      "crest",    "entropy",  "flatness", "flux",     "kurtosis", "rolloff",  "skewness",
      "spread",   "harmonic_ratio",       "zcr",      "energy"};
  return names;
}

struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

// ---------------------------------------------------------------------------
// Framing and spectra

/// Frames of length `frame_len` every `hop` samples; a trailing partial frame is
/// dropped, so the count is 1 + floor((N - L) / H).
inline std::vector<std::vector<double>> frame_signal(std::span<const double> samples, int frame_len, int hop) {
  if (frame_len <= 0 || hop <= 0) throw Error(Errc::parameter, "frame length and hop must be positive");
  const auto n = samples.size();
  const auto len = static_cast<std::size_t>(frame_len);
  if (n < len) {
    throw Error(Errc::too_short, "segment of " + std::to_string(n) + " samples is shorter than one frame (" +
                                     std::to_string(len) + ")");
  }
  const std::size_t count = 1 + (n - len) / static_cast<std::size_t>(hop);
  std::vector<std::vector<double>> frames;
  frames.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto first = samples.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(hop));
    frames.emplace_back(first, first + static_cast<std::ptrdiff_t>(len));
  }
  return frames;
}

inline std::vector<std::vector<double>> frame_signal(const AudioSegment& segment, const FrameConfig& config) {
  config.validate(segment.sample_rate_hz);
  return frame_signal(segment.samples, config.frame_samples(segment.sample_rate_hz),
                      config.hop_samples(segment.sample_rate_hz));
}

inline std::vector<double> window_coefficients(std::size_t length, Window window) {
  std::vector<double> w(length, 1.0);
  if (window == Window::hamming && length > 1) {
    for (std::size_t n = 0; n < length; ++n) {
      w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(length - 1));
    }
  }
  return w;
}

/// One-sided magnitude spectrum (fft_size/2 + 1 bins) of the windowed,
/// zero-padded frame. Bin k sits at k * sample_rate / fft_size Hz.
inline std::vector<double> magnitude_spectrum(std::span<const double> frame, int fft_size, Window window) {
  if (fft_size <= 0 || frame.size() > static_cast<std::size_t>(fft_size)) {
    throw Error(Errc::parameter, "frame longer than FFT size");
  }
  const auto w = window_coefficients(frame.size(), window);
  std::vector<double> windowed(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) windowed[i] = frame[i] * w[i];
  return fft::real_magnitudes(windowed, static_cast<std::size_t>(fft_size));
}

// ---------------------------------------------------------------------------
// MFCC

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular filters with edges equally spaced on the mel scale, evaluated at
/// the bin centre frequencies. Row m holds the weights of filter m.
inline std::vector<std::vector<double>> mel_filterbank(const MelConfig& mel, int sample_rate_hz, int fft_size) {
  mel.validate(sample_rate_hz);
  const int n_bins = fft_size / 2 + 1;
  const double lo = hz_to_mel(mel.f_min_hz);
  const double hi = hz_to_mel(mel.upper_hz(sample_rate_hz));
  std::vector<double> edges(static_cast<std::size_t>(mel.n_filters) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(mel.n_filters + 1));
  }
  std::vector<std::vector<double>> bank(static_cast<std::size_t>(mel.n_filters),
                                        std::vector<double>(static_cast<std::size_t>(n_bins), 0.0));
  for (std::size_t m = 0; m < bank.size(); ++m) {
    const double left = edges[m];
    const double centre = edges[m + 1];
    const double right = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz / fft_size;
      double weight = 0.0;
      if (f >= left && f <= centre) {
        weight = (f - left) / (centre - left);
      } else if (f > centre && f <= right) {
        weight = (right - f) / (right - centre);
      }
      bank[m][static_cast<std::size_t>(k)] = weight;
    }
  }
  return bank;
}

inline constexpr double kLogFloor = 1e-10;

/// MFCC1..13 per frame: log mel energies of the power spectrum, orthonormal
/// DCT-II, coefficients 1..13 (coefficient 0 is dropped).
inline std::vector<std::array<double, MelConfig::n_coeffs>> mfcc(const std::vector<std::vector<double>>& spectra,
                                                                 const MelConfig& mel, int sample_rate_hz) {
  if (spectra.empty()) throw Error(Errc::parameter, "mfcc needs at least one spectrum");
  const int fft_size = static_cast<int>((spectra.front().size() - 1) * 2);
  const auto bank = mel_filterbank(mel, sample_rate_hz, fft_size);
  const std::size_t m_count = bank.size();

  std::vector<std::vector<double>> basis(MelConfig::n_coeffs, std::vector<double>(m_count));
  const double scale = std::sqrt(2.0 / static_cast<double>(m_count));
  for (std::size_t c = 0; c < basis.size(); ++c) {
    for (std::size_t m = 0; m < m_count; ++m) {
      basis[c][m] = scale * std::cos(std::numbers::pi * static_cast<double>(c + 1) * (static_cast<double>(m) + 0.5) /
                                     static_cast<double>(m_count));
    }
  }

  std::vector<std::array<double, MelConfig::n_coeffs>> out;
  out.reserve(spectra.size());
  std::vector<double> log_energy(m_count);
  for (const auto& spectrum : spectra) {
    for (std::size_t m = 0; m < m_count; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < spectrum.size(); ++k) e += bank[m][k] * spectrum[k] * spectrum[k];
      log_energy[m] = std::log(std::max(e, kLogFloor));
    }
    // Subtracting a constant only alters DCT index 0, which is discarded; it
    // makes a constant log spectrum map to exact zeros.
    const double reference = log_energy.front();
    std::array<double, MelConfig::n_coeffs> coeffs{};
    for (std::size_t c = 0; c < coeffs.size(); ++c) {
      double sum = 0.0;
      for (std::size_t m = 0; m < m_count; ++m) sum += basis[c][m] * (log_energy[m] - reference);
      coeffs[c] = sum;
    }
    out.push_back(coeffs);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spectral shape

struct SpectralDescriptors {
  double centroid = 0.0;
  double spread = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
  double entropy = 1.0;
  double flatness = 1.0;
  double crest = 1.0;
  double rolloff = 0.0;
  double flux = 0.0;
};

inline constexpr double kRolloffFraction = 0.90;

/// Shape descriptors of each magnitude spectrum, treating the normalized
/// magnitudes as a distribution over bin frequencies. An all-zero spectrum gets
/// the fixed values of a default-constructed SpectralDescriptors.
inline std::vector<SpectralDescriptors> spectral_descriptors(const std::vector<std::vector<double>>& spectra,
                                                             int sample_rate_hz) {
  if (spectra.empty()) throw Error(Errc::parameter, "spectral descriptors need at least one spectrum");
  const std::size_t n_bins = spectra.front().size();
  const double bin_hz = static_cast<double>(sample_rate_hz) / static_cast<double>((n_bins - 1) * 2);

  std::vector<SpectralDescriptors> out;
  out.reserve(spectra.size());
  std::vector<double> prev_p;
  std::vector<double> p(n_bins);
  for (const auto& mag : spectra) {
    if (mag.size() != n_bins) throw Error(Errc::shape, "spectra of differing lengths");
    SpectralDescriptors d;
    const double total = std::accumulate(mag.begin(), mag.end(), 0.0);
    if (total <= 0.0) {
      out.push_back(d);
      prev_p.clear();
      continue;
    }
    for (std::size_t k = 0; k < n_bins; ++k) p[k] = mag[k] / total;

    double centroid = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) centroid += p[k] * static_cast<double>(k) * bin_hz;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double dev = static_cast<double>(k) * bin_hz - centroid;
      const double sq = dev * dev;
      m2 += p[k] * sq;
      m3 += p[k] * sq * dev;
      m4 += p[k] * sq * sq;
    }
    d.centroid = centroid;
    d.spread = std::sqrt(m2);
    if (d.spread > 1e-12 * bin_hz) {
      d.skewness = m3 / (d.spread * d.spread * d.spread);
      d.kurtosis = m4 / (m2 * m2);
    }

    double h = 0.0;
    for (double pk : p) {
      if (pk > 0.0) h -= pk * std::log2(pk);
    }
    d.entropy = std::clamp(h / std::log2(static_cast<double>(n_bins)), 0.0, 1.0);

    const double mean = total / static_cast<double>(n_bins);
    double log_sum = 0.0;
    double peak = 0.0;
    double power_total = 0.0;
    for (double m : mag) {
      log_sum += std::log(std::max(m, kLogFloor));
      peak = std::max(peak, m);
      power_total += m * m;
    }
    d.flatness = std::min(1.0, std::exp(log_sum / static_cast<double>(n_bins)) / mean);
    d.crest = peak / mean;

    const double target = kRolloffFraction * power_total;
    double cumulative = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      cumulative += mag[k] * mag[k];
      if (cumulative >= target) {
        d.rolloff = static_cast<double>(k) * bin_hz;
        break;
      }
    }

    if (!prev_p.empty()) {
      double flux = 0.0;
      for (std::size_t k = 0; k < n_bins; ++k) flux += (p[k] - prev_p[k]) * (p[k] - prev_p[k]);
      d.flux = flux;
    }
    prev_p = p;
    out.push_back(d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Time-domain measures

/// Fraction of adjacent sample pairs whose signs differ; zero counts as positive.
inline double zero_crossing_rate(std::span<const double> frame) {
  if (frame.size() < 2) throw Error(Errc::too_short, "zero-crossing rate needs at least two samples");
  std::size_t crossings = 0;
  for (std::size_t i = 1; i < frame.size(); ++i) {
    if ((frame[i - 1] >= 0.0) != (frame[i] >= 0.0)) ++crossings;
  }
  return static_cast<double>(crossings) / static_cast<double>(frame.size() - 1);
}

/// Mean square of the raw samples.
inline double short_term_energy(std::span<const double> frame) {
  if (frame.empty()) throw Error(Errc::too_short, "energy of an empty frame");
  double sum = 0.0;
  for (double s : frame) sum += s * s;
  return sum / static_cast<double>(frame.size());
}

struct PitchLags {
  int min_lag;
  int max_lag;
};

/// Autocorrelation lags for 60-1000 Hz periodicity.
inline PitchLags pitch_lags(int sample_rate_hz) {
  return {static_cast<int>(std::ceil(sample_rate_hz / 1000.0)), static_cast<int>(std::floor(sample_rate_hz / 60.0))};
}

/// Peak of r(tau)/r(0) over the pitch lag range, clamped to [0, 1], where r is
/// the unbiased autocorrelation (each lag averaged over its overlap).
inline double harmonic_ratio(std::span<const double> frame, int sample_rate_hz) {
  const auto [min_lag, max_lag] = pitch_lags(sample_rate_hz);
  const auto n = frame.size();
  if (n < static_cast<std::size_t>(max_lag)) {
    throw Error(Errc::too_short, "harmonic ratio needs a frame of at least " + std::to_string(max_lag) + " samples");
  }
  double r0 = 0.0;
  for (double s : frame) r0 += s * s;
  if (r0 <= 0.0) return 0.0;
  r0 /= static_cast<double>(n);

  double best = 0.0;
  for (int lag = std::max(min_lag, 1); lag <= max_lag; ++lag) {
    const auto tau = static_cast<std::size_t>(lag);
    if (tau >= n) break;
    double r = 0.0;
    for (std::size_t i = 0; i + tau < n; ++i) r += frame[i] * frame[i + tau];
    r /= static_cast<double>(n - tau);
    best = std::max(best, r / r0);
  }
  return std::clamp(best, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Segment vector

/// Per-frame feature rows (before averaging), in FeatureVector order.
inline std::vector<FeatureVector> frame_features(const AudioSegment& segment, const FrameConfig& frame,
                                                 const MelConfig& mel) {
  const int rate = segment.sample_rate_hz;
  if (rate <= 0) throw Error(Errc::parameter, "segment has no sample rate");
  mel.validate(rate);
  const auto frames = frame_signal(segment, frame);
  const int fft_size = frame.fft_points(rate);

  std::vector<std::vector<double>> spectra;
  spectra.reserve(frames.size());
  for (const auto& f : frames) spectra.push_back(magnitude_spectrum(f, fft_size, frame.window));
  const auto cepstra = mfcc(spectra, mel, rate);
  const auto shape = spectral_descriptors(spectra, rate);

  std::vector<FeatureVector> rows(frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    auto& v = rows[t];
    for (std::size_t c = 0; c < MelConfig::n_coeffs; ++c) v[feature::mfcc1 + c] = cepstra[t][c];
    const auto& d = shape[t];
    v[feature::centroid] = d.centroid;
    v[feature::crest] = d.crest;
    v[feature::entropy] = d.entropy;
    v[feature::flatness] = d.flatness;
    v[feature::flux] = d.flux;
    v[feature::kurtosis] = d.kurtosis;
    v[feature::rolloff] = d.rolloff;
    v[feature::skewness] = d.skewness;
    v[feature::spread] = d.spread;
    v[feature::harmonic_ratio] = harmonic_ratio(frames[t], rate);
    v[feature::zcr] = zero_crossing_rate(frames[t]);
    v[feature::energy] = short_term_energy(frames[t]);
  }
  return rows;
}

/// Mean of the per-frame features over all frames of the segment.
inline FeatureVector extract_feature_vector(const AudioSegment& segment, const FrameConfig& frame = {},
                                            const MelConfig& mel = {}) {
  const auto rows = frame_features(segment, frame, mel);
  FeatureVector mean;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) mean[i] += row[i];
  }
  for (auto& v : mean.values) v /= static_cast<double>(rows.size());
  return mean;
}

}  // namespace swallow
