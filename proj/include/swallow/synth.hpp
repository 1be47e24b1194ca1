#pragma once

// Deterministic synthetic swallow corpora.
//
// Normal swallows are low-pass noise bursts under a smooth envelope with a
// noise floor. Dysphagic swallows add, in proportion to `separation`, a
// low-frequency hum, high-passed hiss and short resonant clicks. At
// separation 0 both classes come from the same distribution.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "swallow/audio_io.hpp"
#include "swallow/dataset.hpp"
#include "swallow/error.hpp"
#include "swallow/random.hpp"

namespace swallow {

struct SynthConfig {
  int n_normal = 152;
  int n_dysphagic = 110;
  int sample_rate_hz = 4000;
  double segment_duration_s = 1.0;
  double separation = 1.0;
  std::uint64_t seed = 42;
  /// Background-noise padding before and after each swallow.
  double padding_s = 0.25;

  void validate() const {
    if (n_normal < 0 || n_dysphagic < 0) throw Error(Errc::parameter, "class counts must be >= 0");
    if (sample_rate_hz <= 0) throw Error(Errc::parameter, "sample rate must be positive");
    if (!(segment_duration_s >= 0.025)) throw Error(Errc::parameter, "segment shorter than one analysis frame");
    if (!(separation >= 0.0)) throw Error(Errc::parameter, "separation must be >= 0");
    if (!(padding_s >= 0.0)) throw Error(Errc::parameter, "padding must be >= 0");
  }
};

namespace detail {

/// Two-pole low-pass (RBJ biquad, Q = 0.707) applied in place.
inline void low_pass(std::vector<double>& x, double cutoff_hz, int sample_rate_hz) {
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / sample_rate_hz;
  const double alpha = std::sin(w0) / std::numbers::sqrt2;  // Q = 1/sqrt(2)
  const double cw = std::cos(w0);
  const double a0 = 1.0 + alpha;
  const double b0 = (1.0 - cw) / 2.0 / a0;
  const double b1 = (1.0 - cw) / a0;
  const double b2 = b0;
  const double a1 = -2.0 * cw / a0;
  const double a2 = (1.0 - alpha) / a0;
  double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
  for (double& v : x) {
    const double y = b0 * v + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = v;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

inline double rms(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return x.empty() ? 0.0 : std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace detail

/// Shape of the dysphagic additions, in units of the burst RMS.
struct DysphagicProfile {
  double tone_level = 0.35;       ///< low-frequency hum under the swallow envelope
  double tone_lo_hz = 273.0;
  double tone_hi_hz = 325.0;
  double hiss_level = 0.16;       ///< high-passed noise
  double hiss_cutoff_hz = 1414.0;
  double clicks_per_s = 8.86;     ///< resonant clicks
  double click_level = 5.1;
  double click_decay_s = 0.016;
  double click_lo_hz = 363.0;
  double click_hi_hz = 1159.0;
  double floor_lo_db = -27.7;     ///< enveloped noise floor, both classes
  double floor_hi_db = -14.7;
  double burst_lo_hz = 352.0;
  double burst_hi_hz = 569.0;
};

/// Samples of one swallow event (without padding), peak-normalized into [-0.9, 0.9].
inline std::vector<double> synthesize_swallow(Label label, const SynthConfig& config, Rng& rng,
                                              const DysphagicProfile& profile = {}) {
  const int rate = config.sample_rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(config.segment_duration_s * rate));
  const double max_hz = 0.45 * rate;
  const double two_pi = 2.0 * std::numbers::pi;

  std::vector<double> burst(n);
  for (auto& v : burst) v = rng.normal();
  detail::low_pass(burst, std::min(rng.uniform(profile.burst_lo_hz, profile.burst_hi_hz), max_hz), rate);
  // Raised-sine envelope with a jittered peak position.
  const double peak_at = rng.uniform(0.35, 0.65);
  std::vector<double> env(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(n - 1, 1));
    const double phase = t < peak_at ? 0.5 * t / peak_at : 0.5 + 0.5 * (t - peak_at) / (1.0 - peak_at);
    const double e = std::sin(std::numbers::pi * phase);
    env[i] = e * e;
    burst[i] *= env[i];
  }
  const double burst_rms = std::max(detail::rms(burst), 1e-12);

  // Every draw happens for both classes; the dysphagic scale is zero for
  // normal swallows, so at separation 0 the classes are identically distributed.
  const double scale = label == Label::dysphagic ? config.separation : 0.0;
  const double floor_level = std::pow(10.0, rng.uniform(profile.floor_lo_db, profile.floor_hi_db) / 20.0);
  const double tone_level = rng.uniform(0.5, 1.5) * profile.tone_level * scale;
  const double tone_hz = std::min(rng.uniform(profile.tone_lo_hz, profile.tone_hi_hz), max_hz);
  const double tone_phase = rng.uniform(0.0, two_pi);
  const double hiss_level = rng.uniform(0.5, 1.5) * profile.hiss_level * scale;
  const int clicks = rng.poisson(profile.clicks_per_s * config.segment_duration_s * std::min(scale, 4.0));

  std::vector<double> hiss(n);
  for (auto& v : hiss) v = rng.normal();
  std::vector<double> hiss_low = hiss;
  detail::low_pass(hiss_low, std::min(profile.hiss_cutoff_hz, max_hz), rate);
  for (std::size_t i = 0; i < n; ++i) hiss[i] -= hiss_low[i];

  std::vector<double> extra(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    extra[i] = burst_rms * (floor_level * rng.normal() * std::sqrt(env[i]) +
                            tone_level * std::sin(two_pi * tone_hz * t + tone_phase) * std::sqrt(env[i]) +
                            hiss_level * hiss[i] * env[i]);
  }
  for (int c = 0; c < clicks; ++c) {
    const auto onset = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
    const double freq = std::min(rng.uniform(profile.click_lo_hz, profile.click_hi_hz), max_hz);
    const double decay_s = profile.click_decay_s * rng.uniform(0.75, 1.5);
    const double amp = profile.click_level * rng.uniform(0.66, 1.33) * burst_rms * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    for (std::size_t i = onset; i < n; ++i) {
      const double t = static_cast<double>(i - onset) / rate;
      if (t > 6.0 * decay_s) break;
      extra[i] += amp * std::exp(-t / decay_s) * std::sin(two_pi * freq * t);
    }
  }

  std::vector<double> out(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = burst[i] + extra[i];
    peak = std::max(peak, std::abs(out[i]));
  }
  const double target = rng.uniform(0.3, 0.9);
  const double gain = peak > 0.0 ? target / peak : 0.0;
  for (auto& v : out) v *= gain;
  return out;
}

struct SynthCorpus {
  std::vector<std::string> wav_files;  ///< absolute or out_dir-relative paths as written
  std::string annotations_path;
  std::vector<SegmentAnnotation> annotations;
};

inline const std::array<Consistency, 3>& synth_consistencies() {
  static const std::array<Consistency, 3> c{Consistency::thin, Consistency::mildly_thick, Consistency::porridge};
  return c;
}

/// Recording j of the corpus (padding included) plus its annotation. Pure
/// function of (config, j); the file name is left empty.
inline std::pair<AudioSignal, SegmentAnnotation> synthesize_recording(const SynthConfig& config, std::size_t j) {
  const bool dysphagic = j >= static_cast<std::size_t>(config.n_normal);
  const std::size_t within = dysphagic ? j - static_cast<std::size_t>(config.n_normal) : j;
  Rng rng(derive_seed(config.seed, j));
  const Label label = dysphagic ? Label::dysphagic : Label::normal;
  const auto event = synthesize_swallow(label, config, rng);

  const auto pad = static_cast<std::size_t>(std::llround(config.padding_s * config.sample_rate_hz));
  AudioSignal signal;
  signal.sample_rate_hz = config.sample_rate_hz;
  signal.samples.resize(event.size() + 2 * pad);
  for (auto& v : signal.samples) v = 0.002 * rng.normal();
  for (std::size_t i = 0; i < event.size(); ++i) signal.samples[pad + i] = std::clamp(event[i] + signal.samples[pad + i], -1.0, 1.0);

  SegmentAnnotation a;
  a.start_s = static_cast<double>(pad) / config.sample_rate_hz;
  a.end_s = static_cast<double>(pad + event.size()) / config.sample_rate_hz;
  a.label = label;
  a.consistency = synth_consistencies()[within % 3];
  char subject[16];
  std::snprintf(subject, sizeof subject, "%c%02zu", dysphagic ? 'D' : 'N', within % (dysphagic ? 18 : 14) + 1);
  a.subject_id = subject;
  return {std::move(signal), std::move(a)};
}

/// Writes swallow_NNNN.wav for every swallow (normal ones first) and an
/// annotations.csv whose `file` column names each recording.
inline SynthCorpus generate_synthetic_corpus(const SynthConfig& config, const std::string& out_dir) {
  config.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw Error(Errc::io, "cannot create output directory '" + out_dir + "'");

  SynthCorpus corpus;
  const std::size_t total = static_cast<std::size_t>(config.n_normal) + static_cast<std::size_t>(config.n_dysphagic);
  for (std::size_t j = 0; j < total; ++j) {
    auto [signal, annotation] = synthesize_recording(config, j);
    char name[48];
    std::snprintf(name, sizeof name, "swallow_%04zu.wav", j + 1);
    const std::string path = (fs::path(out_dir) / name).string();
    corpus.wav_files.push_back(path);
    write_wav(path, signal);
    annotation.file = name;
    corpus.annotations.push_back(std::move(annotation));
  }
  corpus.annotations_path = (fs::path(out_dir) / "annotations.csv").string();
  csv::write_file(corpus.annotations_path, format_annotations(corpus.annotations, true));
  return corpus;
}

struct ClusterConfig {
  int n_per_class = 100;
  /// Dysphagic mean offset per feature; its length sets the feature count.
  std::vector<double> shift = std::vector<double>(kFeatureCount, 0.0);
  std::uint64_t seed = 42;
};

/// Unit-variance Gaussian rows; dysphagic rows are offset by `shift`. Normal
/// rows come first.
inline LabeledDataset generate_feature_clusters(const ClusterConfig& config) {
  if (config.n_per_class < 2) throw Error(Errc::parameter, "need at least two rows per class");
  if (config.shift.empty()) throw Error(Errc::parameter, "shift vector defines the feature count and cannot be empty");
  Rng rng(config.seed);
  const auto n = static_cast<Eigen::Index>(2 * config.n_per_class);
  const auto d = static_cast<Eigen::Index>(config.shift.size());
  LabeledDataset data;
  data.X.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool dysphagic = i >= config.n_per_class;
    for (Eigen::Index j = 0; j < d; ++j) {
      data.X(i, j) = rng.normal() + (dysphagic ? config.shift[static_cast<std::size_t>(j)] : 0.0);
    }
    data.y.push_back(dysphagic ? Label::dysphagic : Label::normal);
    data.ids.push_back("row" + std::to_string(i));
  }
  return data;
}

}  // namespace swallow
