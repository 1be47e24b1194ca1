#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support.hpp"
#include "swallow/features.hpp"
#include "swallow/random.hpp"

using namespace swallow;

namespace {

AudioSegment segment(std::vector<double> samples, int rate = 4000) {
  AudioSegment s;
  s.samples = std::move(samples);
  s.sample_rate_hz = rate;
  return s;
}

std::vector<double> noise(std::size_t n, std::uint64_t seed, double sd = 0.3) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal(0.0, sd);
  return x;
}

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

}  // namespace

TEST(FrameSignal, CountsAndOffsets) {
  std::vector<double> x(200);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  EXPECT_EQ(frame_signal(std::span<const double>(x.data(), 100), 100, 40).size(), 1u);
  const auto frames = frame_signal(x, 100, 40);
  ASSERT_EQ(frames.size(), 3u);
  EXPECT_EQ(frames[0][0], 0.0);
  EXPECT_EQ(frames[1][0], 40.0);
  EXPECT_EQ(frames[2][0], 80.0);
  EXPECT_EQ(frames[2].size(), 100u);
  try {
    frame_signal(std::span<const double>(x.data(), 50), 100, 40);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::too_short);
  }
}

TEST(FrameConfig, DefaultsAt4kHz) {
  FrameConfig c;
  EXPECT_EQ(c.frame_samples(4000), 100);
  EXPECT_EQ(c.hop_samples(4000), 40);
  EXPECT_EQ(c.fft_points(4000), 128);
}

TEST(Spectrum, ZeroFrame) {
  for (double v : magnitude_spectrum(std::vector<double>(100, 0.0), 128, Window::hamming)) EXPECT_EQ(v, 0.0);
}

TEST(Spectrum, MatchesNaiveDft) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t len : {2u, 7u, 64u, 100u, 128u, 200u, 256u}) {
    const std::size_t n = std::bit_ceil(len);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> frame(len);
      for (auto& v : frame) v = u(gen);
      const auto w = oracle::hamming(len);
      std::vector<double> windowed(len);
      for (std::size_t i = 0; i < len; ++i) windowed[i] = frame[i] * (len > 1 ? w[i] : 1.0);
      const auto ref = oracle::naive_dft_magnitudes(windowed, n);
      const auto got = magnitude_spectrum(frame, static_cast<int>(n), Window::hamming);
      ASSERT_EQ(got.size(), n / 2 + 1);
      for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_LT(std::abs(got[k] - ref[k]), 1e-9);
    }
  }
}

TEST(Spectrum, BinCentredSinePeaks) {
  std::vector<double> x(128);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * std::numbers::pi * 16.0 * static_cast<double>(i) / 128.0);
  const auto mag = magnitude_spectrum(x, 128, Window::rectangular);
  EXPECT_EQ(std::max_element(mag.begin(), mag.end()) - mag.begin(), 16);
}

TEST(Mfcc, SilenceIsExactlyZero) {
  const std::vector<std::vector<double>> spectra(3, std::vector<double>(65, 0.0));
  for (const auto& c : mfcc(spectra, {}, 4000)) {
    ASSERT_EQ(c.size(), 13u);
    for (double v : c) EXPECT_EQ(v, 0.0);
  }
}

TEST(Mfcc, MatchesIndependentReference) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto x = noise(100, seed);
    // two-tap moving average for a band-limited frame
    for (std::size_t i = x.size() - 1; i > 0; --i) x[i] = 0.5 * (x[i] + x[i - 1]);
    const auto mag = magnitude_spectrum(x, 128, Window::hamming);
    const auto got = mfcc({mag}, {}, 4000).front();
    const auto ref = oracle::reference_mfcc(mag, 4000, 20, 0.0, 2000.0);
    for (std::size_t k = 0; k < 13; ++k) EXPECT_NEAR(got[k], ref[k], 1e-6);
  }
  MelConfig narrow;
  narrow.n_filters = 26;
  narrow.f_min_hz = 100.0;
  narrow.f_max_hz = 1800.0;
  const auto mag = magnitude_spectrum(noise(100, 77), 128, Window::hamming);
  const auto got = mfcc({mag}, narrow, 4000).front();
  const auto ref = oracle::reference_mfcc(mag, 4000, 26, 100.0, 1800.0);
  for (std::size_t k = 0; k < 13; ++k) EXPECT_NEAR(got[k], ref[k], 1e-6);
}

TEST(Mfcc, ConfigValidation) {
  MelConfig bad;
  bad.f_max_hz = 3000.0;
  EXPECT_THROW(mel_filterbank(bad, 4000, 128), Error);
}

TEST(SpectralDescriptors, FlatSpectrum) {
  const auto d = spectral_descriptors({std::vector<double>(65, 0.7)}, 4000).front();
  EXPECT_NEAR(d.flatness, 1.0, 1e-12);
  EXPECT_NEAR(d.crest, 1.0, 1e-12);
  EXPECT_NEAR(d.entropy, 1.0, 1e-12);
}

TEST(SpectralDescriptors, SingleBin) {
  std::vector<double> mag(65, 0.0);
  mag[32] = 2.0;  // 32 * 4000 / 128 = 1000 Hz
  const auto d = spectral_descriptors({mag}, 4000).front();
  EXPECT_NEAR(d.centroid, 1000.0, 1e-9);
  EXPECT_NEAR(d.spread, 0.0, 1e-9);
  EXPECT_NEAR(d.crest, 65.0, 1e-9);
  EXPECT_NEAR(d.rolloff, 1000.0, 1e-9);
  EXPECT_EQ(d.skewness, 0.0);
  EXPECT_EQ(d.kurtosis, 0.0);
}

TEST(SpectralDescriptors, FluxOfRepeatedFrame) {
  const auto mag = magnitude_spectrum(noise(100, 5), 128, Window::hamming);
  const auto d = spectral_descriptors({mag, mag}, 4000);
  EXPECT_EQ(d[0].flux, 0.0);
  EXPECT_EQ(d[1].flux, 0.0);
}

TEST(SpectralDescriptors, ZeroFrameDefaults) {
  const auto d = spectral_descriptors({std::vector<double>(65, 0.0)}, 4000).front();
  EXPECT_EQ(d.centroid, 0.0);
  EXPECT_EQ(d.spread, 0.0);
  EXPECT_EQ(d.rolloff, 0.0);
  EXPECT_EQ(d.flux, 0.0);
  EXPECT_EQ(d.entropy, 1.0);
  EXPECT_EQ(d.flatness, 1.0);
  EXPECT_EQ(d.crest, 1.0);
}

TEST(SpectralDescriptors, MomentsMatchDirectFormula) {
  const auto mag = magnitude_spectrum(noise(100, 9), 128, Window::hamming);
  const auto d = spectral_descriptors({mag}, 4000).front();
  double total = 0.0;
  for (double m : mag) total += m;
  double c = 0.0;
  for (std::size_t k = 0; k < mag.size(); ++k) c += mag[k] / total * (k * 31.25);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (std::size_t k = 0; k < mag.size(); ++k) {
    const double dev = k * 31.25 - c;
    m2 += mag[k] / total * dev * dev;
    m3 += mag[k] / total * dev * dev * dev;
    m4 += mag[k] / total * dev * dev * dev * dev;
  }
  EXPECT_NEAR(d.centroid, c, 1e-9);
  EXPECT_NEAR(d.spread, std::sqrt(m2), 1e-9);
  EXPECT_NEAR(d.skewness, m3 / std::pow(m2, 1.5), 1e-9);
  EXPECT_NEAR(d.kurtosis, m4 / (m2 * m2), 1e-9);
}

TEST(TimeDomain, ZeroCrossingRate) {
  EXPECT_EQ(zero_crossing_rate(std::vector<double>(50, 0.3)), 0.0);
  std::vector<double> alt(100);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? -1.0 : 1.0;
  EXPECT_EQ(zero_crossing_rate(alt), 1.0);
  // Phase offset keeps samples away from exact zeros, so each cycle crosses twice.
  std::vector<double> sine(4000);
  for (std::size_t i = 0; i < sine.size(); ++i) {
    sine[i] = std::sin(2.0 * std::numbers::pi * 100.0 * static_cast<double>(i) / 4000.0 + std::numbers::pi / 7.0);
  }
  EXPECT_NEAR(zero_crossing_rate(sine), 200.0 / 3999.0, 1e-12);
}

TEST(TimeDomain, ShortTermEnergy) {
  EXPECT_EQ(short_term_energy(std::vector<double>(10, 0.0)), 0.0);
  EXPECT_EQ(short_term_energy(std::vector<double>(10, 1.0)), 1.0);
  std::vector<double> sine(400);
  for (std::size_t i = 0; i < sine.size(); ++i) sine[i] = 0.5 * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 40.0);
  EXPECT_NEAR(short_term_energy(sine), 0.125, 1e-12);
}

TEST(TimeDomain, HarmonicRatio) {
  EXPECT_EQ(pitch_lags(4000).min_lag, 4);
  EXPECT_EQ(pitch_lags(4000).max_lag, 66);
  EXPECT_EQ(harmonic_ratio(std::vector<double>(100, 0.0), 4000), 0.0);
  std::vector<double> sine(100);
  for (std::size_t i = 0; i < sine.size(); ++i) sine[i] = std::sin(2.0 * std::numbers::pi * 200.0 * static_cast<double>(i) / 4000.0);
  EXPECT_GE(harmonic_ratio(sine, 4000), 0.95);
  EXPECT_THROW(harmonic_ratio(std::vector<double>(30, 1.0), 4000), Error);
}

TEST(TimeDomain, HarmonicRatioOfNoiseIsLow) {
  int below = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) below += harmonic_ratio(noise(100, seed), 4000) < 0.5;
  EXPECT_GE(below, 990);
}

TEST(FeatureVector, NamesAndArity) {
  EXPECT_EQ(feature_names().size(), 25u);
  EXPECT_EQ(feature_names()[feature::crest], "crest");
  EXPECT_EQ(feature_names()[feature::zcr], "zcr");
  EXPECT_EQ(feature_names()[0], "mfcc1");
  EXPECT_EQ(feature_names()[12], "mfcc13");
}

TEST(FeatureVector, SingleFrameIsIdentity) {
  const auto seg = segment(noise(100, 3));
  const auto rows = frame_features(seg, {}, {});
  ASSERT_EQ(rows.size(), 1u);
  const auto v = extract_feature_vector(seg);
  for (std::size_t i = 0; i < kFeatureCount; ++i) EXPECT_EQ(v[i], rows[0][i]);
}

TEST(FeatureVector, TwoFrameMean) {
  // 140 samples, 100-sample frames, 40-sample hop: frames start at 0 and 40.
  std::vector<double> x(140);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = i < 70 ? (i % 2 ? 0.5 : -0.5) : 0.25;
  const auto seg = segment(x);
  const auto v = extract_feature_vector(seg);
  // Frame 0 covers samples 0..99 (69 crossings), frame 1 covers 40..139 (29 crossings).
  double zcr0 = 0.0, zcr1 = 0.0;
  for (std::size_t i = 1; i < 100; ++i) zcr0 += (x[i] >= 0) != (x[i - 1] >= 0);
  for (std::size_t i = 41; i < 140; ++i) zcr1 += (x[i] >= 0) != (x[i - 1] >= 0);
  const double e0 = (70 * 0.25 + 30 * 0.0625) / 100.0;
  const double e1 = (30 * 0.25 + 70 * 0.0625) / 100.0;
  EXPECT_NEAR(v[feature::zcr], (zcr0 / 99.0 + zcr1 / 99.0) / 2.0, 1e-9);
  EXPECT_NEAR(v[feature::zcr], (69.0 / 99.0 + 29.0 / 99.0) / 2.0, 1e-9);
  EXPECT_NEAR(v[feature::energy], (e0 + e1) / 2.0, 1e-9);
  const auto rows = frame_features(seg, {}, {});
  ASSERT_EQ(rows.size(), 2u);
  for (std::size_t i = 0; i < kFeatureCount; ++i) EXPECT_NEAR(v[i], (rows[0][i] + rows[1][i]) / 2.0, 1e-9);
}

TEST(FeatureVector, AmplitudeScaling) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto x = noise(800, seed);
    const auto base = extract_feature_vector(segment(x));
    for (double c : {0.01, 0.5, 3.0}) {
      std::vector<double> y = x;
      for (auto& v : y) v *= c;
      const auto scaled = extract_feature_vector(segment(y));
      for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (i == feature::energy) {
          EXPECT_TRUE(close_rel(scaled[i], c * c * base[i], 1e-9)) << feature_names()[i];
        } else {
          EXPECT_TRUE(close_rel(scaled[i], base[i], 1e-9)) << feature_names()[i] << " c=" << c;
        }
      }
    }
  }
}

TEST(FeatureVector, FiniteAndBounded) {
  std::vector<std::vector<double>> inputs{std::vector<double>(400, 0.0), std::vector<double>(400, 1.0), noise(400, 8)};
  std::vector<double> impulse(400, 0.0);
  impulse[123] = 1.0;
  inputs.push_back(impulse);
  for (const auto& x : inputs) {
    const auto v = extract_feature_vector(segment(x));
    for (std::size_t i = 0; i < kFeatureCount; ++i) EXPECT_TRUE(std::isfinite(v[i])) << feature_names()[i];
    EXPECT_GE(v[feature::crest], 1.0 - 1e-12);
    for (auto i : {feature::entropy, feature::flatness, feature::harmonic_ratio, feature::zcr}) {
      EXPECT_GE(v[i], 0.0);
      EXPECT_LE(v[i], 1.0);
    }
    EXPECT_GE(v[feature::flux], 0.0);
    EXPECT_GE(v[feature::energy], 0.0);
  }
}

TEST(FeatureVector, TooShortSegment) {
  try {
    extract_feature_vector(segment(std::vector<double>(50, 0.1)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::too_short);
  }
}
