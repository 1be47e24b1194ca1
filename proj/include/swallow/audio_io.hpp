#pragma once

// WAV input/output, swallow annotation files, and segment slicing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "swallow/csv.hpp"
#include "swallow/error.hpp"

namespace swallow {

enum class Label { normal = 0, dysphagic = 1 };

enum class Consistency { thin, mildly_thick, porridge, unknown };

inline const char* to_string(Label label) {
  return label == Label::normal ? "normal" : "dysphagic";
}

inline const char* to_string(Consistency c) {
  switch (c) {
    case Consistency::thin: return "thin";
    case Consistency::mildly_thick: return "mildly_thick";
    case Consistency::porridge: return "porridge";
    case Consistency::unknown: return "unknown";
  }
  return "unknown";
}

inline std::optional<Label> parse_label(std::string_view token) {
  if (token == "normal") return Label::normal;
  if (token == "dysphagic") return Label::dysphagic;
  return std::nullopt;
}

inline std::optional<Consistency> parse_consistency(std::string_view token) {
  if (token == "thin") return Consistency::thin;
  if (token == "mildly_thick") return Consistency::mildly_thick;
  if (token == "porridge") return Consistency::porridge;
  if (token == "unknown") return Consistency::unknown;
  return std::nullopt;
}

/// Mono recording. Samples lie in [-1, 1].
struct AudioSignal {
  std::vector<double> samples;
  int sample_rate_hz = 0;

  double duration_s() const {
    return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }
};

struct SegmentAnnotation {
  double start_s = 0.0;
  double end_s = 0.0;
  Label label = Label::normal;
  Consistency consistency = Consistency::unknown;
  std::string subject_id;
  /// Recording the interval refers to, relative to the annotation file.
  /// Empty when the file annotates a single recording given elsewhere.
  std::string file;
};

struct AudioSegment {
  SegmentAnnotation annotation;
  std::vector<double> samples;
  int sample_rate_hz = 0;
};

namespace detail {

inline std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

inline void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

}  // namespace detail

/// Decodes an in-memory RIFF/WAVE image. Accepts mono 16-bit PCM and 32/64-bit
/// IEEE float (also via WAVE_FORMAT_EXTENSIBLE). Unknown chunks are skipped.
inline AudioSignal decode_wav(std::span<const unsigned char> bytes) {
  constexpr std::uint16_t kPcm = 1;
  constexpr std::uint16_t kFloat = 3;
  constexpr std::uint16_t kExtensible = 0xFFFE;

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(Errc::format, "not a RIFF/WAVE file");
  }

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
  bool have_fmt = false;
  std::span<const unsigned char> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = detail::le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) {
      // A truncated data chunk is tolerated (streaming writers leave the size
      // unpatched); any other overrun is a malformed header.
      if (std::memcmp(chunk, "data", 4) != 0) throw Error(Errc::format, "chunk overruns file");
    }
    const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw Error(Errc::format, "fmt chunk too small");
      const unsigned char* f = bytes.data() + body;
      format = detail::le16(f);
      channels = detail::le16(f + 2);
      rate = detail::le32(f + 4);
      block_align = detail::le16(f + 12);
      bits = detail::le16(f + 14);
      if (format == kExtensible) {
        if (avail < 26) throw Error(Errc::format, "extensible fmt chunk too small");
        format = detail::le16(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.subspan(body, avail);
      have_data = true;
    }
    pos = body + avail + (avail & 1u);
  }

  if (!have_fmt) throw Error(Errc::format, "missing fmt chunk");
  if (!have_data) throw Error(Errc::format, "missing data chunk");
  if (channels == 0 || rate == 0 || block_align == 0) throw Error(Errc::format, "invalid fmt fields");
  if (channels != 1) {
    throw Error(Errc::unsupported_layout, std::to_string(channels) + " channels; only mono is accepted");
  }
  const bool pcm16 = format == kPcm && bits == 16;
  const bool float32 = format == kFloat && bits == 32;
  const bool float64 = format == kFloat && bits == 64;
  if (!pcm16 && !float32 && !float64) {
    throw Error(Errc::unsupported_codec,
                "format tag " + std::to_string(format) + " with " + std::to_string(bits) + " bits");
  }
  if (block_align != bits / 8) throw Error(Errc::format, "block align does not match sample width");

  AudioSignal signal;
  signal.sample_rate_hz = static_cast<int>(rate);
  const std::size_t count = data.size() / block_align;
  signal.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned char* p = data.data() + i * block_align;
    double value = 0.0;
    if (pcm16) {
      value = static_cast<std::int16_t>(detail::le16(p)) / 32768.0;
    } else if (float32) {
      const std::uint32_t raw = detail::le32(p);
      float f;
      std::memcpy(&f, &raw, sizeof f);
      value = f;
    } else {
      const std::uint64_t raw = detail::le32(p) | (static_cast<std::uint64_t>(detail::le32(p + 4)) << 32);
      std::memcpy(&value, &raw, sizeof value);
    }
    if (!(value >= -1.0 && value <= 1.0)) {
      throw Error(Errc::format, "sample " + std::to_string(i) + " outside [-1, 1]");
    }
    signal.samples[i] = value;
  }
  return signal;
}

inline AudioSignal read_wav(const std::string& path) {
  const std::string raw = csv::read_file(path);
  try {
    return decode_wav(std::span(reinterpret_cast<const unsigned char*>(raw.data()), raw.size()));
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

/// Encodes mono 16-bit PCM. Values are clamped to [-1, 1] and scaled by
/// 32768 with +1.0 saturating at 32767.
inline std::string encode_wav_pcm16(std::span<const double> samples, int sample_rate_hz) {
  if (sample_rate_hz <= 0) throw Error(Errc::parameter, "sample rate must be positive");
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  detail::put32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  detail::put32(out, 16);
  detail::put16(out, 1);
  detail::put16(out, 1);
  detail::put32(out, static_cast<std::uint32_t>(sample_rate_hz));
  detail::put32(out, static_cast<std::uint32_t>(sample_rate_hz) * 2);
  detail::put16(out, 2);
  detail::put16(out, 16);
  out += "data";
  detail::put32(out, data_bytes);
  for (double s : samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto q = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    detail::put16(out, static_cast<std::uint16_t>(q));
  }
  return out;
}

inline void write_wav(const std::string& path, const AudioSignal& signal) {
  csv::write_file(path, encode_wav_pcm16(signal.samples, signal.sample_rate_hz));
}

/// Parses annotation CSV text with header `start_s,end_s,label,consistency,subject_id`
/// and an optional trailing `file` column. `#` lines and blank lines are ignored.
/// Errors name the 1-based line number.
inline std::vector<SegmentAnnotation> parse_annotations_text(std::string_view text) {
  const auto rows = csv::lines(text);
  std::vector<SegmentAnnotation> out;
  bool have_header = false;
  bool with_file = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string line_no = "line " + std::to_string(i + 1);
    const std::string_view line = csv::trim(rows[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = csv::split(line);
    if (!have_header) {
      const std::vector<std::string> base{"start_s", "end_s", "label", "consistency", "subject_id"};
      with_file = fields.size() == 6 && fields[5] == "file";
      if (!std::equal(base.begin(), base.end(), fields.begin(), fields.begin() + std::min(fields.size(), base.size())) ||
          fields.size() != (with_file ? 6u : 5u)) {
        throw Error(Errc::format, line_no + ": expected header start_s,end_s,label,consistency,subject_id[,file]");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != (with_file ? 6u : 5u)) {
      throw Error(Errc::format, line_no + ": expected " + std::to_string(with_file ? 6 : 5) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    SegmentAnnotation a;
    a.start_s = csv::require_double(fields[0], line_no + " start_s");
    a.end_s = csv::require_double(fields[1], line_no + " end_s");
    if (!std::isfinite(a.start_s) || !std::isfinite(a.end_s) || a.start_s < 0.0) {
      throw Error(Errc::range, line_no + ": start_s must be a finite value >= 0");
    }
    if (a.end_s <= a.start_s) throw Error(Errc::range, line_no + ": end_s must exceed start_s");
    const auto label = parse_label(fields[2]);
    if (!label) throw Error(Errc::vocabulary, line_no + ": unknown label '" + fields[2] + "'");
    const auto consistency = parse_consistency(fields[3]);
    if (!consistency) throw Error(Errc::vocabulary, line_no + ": unknown consistency '" + fields[3] + "'");
    a.label = *label;
    a.consistency = *consistency;
    a.subject_id = fields[4];
    if (with_file) a.file = fields[5];
    out.push_back(std::move(a));
  }
  if (!have_header) throw Error(Errc::format, "annotation file has no header");
  return out;
}

inline std::vector<SegmentAnnotation> parse_annotations(const std::string& path) {
  const std::string text = csv::read_file(path);
  try {
    return parse_annotations_text(text);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

inline std::string format_annotations(std::span<const SegmentAnnotation> annotations, bool with_file) {
  std::string out = with_file ? "start_s,end_s,label,consistency,subject_id,file\n"
                              : "start_s,end_s,label,consistency,subject_id\n";
  for (const auto& a : annotations) {
    out += csv::format_real(a.start_s) + "," + csv::format_real(a.end_s) + "," + to_string(a.label) + "," +
           to_string(a.consistency) + "," + a.subject_id;
    if (with_file) out += "," + a.file;
    out += "\n";
  }
  return out;
}

/// Sample range [first, last) covered by an annotation at the given rate.
inline std::pair<std::size_t, std::size_t> sample_range(const SegmentAnnotation& a, int sample_rate_hz) {
  const auto first = static_cast<std::size_t>(std::llround(a.start_s * sample_rate_hz));
  const auto last = static_cast<std::size_t>(std::llround(a.end_s * sample_rate_hz));
  return {first, last};
}

/// Copies each annotated interval out of `signal`, in annotation order.
/// Overlapping annotations are allowed.
inline std::vector<AudioSegment> slice_segments(const AudioSignal& signal,
                                                std::span<const SegmentAnnotation> annotations) {
  std::vector<AudioSegment> out;
  out.reserve(annotations.size());
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const auto& a = annotations[i];
    const auto [first, last] = sample_range(a, signal.sample_rate_hz);
    if (last > signal.samples.size() || first >= last) {
      throw Error(Errc::out_of_range, "annotation " + std::to_string(i) + " [" + csv::format_real(a.start_s) + ", " +
                                          csv::format_real(a.end_s) + "] s exceeds recording of " +
                                          csv::format_real(signal.duration_s()) + " s");
    }
    AudioSegment seg;
    seg.annotation = a;
    seg.sample_rate_hz = signal.sample_rate_hz;
    seg.samples.assign(signal.samples.begin() + static_cast<std::ptrdiff_t>(first),
                       signal.samples.begin() + static_cast<std::ptrdiff_t>(last));
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace swallow
