#pragma once

#include <stdexcept>
#include <string>

namespace swallow {

/// Failure categories. The CLI maps these onto process exit codes.
enum class Errc {
  io,                  ///< file missing, unreadable or unwritable
  format,              ///< malformed WAV header or CSV/JSON content
  unsupported_layout,  ///< WAV with more than one channel
  unsupported_codec,   ///< WAV sample encoding other than PCM16 / float
  vocabulary,          ///< unknown label or consistency token
  range,               ///< annotation with end <= start
  out_of_range,        ///< annotation past the end of its recording
  too_short,           ///< segment shorter than one analysis frame
  domain,              ///< non-finite or negative argument
  degenerate_data,     ///< every pooled value tied
  grouping,            ///< grouping produced an empty or undersized group
  dimension,           ///< requested dimension out of range
  parameter,           ///< invalid algorithm parameter
  shape,               ///< mismatched lengths
  empty_node,          ///< impurity of a node without samples
  training,            ///< classifier cannot be trained on this data
  undefined_importance,
  stratification,
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::io: return "io";
    case Errc::format: return "format";
    case Errc::unsupported_layout: return "unsupported-layout";
    case Errc::unsupported_codec: return "unsupported-codec";
    case Errc::vocabulary: return "vocabulary";
    case Errc::range: return "range";
    case Errc::out_of_range: return "out-of-range";
    case Errc::too_short: return "too-short";
    case Errc::domain: return "domain";
    case Errc::degenerate_data: return "degenerate-data";
    case Errc::grouping: return "grouping";
    case Errc::dimension: return "dimension";
    case Errc::parameter: return "parameter";
    case Errc::shape: return "shape";
    case Errc::empty_node: return "empty-node";
    case Errc::training: return "training";
    case Errc::undefined_importance: return "undefined-importance";
    case Errc::stratification: return "stratification";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + " error: " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace swallow
