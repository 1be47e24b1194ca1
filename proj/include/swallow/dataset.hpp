#pragma once

// Labelled feature tables and the feature CSV format:
//   segment_id,label,consistency,subject_id,mfcc1..mfcc13,centroid,...,energy

#include <Eigen/Core>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "swallow/audio_io.hpp"
#include "swallow/csv.hpp"
#include "swallow/error.hpp"
#include "swallow/features.hpp"

namespace swallow {

/// Feature rows with integer labels (normal = 0, dysphagic = 1).
struct LabeledDataset {
  Eigen::MatrixXd X;
  std::vector<Label> y;
  std::vector<std::string> ids;

  std::size_t size() const { return y.size(); }
  std::size_t n_features() const { return static_cast<std::size_t>(X.cols()); }

  void validate() const {
    if (static_cast<std::size_t>(X.rows()) != y.size() || ids.size() != y.size()) {
      throw Error(Errc::shape, "dataset rows, labels and ids differ in length");
    }
    if (!X.allFinite()) throw Error(Errc::domain, "dataset contains non-finite features");
  }

  std::size_t count(Label label) const {
    std::size_t n = 0;
    for (Label l : y) n += (l == label);
    return n;
  }

  LabeledDataset subset(std::span<const std::size_t> rows) const {
    LabeledDataset out;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
    out.y.reserve(rows.size());
    out.ids.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.X.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
      out.y.push_back(y[rows[i]]);
      out.ids.push_back(ids[rows[i]]);
    }
    return out;
  }
};

/// One extracted segment with its annotation metadata.
struct FeatureRecord {
  std::string segment_id;
  Label label = Label::normal;
  Consistency consistency = Consistency::unknown;
  std::string subject_id;
  FeatureVector features;
};

using FeatureTable = std::vector<FeatureRecord>;

inline LabeledDataset to_dataset(const FeatureTable& table) {
  LabeledDataset data;
  data.X.resize(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = table[i].features[j];
    }
    data.y.push_back(table[i].label);
    data.ids.push_back(table[i].segment_id);
  }
  return data;
}

inline std::string feature_csv_header() {
  std::string header = "segment_id,label,consistency,subject_id";
  for (const auto& name : feature_names()) header += "," + name;
  return header;
}

inline std::string format_feature_csv(const FeatureTable& table) {
  std::string out = feature_csv_header() + "\n";
  for (const auto& r : table) {
    out += r.segment_id + "," + to_string(r.label) + "," + to_string(r.consistency) + "," + r.subject_id;
    for (double v : r.features.values) out += "," + csv::format_real(v);
    out += "\n";
  }
  return out;
}

inline FeatureTable parse_feature_csv_text(std::string_view text) {
  const auto rows = csv::lines(text);
  FeatureTable table;
  bool have_header = false;
  const std::size_t n_fields = 4 + kFeatureCount;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string line_no = "line " + std::to_string(i + 1);
    const auto line = csv::trim(rows[i]);
    if (line.empty() || line.front() == '#') continue;
    if (!have_header) {
      if (line != feature_csv_header()) throw Error(Errc::format, line_no + ": unexpected feature CSV header");
      have_header = true;
      continue;
    }
    const auto fields = csv::split(line);
    if (fields.size() != n_fields) {
      throw Error(Errc::format, line_no + ": expected " + std::to_string(n_fields) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    FeatureRecord r;
    r.segment_id = fields[0];
    const auto label = parse_label(fields[1]);
    if (!label) throw Error(Errc::vocabulary, line_no + ": unknown label '" + fields[1] + "'");
    const auto consistency = parse_consistency(fields[2]);
    if (!consistency) throw Error(Errc::vocabulary, line_no + ": unknown consistency '" + fields[2] + "'");
    r.label = *label;
    r.consistency = *consistency;
    r.subject_id = fields[3];
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      r.features[j] = csv::require_double(fields[4 + j], line_no + " " + feature_names()[j]);
      if (!std::isfinite(r.features[j])) throw Error(Errc::format, line_no + ": non-finite feature value");
    }
    table.push_back(std::move(r));
  }
  if (!have_header) throw Error(Errc::format, "feature CSV has no header");
  return table;
}

inline FeatureTable read_feature_csv(const std::string& path) {
  const std::string text = csv::read_file(path);
  try {
    return parse_feature_csv_text(text);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

}  // namespace swallow
