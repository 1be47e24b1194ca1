#pragma once

// Repeated stratified hold-out evaluation of the random forest: confusion
// matrices, derived metrics with mean and sample SD across iterations, and
// per-feature median importance.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numeric>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "swallow/csv.hpp"
#include "swallow/dataset.hpp"
#include "swallow/error.hpp"
#include "swallow/random.hpp"
#include "swallow/random_forest.hpp"

namespace swallow {

struct TrainTestSplit {
  LabeledDataset train;
  LabeledDataset test;
};

/// Shuffles each class separately and sends round(class size x fraction) of
/// it to training. Both halves keep the original row order.
inline TrainTestSplit stratified_split(const LabeledDataset& data, double train_fraction, Rng& rng) {
  data.validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(Errc::parameter, "train fraction must lie strictly between 0 and 1");
  }
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (Label label : {Label::normal, Label::dysphagic}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.y[i] == label) members.push_back(i);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(members.size()) * train_fraction));
    if (members.size() < 2 || n_train == 0 || n_train == members.size()) {
      throw Error(Errc::stratification, std::string("class '") + to_string(label) + "' with " +
                                            std::to_string(members.size()) +
                                            " member(s) cannot appear in both training and test sets");
    }
    rng.shuffle(members);
    train_rows.insert(train_rows.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    test_rows.insert(test_rows.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {data.subset(train_rows), data.subset(test_rows)};
}

/// Dysphagic is the positive class.
struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> truth) {
  if (predictions.size() != truth.size()) {
    throw Error(Errc::shape, std::to_string(predictions.size()) + " predictions for " + std::to_string(truth.size()) +
                                 " labels");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool predicted = predictions[i] == Label::dysphagic;
    const bool actual = truth[i] == Label::dysphagic;
    if (predicted && actual) ++cm.tp;
    else if (predicted) ++cm.fp;
    else if (actual) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

struct Metrics {
  double precision = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
};

namespace detail {
inline double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }
}  // namespace detail

/// Standard rates; any 0/0 is reported as 0.
inline Metrics metrics(const ConfusionMatrix& cm) {
  if (cm.total() <= 0) throw Error(Errc::parameter, "metrics of an empty confusion matrix");
  const auto tp = static_cast<double>(cm.tp);
  const auto fp = static_cast<double>(cm.fp);
  const auto fn = static_cast<double>(cm.fn);
  const auto tn = static_cast<double>(cm.tn);
  Metrics m;
  m.precision = detail::ratio(tp, tp + fp);
  m.sensitivity = detail::ratio(tp, tp + fn);
  m.specificity = detail::ratio(tn, tn + fp);
  m.accuracy = (tp + tn) / static_cast<double>(cm.total());
  m.f1 = detail::ratio(2.0 * m.precision * m.sensitivity, m.precision + m.sensitivity);
  return m;
}

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  ///< sample SD (n - 1); 0 for a single value
};

inline MeanSd mean_sd(std::span<const double> values) {
  MeanSd out;
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

inline double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

struct EvaluationConfig {
  int iterations = 11;
  double train_fraction = 0.6;
  ForestParams forest;
  std::uint64_t seed = 42;
  /// Iterations evaluated concurrently; does not affect the report.
  int threads = 1;
};

struct IterationRecord {
  ConfusionMatrix confusion;
  Metrics metrics;
  std::vector<double> importance;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

/// The nine reported attributes, in table order.
inline const std::array<std::string, 9>& attribute_names() {
  static const std::array<std::string, 9> names{"true_positives", "false_positives", "false_negatives",
                                                "true_negatives", "precision",       "sensitivity",
                                                "specificity",    "accuracy",        "f1"};
  return names;
}

inline std::array<double, 9> attribute_values(const IterationRecord& r) {
  return {static_cast<double>(r.confusion.tp), static_cast<double>(r.confusion.fp),
          static_cast<double>(r.confusion.fn), static_cast<double>(r.confusion.tn),
          r.metrics.precision,                 r.metrics.sensitivity,
          r.metrics.specificity,               r.metrics.accuracy,
          r.metrics.f1};
}

struct EvaluationReport {
  EvaluationConfig config;
  std::vector<IterationRecord> iterations;
  std::array<MeanSd, 9> aggregate{};  ///< indexed like attribute_names()
  std::vector<double> importance_median;
};

/// Seeds of iteration i: split and forest streams derived from (seed, i).
inline std::pair<std::uint64_t, std::uint64_t> iteration_seeds(std::uint64_t seed, std::size_t i) {
  const std::uint64_t base = derive_seed(seed, i);
  return {derive_seed(base, 0), derive_seed(base, 1)};
}

inline IterationRecord evaluate_iteration(const LabeledDataset& data, const EvaluationConfig& config, std::size_t i) {
  const auto [split_seed, forest_seed] = iteration_seeds(config.seed, i);
  try {
    Rng rng(split_seed);
    const auto split = stratified_split(data, config.train_fraction, rng);
    ForestParams params = config.forest;
    params.seed = forest_seed;
    const auto forest = train_forest(split.train, params);
    std::vector<Label> predicted;
    for (const auto& p : predict_all(forest, split.test.X)) predicted.push_back(p.label);
    IterationRecord r;
    r.confusion = confusion(predicted, split.test.y);
    r.metrics = metrics(r.confusion);
    r.importance = feature_importance(forest);
    r.train_size = split.train.size();
    r.test_size = split.test.size();
    return r;
  } catch (const Error& e) {
    throw Error(e.code(), "iteration " + std::to_string(i + 1) + ": " + e.what());
  }
}

inline EvaluationReport repeated_evaluation(const LabeledDataset& data, const EvaluationConfig& config = {}) {
  if (config.iterations < 1) throw Error(Errc::parameter, "at least one iteration is required");
  data.validate();
  EvaluationReport report;
  report.config = config;
  report.iterations.resize(static_cast<std::size_t>(config.iterations));

  const auto workers = static_cast<std::size_t>(std::clamp(config.threads, 1, config.iterations));
  if (workers == 1) {
    for (std::size_t i = 0; i < report.iterations.size(); ++i) report.iterations[i] = evaluate_iteration(data, config, i);
  } else {
    std::vector<std::exception_ptr> errors(report.iterations.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < report.iterations.size(); i += workers) {
          try {
            report.iterations[i] = evaluate_iteration(data, config, i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (std::size_t a = 0; a < report.aggregate.size(); ++a) {
    std::vector<double> column;
    for (const auto& r : report.iterations) column.push_back(attribute_values(r)[a]);
    report.aggregate[a] = mean_sd(column);
  }
  const std::size_t d = data.n_features();
  report.importance_median.resize(d);
  for (std::size_t f = 0; f < d; ++f) {
    std::vector<double> column;
    for (const auto& r : report.iterations) column.push_back(r.importance[f]);
    report.importance_median[f] = median(std::move(column));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Export

inline nlohmann::json report_to_json(const EvaluationReport& report) {
  using nlohmann::json;
  const auto& c = report.config;
  json config{{"iterations", c.iterations},
              {"train_fraction", c.train_fraction},
              {"seed", c.seed},
              {"forest",
               {{"n_trees", c.forest.n_trees},
                {"max_features", c.forest.max_features},
                {"min_samples_leaf", c.forest.min_samples_leaf},
                {"max_depth", c.forest.max_depth},
                {"bootstrap", c.forest.bootstrap}}}};
  json iterations = json::array();
  for (std::size_t i = 0; i < report.iterations.size(); ++i) {
    const auto& r = report.iterations[i];
    iterations.push_back({{"iteration", i + 1},
                          {"train_size", r.train_size},
                          {"test_size", r.test_size},
                          {"confusion", {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn}, {"tn", r.confusion.tn}}},
                          {"metrics",
                           {{"precision", r.metrics.precision},
                            {"sensitivity", r.metrics.sensitivity},
                            {"specificity", r.metrics.specificity},
                            {"accuracy", r.metrics.accuracy},
                            {"f1", r.metrics.f1}}},
                          {"importance", r.importance}});
  }
  static const std::array<const char*, 4> cells{"tp", "fp", "fn", "tn"};
  json aggregate = json::object();
  json confusion_mean_sd = json::object();
  const auto& names = attribute_names();
  for (std::size_t a = 0; a < names.size(); ++a) {
    json cell{{"mean", report.aggregate[a].mean}, {"sd", report.aggregate[a].sd}};
    aggregate[names[a]] = cell;
    if (a < 4) confusion_mean_sd[cells[a]] = cell;
  }
  return {{"config", config},
          {"iterations", iterations},
          {"aggregate", aggregate},
          {"confusion_mean_sd", confusion_mean_sd},
          {"importance_median", report.importance_median},
          {"feature_names", std::vector<std::string>(feature_names().begin(), feature_names().end())}};
}

/// Spreadsheet summary: one row per attribute with mean and SD.
inline std::string report_summary_csv(const EvaluationReport& report) {
  std::string out = "attribute,mean,sd\n";
  const auto& names = attribute_names();
  for (std::size_t a = 0; a < names.size(); ++a) {
    out += names[a] + "," + csv::format_real(report.aggregate[a].mean) + "," +
           csv::format_real(report.aggregate[a].sd) + "\n";
  }
  for (std::size_t f = 0; f < report.importance_median.size(); ++f) {
    const std::string name = f < kFeatureCount ? feature_names()[f] : "feature" + std::to_string(f + 1);
    out += "importance_median_" + name + "," + csv::format_real(report.importance_median[f]) + ",\n";
  }
  return out;
}

/// Human-readable table: counts as mean ± SD, rates as percentages.
inline std::string format_summary_table(const std::array<MeanSd, 9>& aggregate) {
  static const std::array<const char*, 9> labels{"True Positives", "False Positives", "False Negatives",
                                                 "True Negatives", "Precision (%)",   "Sensitivity (%)",
                                                 "Specificity (%)", "Accuracy (%)",   "F1 Score (%)"};
  std::string out = "Attribute          Dysphagic Swallows (mean +/- SD)\n";
  char line[96];
  for (std::size_t a = 0; a < labels.size(); ++a) {
    const double scale = a < 4 ? 1.0 : 100.0;
    std::snprintf(line, sizeof line, "%-18s %7.1f +/- %.1f%s\n", labels[a], aggregate[a].mean * scale,
                  aggregate[a].sd * scale, a < 4 ? "" : " %");
    out += line;
  }
  return out;
}

}  // namespace swallow
