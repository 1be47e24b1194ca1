#pragma once

// Kruskal-Wallis H test with tie correction, and per-feature significance
// tables over labelled feature data.

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "swallow/csv.hpp"
#include "swallow/dataset.hpp"
#include "swallow/error.hpp"

namespace swallow {

/// Ranks 1..n; tied values share the mean of the positions they cover.
inline std::vector<double> rank_with_ties(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::domain, "cannot rank an empty sample");
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(Errc::domain, "cannot rank non-finite values");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // positions i+1 .. j (1-based) share their average
    const double shared = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = shared;
    i = j;
  }
  return ranks;
}

/// Upper tail of the chi-square distribution, Q(df/2, x/2).
inline double chi_square_sf(double x, int df) {
  if (df < 1) throw Error(Errc::domain, "degrees of freedom must be >= 1");
  if (!(x >= 0.0)) throw Error(Errc::domain, "chi-square statistic must be >= 0");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

struct KruskalResult {
  double h_statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
};

inline KruskalResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw Error(Errc::parameter, "Kruskal-Wallis needs at least two groups");
  std::vector<double> pooled;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw Error(Errc::grouping, "group " + std::to_string(g) + " is empty");
    pooled.insert(pooled.end(), groups[g].begin(), groups[g].end());
  }
  const auto n = static_cast<double>(pooled.size());
  if (pooled.size() < 3) throw Error(Errc::parameter, "Kruskal-Wallis needs at least three observations");

  const auto ranks = rank_with_ties(pooled);

  double between = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) rank_sum += ranks[offset + i];
    between += rank_sum * rank_sum / static_cast<double>(g.size());
    offset += g.size();
  }

  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const auto t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double correction = 1.0 - tie_term / (n * n * n - n);
  if (correction <= 0.0) throw Error(Errc::degenerate_data, "all observations are tied");

  const double h_raw = 12.0 / (n * (n + 1.0)) * between - 3.0 * (n + 1.0);
  KruskalResult result;
  result.h_statistic = std::max(0.0, h_raw / correction);
  result.degrees_of_freedom = static_cast<int>(groups.size()) - 1;
  result.p_value = chi_square_sf(result.h_statistic, result.degrees_of_freedom);
  return result;
}

inline constexpr double kSignificanceLevel = 0.05;

enum class Grouping { by_label, by_consistency_within_label };

struct SignificanceRow {
  std::size_t feature = 0;  ///< 0-based position in FeatureVector
  KruskalResult test;
  bool significant = false;
};

struct SignificanceTable {
  std::string scope;  ///< "all" for by_label, otherwise the label tested within
  std::vector<std::string> groups;
  std::vector<SignificanceRow> rows;
};

namespace detail {

inline SignificanceTable significance_for_groups(const FeatureTable& table, std::string scope,
                                                 const std::map<std::string, std::vector<std::size_t>>& members) {
  SignificanceTable out;
  out.scope = std::move(scope);
  for (const auto& [name, rows] : members) {
    if (rows.size() < 2) {
      throw Error(Errc::grouping, "group '" + name + "' in scope '" + out.scope + "' has " +
                                      std::to_string(rows.size()) + " member(s); at least 2 required");
    }
    out.groups.push_back(name);
  }
  if (members.size() < 2) {
    throw Error(Errc::grouping, "scope '" + out.scope + "' yields fewer than two groups");
  }
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    std::vector<std::vector<double>> groups;
    for (const auto& [name, rows] : members) {
      auto& g = groups.emplace_back();
      for (std::size_t r : rows) g.push_back(table[r].features[f]);
    }
    SignificanceRow row;
    row.feature = f;
    try {
      row.test = kruskal_wallis(groups);
    } catch (const Error& e) {
      throw Error(e.code(), "feature " + feature_names()[f] + " in scope '" + out.scope + "': " + e.what());
    }
    row.significant = row.test.p_value < kSignificanceLevel;
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace detail

/// One Kruskal-Wallis test per feature. by_label compares normal against
/// dysphagic; by_consistency_within_label compares consistencies inside each
/// label separately and returns one table per label.
inline std::vector<SignificanceTable> feature_significance_table(const FeatureTable& table, Grouping grouping) {
  std::vector<SignificanceTable> out;
  if (grouping == Grouping::by_label) {
    std::map<std::string, std::vector<std::size_t>> members{{"normal", {}}, {"dysphagic", {}}};
    for (std::size_t i = 0; i < table.size(); ++i) members[to_string(table[i].label)].push_back(i);
    out.push_back(detail::significance_for_groups(table, "all", members));
    return out;
  }
  for (Label label : {Label::normal, Label::dysphagic}) {
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (table[i].label == label) members[to_string(table[i].consistency)].push_back(i);
    }
    if (members.empty()) throw Error(Errc::grouping, std::string("no '") + to_string(label) + "' rows to group");
    out.push_back(detail::significance_for_groups(table, to_string(label), members));
  }
  return out;
}

/// CSV `feature,index,H,df,p,significant`; index is 1-based.
inline std::string format_significance_csv(const SignificanceTable& t) {
  std::string out = "feature,index,H,df,p,significant\n";
  for (const auto& r : t.rows) {
    out += feature_names()[r.feature] + "," + std::to_string(r.feature + 1) + "," +
           csv::format_real(r.test.h_statistic) + "," + std::to_string(r.test.degrees_of_freedom) + "," +
           csv::format_real(r.test.p_value) + "," + (r.significant ? "true" : "false") + "\n";
  }
  return out;
}

}  // namespace swallow
