#pragma once

// Two-dimensional views of the feature space: z-scoring, PCA, and exact t-SNE.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "swallow/csv.hpp"
#include "swallow/error.hpp"
#include "swallow/random.hpp"

namespace swallow {

enum class EmbeddingMethod { pca, tsne };

struct Embedding {
  Eigen::MatrixXd points;  ///< n x k
  EmbeddingMethod method = EmbeddingMethod::pca;
  std::vector<double> explained_variance_ratio;  ///< PCA only
};

struct Standardized {
  Eigen::MatrixXd Z;
  Eigen::VectorXd means;
  Eigen::VectorXd stds;  ///< population standard deviations; 1 for constant columns
};

/// Column-wise z-scores using the population standard deviation. Columns with
/// std < 1e-12 are only centred.
inline Standardized standardize(const Eigen::MatrixXd& X) {
  if (X.rows() < 2) throw Error(Errc::dimension, "standardize needs at least two rows");
  Standardized out;
  out.means = X.colwise().mean().transpose();
  out.Z = X.rowwise() - out.means.transpose();
  out.stds.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double sd = std::sqrt(out.Z.col(j).squaredNorm() / static_cast<double>(X.rows()));
    out.stds(j) = sd < 1e-12 ? 1.0 : sd;
    out.Z.col(j) /= out.stds(j);
  }
  return out;
}

// ---------------------------------------------------------------------------
// PCA

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;   ///< d x k, orthonormal columns
  Eigen::VectorXd eigenvalues;  ///< all d covariance eigenvalues, descending, floored at 0
  std::vector<double> explained_variance_ratio;  ///< first k
};

/// Top-k principal axes of the sample covariance (n - 1 denominator). Each
/// axis is oriented so its largest-magnitude loading is positive.
inline PcaModel pca_fit(const Eigen::MatrixXd& Z, int k) {
  const auto n = Z.rows();
  const auto d = Z.cols();
  if (k < 1 || k > std::min<Eigen::Index>(n - 1, d)) {
    throw Error(Errc::dimension, "PCA target dimension " + std::to_string(k) + " outside [1, min(n-1, d)]");
  }
  PcaModel model;
  model.mean = Z.colwise().mean().transpose();
  const Eigen::MatrixXd centred = Z.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error(Errc::domain, "covariance eigendecomposition failed");
  // Eigen returns ascending eigenvalues.
  model.eigenvalues = solver.eigenvalues().reverse().cwiseMax(0.0);
  const Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();

  model.components = vectors.leftCols(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    model.components.col(c).cwiseAbs().maxCoeff(&arg);
    if (model.components(arg, c) < 0.0) model.components.col(c) *= -1.0;
  }
  const double trace = model.eigenvalues.sum();
  for (Eigen::Index c = 0; c < k; ++c) {
    model.explained_variance_ratio.push_back(trace > 0.0 ? model.eigenvalues(c) / trace : 0.0);
  }
  return model;
}

inline Embedding pca_fit_transform(const Eigen::MatrixXd& Z, int k = 2) {
  const PcaModel model = pca_fit(Z, k);
  Embedding e;
  e.method = EmbeddingMethod::pca;
  e.points = (Z.rowwise() - model.mean.transpose()) * model.components;
  e.explained_variance_ratio = model.explained_variance_ratio;
  return e;
}

// ---------------------------------------------------------------------------
// t-SNE

struct TsneParams {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch = 250;
  std::uint64_t seed = 42;
};

struct TsneResult {
  Embedding embedding;
  double kl_after_exaggeration = 0.0;  ///< KL(P||Q) when the exaggeration is lifted
  double kl_final = 0.0;
  double perplexity_used = 0.0;
};

inline Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& X) {
  const Eigen::VectorXd norms = X.rowwise().squaredNorm();
  Eigen::MatrixXd D = (-2.0 * X * X.transpose()).colwise() + norms;
  D.rowwise() += norms.transpose();
  D = D.cwiseMax(0.0);
  D.diagonal().setZero();
  return D;
}

inline constexpr double kPerplexityTolerance = 1e-5;
inline constexpr int kBandwidthSteps = 50;

/// Row-conditional affinities p(j|i). Each row's Gaussian precision is found by
/// bisection so that the row's perplexity matches the target. Rows sum to 1.
inline Eigen::MatrixXd conditional_affinities(const Eigen::MatrixXd& X, double perplexity) {
  const auto n = X.rows();
  const Eigen::MatrixXd D = squared_distances(X);
  const double target = std::log(perplexity);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd row(n);

  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 1.0;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    // Distances are shifted by the row minimum before exponentiation; this
    // leaves the normalized row unchanged and avoids underflow.
    double d_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) d_min = std::min(d_min, D(i, j));
    }
    for (int step = 0; step < kBandwidthSteps; ++step) {
      double sum = 0.0;
      double weighted = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        row(j) = j == i ? 0.0 : std::exp(-beta * (D(i, j) - d_min));
        sum += row(j);
        weighted += row(j) * (D(i, j) - d_min);
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      row /= sum;
      const double diff = entropy - target;
      if (std::abs(diff) < kPerplexityTolerance) break;
      if (diff > 0.0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = std::isinf(lo) ? beta * 0.5 : 0.5 * (beta + lo);
      }
    }
    P.row(i) = row.transpose();
  }
  return P;
}

/// (P + P^T) / 2n; sums to 1.
inline Eigen::MatrixXd symmetrize_affinities(const Eigen::MatrixXd& conditional) {
  const auto n = static_cast<double>(conditional.rows());
  return (conditional + conditional.transpose()) / (2.0 * n);
}

namespace detail {

inline constexpr double kMinProbability = 1e-12;

/// Student-t kernel matrix with zero diagonal; returns its sum.
inline double student_kernel(const Eigen::MatrixXd& Y, Eigen::MatrixXd& kernel) {
  kernel = (1.0 + squared_distances(Y).array()).inverse().matrix();
  kernel.diagonal().setZero();
  return kernel.sum();
}

}  // namespace detail

/// KL(P || Q) for the embedding Y under the Student-t kernel.
inline double tsne_kl_divergence(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y) {
  Eigen::MatrixXd kernel;
  const double total = detail::student_kernel(Y, kernel);
  double kl = 0.0;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      if (i == j || P(i, j) <= 0.0) continue;
      const double q = std::max(kernel(i, j) / total, detail::kMinProbability);
      kl += P(i, j) * std::log(P(i, j) / q);
    }
  }
  return kl;
}

/// Exact t-SNE to two dimensions: momentum gradient descent with per-coordinate
/// adaptive gains, early exaggeration, and a seeded Gaussian initial layout.
inline TsneResult tsne(const Eigen::MatrixXd& Z, const TsneParams& params = {}) {
  const auto n = Z.rows();
  if (n < 4) throw Error(Errc::parameter, "t-SNE needs at least four points");
  if (!(params.perplexity > 0.0) || params.perplexity >= static_cast<double>(n)) {
    throw Error(Errc::parameter, "perplexity must lie in (0, n)");
  }
  if (params.iterations < 0 || !(params.learning_rate > 0.0)) {
    throw Error(Errc::parameter, "t-SNE needs iterations >= 0 and a positive learning rate");
  }
  const double perplexity = std::min(params.perplexity, static_cast<double>(n - 1) / 3.0);
  const Eigen::MatrixXd P = symmetrize_affinities(conditional_affinities(Z, perplexity)).cwiseMax(0.0);

  Rng rng(params.seed);
  Eigen::MatrixXd Y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < 2; ++c) Y(i, c) = 1e-4 * rng.normal();
  }
  Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(n, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
  Eigen::MatrixXd kernel;
  Eigen::MatrixXd grad(n, 2);

  TsneResult result;
  result.perplexity_used = perplexity;
  bool recorded = false;
  for (int iter = 0; iter < params.iterations; ++iter) {
    const bool exaggerating = iter < params.exaggeration_iterations;
    if (!exaggerating && !recorded) {
      result.kl_after_exaggeration = tsne_kl_divergence(P, Y);
      recorded = true;
    }
    const double exaggeration = exaggerating ? params.early_exaggeration : 1.0;
    const double total = detail::student_kernel(Y, kernel);

    for (Eigen::Index i = 0; i < n; ++i) {
      double gx = 0.0;
      double gy = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double q = std::max(kernel(i, j) / total, detail::kMinProbability);
        const double w = (exaggeration * P(i, j) - q) * kernel(i, j);
        gx += w * (Y(i, 0) - Y(j, 0));
        gy += w * (Y(i, 1) - Y(j, 1));
      }
      grad(i, 0) = 4.0 * gx;
      grad(i, 1) = 4.0 * gy;
    }

    const double momentum = iter < params.momentum_switch ? params.initial_momentum : params.final_momentum;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < 2; ++c) {
        const bool same_sign = (grad(i, c) > 0.0) == (velocity(i, c) > 0.0);
        gains(i, c) = same_sign ? std::max(gains(i, c) * 0.8, 0.01) : gains(i, c) + 0.2;
        velocity(i, c) = momentum * velocity(i, c) - params.learning_rate * gains(i, c) * grad(i, c);
      }
    }
    Y += velocity;
    Y.rowwise() -= Y.colwise().mean();
  }
  if (!recorded) result.kl_after_exaggeration = tsne_kl_divergence(P, Y);
  result.kl_final = tsne_kl_divergence(P, Y);
  result.embedding.method = EmbeddingMethod::tsne;
  result.embedding.points = std::move(Y);
  return result;
}

// ---------------------------------------------------------------------------
// Export

/// CSV `x,y,label,segment_id`, one row per point.
inline std::string format_embedding_csv(const Embedding& e, const std::vector<std::string>& labels,
                                        const std::vector<std::string>& segment_ids) {
  const auto n = static_cast<std::size_t>(e.points.rows());
  if (labels.size() != n || segment_ids.size() != n) {
    throw Error(Errc::shape, "embedding has " + std::to_string(n) + " points but " + std::to_string(labels.size()) +
                                 " labels and " + std::to_string(segment_ids.size()) + " ids");
  }
  if (n > 0 && e.points.cols() < 2) throw Error(Errc::shape, "embedding must have two columns");
  std::string out = "x,y,label,segment_id\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out += csv::format_real(e.points(r, 0)) + "," + csv::format_real(e.points(r, 1)) + "," + labels[i] + "," +
           segment_ids[i] + "\n";
  }
  return out;
}

inline void export_embedding(const Embedding& e, const std::vector<std::string>& labels,
                             const std::vector<std::string>& segment_ids, const std::string& path) {
  csv::write_file(path, format_embedding_csv(e, labels, segment_ids));
}

struct EmbeddingRow {
  double x = 0.0;
  double y = 0.0;
  std::string label;
  std::string segment_id;
};

inline std::vector<EmbeddingRow> parse_embedding_csv(std::string_view text) {
  const auto rows = csv::lines(text);
  if (rows.empty() || csv::trim(rows.front()) != "x,y,label,segment_id") {
    throw Error(Errc::format, "expected header x,y,label,segment_id");
  }
  std::vector<EmbeddingRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (csv::trim(rows[i]).empty()) continue;
    const auto f = csv::split(rows[i]);
    const std::string where = "line " + std::to_string(i + 1);
    if (f.size() != 4) throw Error(Errc::format, where + ": expected 4 fields");
    out.push_back({csv::require_double(f[0], where), csv::require_double(f[1], where), f[2], f[3]});
  }
  return out;
}

}  // namespace swallow
