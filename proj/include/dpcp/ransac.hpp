#pragma once

// RANSAC for a single linear subspace: sample d points, take their span,
// count points within `threshold` of it, keep the best model.

#include "dpcp/dpcp.hpp"
#include "dpcp/numerics.hpp"
#include "dpcp/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace dpcp {

/// Number of d-samples needed so that at least one is outlier-free with
/// probability p when a fraction `ratio` of the points are outliers.
inline Index ransac_trials(double p, double ratio, Index d) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("ransac_trials: p must lie in (0, 1)");
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("ransac_trials: ratio must lie in [0, 1)");
  }
  if (d < 1) throw std::invalid_argument("ransac_trials: d must be positive");
  const double clean = std::pow(1.0 - ratio, static_cast<double>(d));
  if (clean >= 1.0) return 1;
  const double n = std::ceil(std::log(1.0 - p) / std::log1p(-clean));
  if (!(n < 1e15)) return std::numeric_limits<Index>::max();
  return std::max<Index>(1, static_cast<Index>(n));
}

struct RansacConfig {
  Index dim = 1;                 // subspace dimension d
  double threshold = 1e-3;
  double success_prob = 0.99;
  double outlier_ratio_hint = 0.5;
  std::optional<Index> trials;   // explicit budget, overrides the formula
  std::optional<Index> max_trials;  // cap on the formula (time-matched budget)
  std::uint64_t seed = 0;

  Index budget() const {
    if (trials) return *trials;
    Index n = ransac_trials(success_prob, outlier_ratio_hint, dim);
    if (max_trials) n = std::min(n, *max_trials);
    return std::max<Index>(n, 1);
  }
};

struct RansacResult {
  SubspaceEstimate estimate;  // complement of the best model
  Matrix model_basis;         // D x d
  Index consensus = 0;
  Index best_trial = -1;
  Index trials = 0;
};

/// Number of columns of `data` within `threshold` of span(basis).
inline Index consensus_count(const Matrix& data, const Matrix& basis, double threshold) {
  const Matrix residual = data - basis * (basis.transpose() * data);
  Index count = 0;
  for (Index j = 0; j < data.cols(); ++j) count += residual.col(j).norm() <= threshold;
  return count;
}

inline RansacResult ransac(const Matrix& data, const RansacConfig& cfg) {
  if (cfg.dim < 1 || cfg.dim > data.rows()) {
    throw std::invalid_argument("ransac: need 1 <= d <= D");
  }
  if (data.cols() < cfg.dim) throw std::invalid_argument("ransac: fewer points than d");
  if (!(cfg.threshold > 0.0)) throw std::invalid_argument("ransac: threshold must be positive");
  const Matrix x = normalize_columns(data);
  const Index points = x.cols();
  const Index budget = cfg.budget();
  RansacResult best;
  best.trials = budget;
  std::vector<Index> picked;
  for (Index t = 0; t < budget; ++t) {
    CounterRng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
    picked.clear();
    while (static_cast<Index>(picked.size()) < cfg.dim) {
      const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(points)));
      if (std::find(picked.begin(), picked.end(), j) == picked.end()) picked.push_back(j);
    }
    Matrix sample(x.rows(), cfg.dim);
    for (Index k = 0; k < cfg.dim; ++k) sample.col(k) = x.col(picked[k]);
    Matrix model = orthonormalize(sample);
    if (model.cols() < cfg.dim) continue;
    const Index count = consensus_count(x, model, cfg.threshold);
    if (count > best.consensus || best.best_trial < 0) {
      best.consensus = count;
      best.best_trial = t;
      best.model_basis = std::move(model);
    }
  }
  if (best.best_trial < 0) {
    throw DegenerateData("ransac: every sample was rank deficient");
  }
  Matrix complement = orthogonal_complement(best.model_basis);
  fix_column_signs(complement);
  best.estimate.complement_basis = std::move(complement);
  best.estimate.iterations_per_component.push_back(budget);
  best.estimate.converged.push_back(true);
  return best;
}

}  // namespace dpcp
