#pragma once

// Synthetic inlier/outlier datasets: N points on a random d-dimensional
// subspace (optionally with noise in its orthogonal complement) mixed with M
// points uniform on the sphere, columns shuffled.

#include "dpcp/numerics.hpp"
#include "dpcp/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpcp {

/// Columns i.i.d. uniform on the unit sphere of R^dim.
inline Matrix unit_sphere_sample(Index dim, Index n, std::uint64_t seed) {
  if (dim < 1 || n < 0) throw std::invalid_argument("unit_sphere_sample: bad size");
  CounterRng rng(seed);
  Matrix out(dim, n);
  for (Index j = 0; j < n; ++j) {
    double norm = 0.0;
    while (!(norm > 0.0)) {
      for (Index i = 0; i < dim; ++i) out(i, j) = rng.normal();
      norm = out.col(j).norm();
    }
    out.col(j) /= norm;
  }
  return out;
}

/// Orthonormal basis of a uniformly random d-dimensional subspace of R^dim.
inline Matrix random_subspace(Index dim, Index d, std::uint64_t seed) {
  if (d < 1 || d > dim) {
    throw std::invalid_argument("random_subspace: need 1 <= d <= D");
  }
  CounterRng rng(seed);
  for (;;) {
    Matrix g(dim, d);
    for (Index j = 0; j < d; ++j)
      for (Index i = 0; i < dim; ++i) g(i, j) = rng.normal();
    Matrix q = orthonormalize(g);
    if (q.cols() == d) return q;
  }
}

struct Dataset {
  Matrix data;                 // D x (N + M)
  std::vector<bool> labels;    // true = inlier
  Matrix true_basis;           // D x d
  double sigma = 0.0;
  std::uint64_t seed = 0;

  Index num_inliers() const {
    return static_cast<Index>(std::count(labels.begin(), labels.end(), true));
  }
  Index num_outliers() const { return static_cast<Index>(labels.size()) - num_inliers(); }
  /// The analysis assumes at least D - d outliers; reported, not enforced.
  bool meets_outlier_assumption() const {
    return num_outliers() >= data.rows() - true_basis.cols();
  }
};

inline Dataset synthesize(Index dim, Index d, Index n_in, Index n_out, double sigma,
                          std::uint64_t seed) {
  if (dim < 1 || d < 1 || d > dim) {
    throw std::invalid_argument("synthesize: need 1 <= d <= D");
  }
  if (n_in < d + 1) {
    throw std::invalid_argument("synthesize: need N >= d + 1 (N=" +
                                std::to_string(n_in) + ", d=" + std::to_string(d) + ")");
  }
  if (n_out < 0) throw std::invalid_argument("synthesize: M must be nonnegative");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("synthesize: sigma must be finite and nonnegative");
  }
  Dataset ds;
  ds.sigma = sigma;
  ds.seed = seed;
  ds.true_basis = random_subspace(dim, d, derive_seed(seed, 0));
  Matrix inliers = ds.true_basis * unit_sphere_sample(d, n_in, derive_seed(seed, 1));
  if (sigma > 0.0) {
    CounterRng rng(derive_seed(seed, 2));
    for (Index j = 0; j < n_in; ++j) {
      Vector g(dim);
      for (Index i = 0; i < dim; ++i) g(i) = sigma * rng.normal();
      inliers.col(j) += g - ds.true_basis * (ds.true_basis.transpose() * g);
    }
  }
  const Matrix outliers = unit_sphere_sample(dim, n_out, derive_seed(seed, 3));

  const Index total = n_in + n_out;
  std::vector<Index> order(total);
  std::iota(order.begin(), order.end(), Index{0});
  CounterRng shuffle(derive_seed(seed, 4));
  for (Index i = total - 1; i > 0; --i) {
    std::swap(order[i], order[shuffle.below(static_cast<std::uint64_t>(i) + 1)]);
  }
  ds.data.resize(dim, total);
  ds.labels.resize(total);
  for (Index j = 0; j < total; ++j) {
    const Index src = order[j];
    if (src < n_in) {
      ds.data.col(j) = inliers.col(src);
      ds.labels[j] = true;
    } else {
      ds.data.col(j) = outliers.col(src - n_in);
      ds.labels[j] = false;
    }
  }
  return ds;
}

}  // namespace dpcp
