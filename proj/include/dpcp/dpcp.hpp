#pragma once

// Dual principal component solvers. Each returns an orthonormal basis of
// the estimated orthogonal complement of the inlier subspace.
//
//   dpcp_lp    recursion of linear programs, one component at a time
//   dpcp_irls  reweighted least squares on the l1,2 objective, all at once
//   dpcp_d     alternating minimization of the denoised objective

#include "dpcp/lp.hpp"
#include "dpcp/numerics.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpcp {

struct SolverConfig {
  double epsilon = 1e-3;
  Index t_max = 10;
  double delta = 1e-6;
  std::optional<double> tau;  // unset: 1/sqrt(L), or max(sigma, 1/sqrt(L))
  double sigma = 0.0;         // noise level hint, only used for the default tau

  static SolverConfig lp() { return {}; }
  static SolverConfig irls() {
    SolverConfig c;
    c.t_max = 100;
    return c;
  }
  static SolverConfig denoised() {
    SolverConfig c;
    c.t_max = 1000;
    return c;
  }

  void validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (t_max < 1) throw std::invalid_argument("t_max must be at least 1");
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    if (tau && !(*tau >= 0.0)) throw std::invalid_argument("tau must be nonnegative");
    if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be nonnegative");
  }

  double resolved_tau(Index points) const {
    if (tau) return *tau;
    const double base = 1.0 / std::sqrt(static_cast<double>(std::max<Index>(points, 1)));
    return std::max(sigma, base);
  }
};

struct SubspaceEstimate {
  Matrix complement_basis;  // D x c, orthonormal
  std::vector<std::vector<double>> objective_trace;  // per component (one entry for irls)
  std::vector<Index> iterations_per_component;
  std::vector<bool> converged;
  std::vector<double> last_change;  // norm of the final iterate update
  Index lp_pivots = 0;

  Index codim() const { return complement_basis.cols(); }
  Index total_iterations() const {
    Index s = 0;
    for (Index k : iterations_per_component) s += k;
    return s;
  }
};

namespace detail {

inline void check_codim(const Matrix& data, Index c) {
  if (data.cols() < 1) throw std::invalid_argument("data has no columns");
  if (c < 0 || c > data.rows()) {
    throw std::invalid_argument("codimension " + std::to_string(c) +
                                " outside [0, " + std::to_string(data.rows()) + "]");
  }
  if (!data.allFinite()) throw std::invalid_argument("data has non-finite entries");
}

/// Unit vector minimizing ||data^T b||_2 over b orthogonal to span(ortho).
inline Vector restricted_smallest_direction(const Matrix& data, const Matrix& ortho) {
  const Matrix q = orthogonal_complement(ortho);
  const Matrix projected = q.transpose() * data;
  Matrix gram = projected * projected.transpose();
  Vector b = q * smallest_eigenvectors(gram, 1).col(0);
  b.normalize();
  fix_sign(b);
  return b;
}

inline Vector project_out(const Vector& v, const Matrix& ortho) {
  if (ortho.cols() == 0) return v;
  return v - ortho * (ortho.transpose() * v);
}

inline double l12_objective(const Matrix& data, const Matrix& basis) {
  return (data.transpose() * basis).rowwise().norm().sum();
}

}  // namespace detail

inline SubspaceEstimate dpcp_lp(const Matrix& data, Index c, const SolverConfig& cfg = SolverConfig::lp(),
                                const SimplexOptions& lp_opt = {}) {
  detail::check_codim(data, c);
  cfg.validate();
  const Matrix x = normalize_columns(data);
  const Index dim = x.rows();
  SubspaceEstimate est;
  est.complement_basis.resize(dim, 0);
  for (Index i = 0; i < c; ++i) {
    const Matrix found = est.complement_basis;
    Vector n_hat = detail::restricted_smallest_direction(x, found);
    double j = (x.transpose() * n_hat).lpNorm<1>();
    std::vector<double> trace{j};
    Index k = 0;
    bool converged = false;
    double change = 0.0;
    while (k < cfg.t_max) {
      LpStepResult step;
      try {
        step = dpcp_lp_step(x, n_hat, found, lp_opt);
      } catch (const std::exception& e) {
        throw SolverFailure("dpcp_lp component " + std::to_string(i + 1) + ": " + e.what());
      }
      est.lp_pivots += step.pivots;
      ++k;
      Vector next = detail::project_out(step.n, found);
      next.normalize();
      const double j_next = (x.transpose() * next).lpNorm<1>();
      change = (next - n_hat).norm();
      const double decrease = j - j_next;
      n_hat = next;
      trace.push_back(j_next);
      if (!(decrease > cfg.epsilon * j)) {
        converged = true;
        j = j_next;
        break;
      }
      j = j_next;
    }
    fix_sign(n_hat);
    est.complement_basis.conservativeResize(dim, i + 1);
    est.complement_basis.col(i) = n_hat;
    est.objective_trace.push_back(std::move(trace));
    est.iterations_per_component.push_back(k);
    est.converged.push_back(converged);
    est.last_change.push_back(change);
  }
  return est;
}

inline SubspaceEstimate dpcp_irls(const Matrix& data, Index c,
                                  const SolverConfig& cfg = SolverConfig::irls()) {
  detail::check_codim(data, c);
  cfg.validate();
  const Matrix x = normalize_columns(data);
  const Index dim = x.rows();
  SubspaceEstimate est;
  if (c == 0) {
    est.complement_basis.resize(dim, 0);
    return est;
  }
  Matrix b = smallest_right_singular_vectors(x.transpose(), c);
  double j = detail::l12_objective(x, b);
  std::vector<double> trace{j};
  Index k = 0;
  bool converged = false;
  double change = 0.0;
  while (k < cfg.t_max) {
    const Vector residual = (x.transpose() * b).rowwise().norm();
    const Vector w = residual.cwiseMax(cfg.delta).cwiseInverse();
    const Matrix gram = x * w.asDiagonal() * x.transpose();
    Matrix next = smallest_eigenvectors(gram, c);
    ++k;
    const double j_next = detail::l12_objective(x, next);
    change = principal_angles(b, next).maxCoeff();
    const double decrease = j - j_next;
    b = std::move(next);
    trace.push_back(j_next);
    if (!(decrease > cfg.epsilon * j)) {
      converged = true;
      break;
    }
    j = j_next;
  }
  fix_column_signs(b);
  est.complement_basis = std::move(b);
  est.objective_trace.push_back(std::move(trace));
  est.iterations_per_component.push_back(k);
  est.converged.push_back(converged);
  est.last_change.push_back(change);
  return est;
}

/// Elementwise sign(v_i) * max(|v_i| - tau, 0).
inline Vector soft_threshold(const Vector& v, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("soft_threshold: tau must be nonnegative");
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i)) - tau;
    out(i) = a > 0.0 ? std::copysign(a, v(i)) : 0.0;
  }
  return out;
}

struct DenoisedResult {
  Vector y;
  Vector b;
  std::vector<double> trace;
  Index iterations = 0;
  bool converged = false;
  bool degenerate = false;  // b-step collapsed; previous b kept
  double last_change = 0.0;
};

namespace detail {

inline double denoised_objective(const Matrix& x, const Vector& y, const Vector& b, double tau) {
  return tau * y.lpNorm<1>() + 0.5 * (y - x.transpose() * b).squaredNorm();
}

// Alternating minimization restricted to the complement of span(ortho).
// Projecting the data keeps every b-step there: span(ortho) is an
// eigenspace of the regularized Gram matrix.
inline DenoisedResult denoised_component(const Matrix& x, const Matrix& ortho,
                                         const SolverConfig& cfg) {
  const Matrix xp = ortho.cols() == 0 ? x : Matrix(x - ortho * (ortho.transpose() * x));
  const double tau = cfg.resolved_tau(x.cols());
  Matrix gram = xp * xp.transpose();
  gram.diagonal().array() += cfg.delta;
  const SpdSolver chol(gram);
  DenoisedResult r;
  r.b = restricted_smallest_direction(x, ortho);
  r.y = Vector::Zero(x.cols());
  double j = denoised_objective(xp, r.y, r.b, tau);
  r.trace.push_back(j);
  while (r.iterations < cfg.t_max) {
    r.y = soft_threshold(xp.transpose() * r.b, tau);
    Vector xi = chol.solve(xp * r.y);
    ++r.iterations;
    const double norm = xi.norm();
    if (!(norm > 1e-12)) {
      r.degenerate = true;
      r.converged = true;
      r.trace.push_back(denoised_objective(xp, r.y, r.b, tau));
      break;
    }
    xi = project_out(xi, ortho);
    xi.normalize();
    r.last_change = (xi - r.b).norm();
    r.b = xi;
    const double j_next = denoised_objective(xp, r.y, r.b, tau);
    r.trace.push_back(j_next);
    const double decrease = j - j_next;
    if (!(decrease > cfg.epsilon * j)) {
      r.converged = true;
      break;
    }
    j = j_next;
  }
  return r;
}

}  // namespace detail

inline DenoisedResult dpcp_d(const Matrix& data, const SolverConfig& cfg = SolverConfig::denoised()) {
  detail::check_codim(data, 1);
  cfg.validate();
  const Matrix x = normalize_columns(data);
  DenoisedResult r = detail::denoised_component(x, Matrix(x.rows(), 0), cfg);
  if (!r.degenerate) {
    const double before = r.b(0);
    fix_sign(r.b);
    if (r.b(0) != before) r.y = -r.y;
  }
  return r;
}

/// c components of the denoised problem, each solved in the complement of
/// the ones before it.
inline SubspaceEstimate dpcp_d_subspace(const Matrix& data, Index c,
                                        const SolverConfig& cfg = SolverConfig::denoised()) {
  detail::check_codim(data, c);
  cfg.validate();
  const Matrix x = normalize_columns(data);
  SubspaceEstimate est;
  est.complement_basis.resize(x.rows(), 0);
  for (Index i = 0; i < c; ++i) {
    DenoisedResult r = detail::denoised_component(x, est.complement_basis, cfg);
    fix_sign(r.b);
    est.complement_basis.conservativeResize(Eigen::NoChange, i + 1);
    est.complement_basis.col(i) = r.b;
    est.objective_trace.push_back(std::move(r.trace));
    est.iterations_per_component.push_back(r.iterations);
    est.converged.push_back(r.converged);
    est.last_change.push_back(r.last_change);
  }
  return est;
}

}  // namespace dpcp
