#pragma once

// Quantities from the continuous and discrete analysis of the l1 problem on
// the sphere: hemisphere heights c_D, the continuous recursion, Monte-Carlo
// uniformity estimates, circumradii and the resulting recovery conditions.

#include "dpcp/datagen.hpp"
#include "dpcp/numerics.hpp"
#include "dpcp/parallel.hpp"
#include "dpcp/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpcp {

/// Average height of the unit hemisphere of R^D, E|z_1| for z uniform on
/// the sphere. Uses c_D = c_{D-2} (D-2)/(D-1), which stays finite for any D.
inline double c_coefficient(Index dim) {
  if (dim < 1) throw std::invalid_argument("c_coefficient: D must be positive");
  double c = dim % 2 == 1 ? 1.0 : 2.0 / std::numbers::pi;
  for (Index k = dim % 2 == 1 ? 3 : 4; k <= dim; k += 2) {
    c *= static_cast<double>(k - 2) / static_cast<double>(k - 1);
  }
  return c;
}

struct ContinuousModel {
  Index M = 0;
  Index N = 0;
  Index D = 0;
  Index d = 0;
  double c_D = 0.0;
  double c_d = 0.0;
  double alpha = 0.0;  // N c_d / (M c_D)
};

inline ContinuousModel make_continuous_model(Index M, Index N, Index D, Index d) {
  if (D < 1 || d < 1 || d > D || N < 0 || M < 0) {
    throw std::invalid_argument("make_continuous_model: invalid dimensions");
  }
  ContinuousModel m{M, N, D, d, c_coefficient(D), c_coefficient(d), 0.0};
  m.alpha = M == 0 ? std::numeric_limits<double>::infinity()
                   : static_cast<double>(N) * m.c_d / (static_cast<double>(M) * m.c_D);
  return m;
}

/// Continuous objective at a vector of norm `norm_b` making angle `phi`
/// with the inlier subspace.
inline double continuous_objective(double norm_b, double phi, const ContinuousModel& m) {
  if (!(norm_b >= 0.0)) throw std::invalid_argument("continuous_objective: negative norm");
  if (!(phi >= 0.0 && phi <= std::numbers::pi / 2)) {
    throw std::invalid_argument("continuous_objective: phi outside [0, pi/2]");
  }
  return norm_b * (static_cast<double>(m.M) * m.c_D + static_cast<double>(m.N) * m.c_d * std::cos(phi));
}

namespace detail {

inline void check_recursion_args(double alpha, double phi0) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("continuous recursion: alpha must be positive and finite");
  }
  if (!(phi0 > 0.0 && phi0 <= std::numbers::pi / 2)) {
    throw std::invalid_argument("continuous recursion: phi0 must lie in (0, pi/2]");
  }
}

}  // namespace detail

struct RecursionTrace {
  std::vector<double> angles;  // phi_0, ..., phi_{k*} = pi/2
  Index k_star = 0;
};

/// Angles of the continuous recursion started at phi0 until it reaches pi/2.
inline RecursionTrace simulate_continuous_recursion(double alpha, double phi0) {
  detail::check_recursion_args(alpha, phi0);
  constexpr double half_pi = std::numbers::pi / 2;
  RecursionTrace t;
  double phi = phi0;
  t.angles.push_back(phi);
  while (phi != half_pi) {
    if (std::tan(phi) >= 1.0 / alpha) {
      phi = half_pi;
    } else {
      phi = std::min(half_pi, phi + std::asin(alpha * std::sin(phi)));
    }
    t.angles.push_back(phi);
  }
  t.k_star = static_cast<Index>(t.angles.size()) - 1;
  return t;
}

inline Index kstar_bound(double alpha, double phi0) {
  detail::check_recursion_args(alpha, phi0);
  if (phi0 == std::numbers::pi / 2) return 0;
  if (std::tan(phi0) >= 1.0 / alpha) return 1;
  const double steps = (std::atan(1.0 / alpha) - phi0) / std::asin(alpha * std::sin(phi0));
  return static_cast<Index>(std::ceil(steps)) + 1;
}

inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// max over the columns b of `probes` of || c b - (1/n) sum_j sign(b^T y_j) y_j ||.
inline double average_error_at(const Matrix& points, const Matrix& probes, double c) {
  if (points.cols() == 0 || probes.cols() == 0) return 0.0;
  if (points.rows() != probes.rows()) {
    throw std::invalid_argument("average_error_at: dimension mismatch");
  }
  constexpr Index chunk = 512;
  const double inv_n = 1.0 / static_cast<double>(points.cols());
  double best = 0.0;
  for (Index start = 0; start < probes.cols(); start += chunk) {
    const Index w = std::min(chunk, probes.cols() - start);
    const auto block = probes.middleCols(start, w);
    Matrix signs = points.transpose() * block;
    signs = signs.unaryExpr([](double v) { return sign0(v); });
    const Matrix dev = c * block - inv_n * (points * signs);
    best = std::max(best, dev.colwise().norm().maxCoeff());
  }
  return best;
}

/// Monte-Carlo estimate (a lower bound) of the uniformity error of `points`.
/// With `restrict` set, points lie in its span, probes are drawn from the
/// unit sphere of that subspace and the target uses c_d, d = dim of span.
inline double estimate_average_error(const Matrix& points, const std::optional<Matrix>& restrict,
                                     Index probes, std::uint64_t seed) {
  if (probes < 1) throw std::invalid_argument("estimate_average_error: need probes >= 1");
  if (restrict) {
    const Index d = restrict->cols();
    const Matrix b = *restrict * unit_sphere_sample(d, probes, seed);
    return average_error_at(points, b, c_coefficient(d));
  }
  const Index dim = points.rows();
  return average_error_at(points, unit_sphere_sample(dim, probes, seed), c_coefficient(dim));
}

namespace detail {

inline double binomial(Index n, Index k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (Index i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// Largest ||sum s_i y_i|| over sign patterns of the given columns; the first
// sign is fixed by symmetry.
inline double best_sign_pattern(const Matrix& pts, const std::vector<Index>& cols) {
  const Index k = static_cast<Index>(cols.size());
  double best = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (k - 1)); ++mask) {
    Vector v = pts.col(cols[0]);
    for (Index i = 1; i < k; ++i) {
      if (mask >> (i - 1) & 1) v -= pts.col(cols[i]);
      else v += pts.col(cols[i]);
    }
    best = std::max(best, v.norm());
  }
  return best;
}

// Flips single signs while that increases ||v||.
inline double sign_ascent(const Matrix& pts, const std::vector<Index>& cols, std::vector<double>& s) {
  Vector v = Vector::Zero(pts.rows());
  for (std::size_t i = 0; i < cols.size(); ++i) v += s[i] * pts.col(cols[i]);
  for (bool improved = true; improved;) {
    improved = false;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const Vector& y = pts.col(cols[i]);
      const double gain = -4.0 * s[i] * v.dot(y) + 4.0 * y.squaredNorm();
      if (gain > 1e-12) {
        v -= 2.0 * s[i] * y;
        s[i] = -s[i];
        improved = true;
      }
    }
  }
  return v.norm();
}

}  // namespace detail

/// Circumradius estimates R_{Y,K} for K = 0..k_max (entry 0 is 0): the
/// largest ||sum_i s_i y_{j_i}|| over K distinct columns and signs. Exact
/// enumeration when C(n,K) 2^K <= budget; otherwise greedy subsets grown from
/// seed points (each step adds the column most aligned with the running sum)
/// refined by sign ascent, with about budget / (K n) seeds.
inline std::vector<double> estimate_circumradii(const Matrix& points, Index k_max, double budget,
                                                std::uint64_t seed) {
  const Index n = points.cols();
  if (k_max < 0 || k_max > n) throw std::invalid_argument("estimate_circumradius: need K <= n");
  std::vector<double> out(static_cast<std::size_t>(k_max) + 1, 0.0);
  std::vector<Index> greedy_ks;
  for (Index k = 1; k <= k_max; ++k) {
    const double cost = detail::binomial(n, k) * std::ldexp(1.0, static_cast<int>(k));
    if (cost > budget) {
      greedy_ks.push_back(k);
      continue;
    }
    std::vector<bool> pick(static_cast<std::size_t>(n), false);
    std::fill(pick.begin(), pick.begin() + k, true);
    std::vector<Index> cols;
    do {
      cols.clear();
      for (Index j = 0; j < n; ++j) if (pick[j]) cols.push_back(j);
      out[k] = std::max(out[k], detail::best_sign_pattern(points, cols));
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  if (greedy_ks.empty()) return out;
  const Index top = greedy_ks.back();
  const double per_seed = static_cast<double>(top) * static_cast<double>(n);
  const Index seeds = static_cast<Index>(std::clamp(budget / per_seed, 1.0, static_cast<double>(n)));
  std::vector<Index> seed_points(n);
  for (Index j = 0; j < n; ++j) seed_points[j] = j;
  if (seeds < n) {
    CounterRng rng(seed);
    for (Index i = 0; i < seeds; ++i) {
      std::swap(seed_points[i], seed_points[i + rng.below(static_cast<std::uint64_t>(n - i))]);
    }
    seed_points.resize(seeds);
  }
  std::vector<bool> used(static_cast<std::size_t>(n));
  for (Index start : seed_points) {
    std::fill(used.begin(), used.end(), false);
    std::vector<Index> cols{start};
    std::vector<double> signs{1.0};
    used[start] = true;
    Vector v = points.col(start);
    for (Index k = 2; k <= top; ++k) {
      const Vector dots = points.transpose() * v;
      Index pick = -1;
      double best = -1.0;
      for (Index j = 0; j < n; ++j) {
        if (!used[j] && std::abs(dots(j)) > best) {
          best = std::abs(dots(j));
          pick = j;
        }
      }
      used[pick] = true;
      cols.push_back(pick);
      signs.push_back(dots(pick) >= 0.0 ? 1.0 : -1.0);
      v += signs.back() * points.col(pick);
    }
    for (Index k : greedy_ks) {
      std::vector<Index> prefix(cols.begin(), cols.begin() + k);
      std::vector<double> s(signs.begin(), signs.begin() + k);
      out[k] = std::max(out[k], detail::sign_ascent(points, prefix, s));
    }
  }
  return out;
}

inline double estimate_circumradius(const Matrix& points, Index k, double budget,
                                    std::uint64_t seed) {
  return estimate_circumradii(points, k, budget, seed).back();
}

struct TheoremConditions {
  double gamma = 0.0;  // M / N
  double eps_O = 0.0;
  double eps_X = 0.0;
  std::map<Index, double> circum_O;
  std::map<Index, double> circum_X;
  double gamma_bound = 0.0;  // the condition is gamma < gamma_bound
  bool condition_holds = false;
  double phi0_star = std::numbers::pi / 2;  // radians
};

class InternalInconsistency : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Outlier-ratio condition for global optimality over all splits
/// K1 + K2 = D - 1 (K1 >= max(1, D-d), K2 >= 0, with R_{X,0} = 0), and
/// the minimum initialization angle for convergence of the recursion.
inline TheoremConditions theorem_conditions(const ContinuousModel& m, double eps_O, double eps_X,
                                            const std::map<Index, double>& circum_O,
                                            const std::map<Index, double>& circum_X) {
  if (m.N < 1) throw std::invalid_argument("theorem_conditions: need N >= 1");
  if (!(eps_O >= 0.0) || !(eps_X >= 0.0)) {
    throw std::invalid_argument("theorem_conditions: negative uniformity error");
  }
  TheoremConditions t;
  t.gamma = static_cast<double>(m.M) / static_cast<double>(m.N);
  t.eps_O = eps_O;
  t.eps_X = eps_X;
  t.circum_O = circum_O;
  t.circum_X = circum_X;
  const auto ratio = [](double num, double den) {
    if (den > 0.0) return num / den;
    return num > 0.0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
  };
  const auto lookup = [](const std::map<Index, double>& r, Index k, const char* what) {
    if (k == 0) return 0.0;
    const auto it = r.find(k);
    if (it == r.end()) {
      throw std::invalid_argument(std::string("theorem_conditions: missing ") + what +
                                  " circumradius for K=" + std::to_string(k));
    }
    return it->second;
  };
  const double n = static_cast<double>(m.N);
  double bound = ratio(m.c_d - eps_X, 2.0 * eps_O);
  for (Index k1 = std::max<Index>(1, m.D - m.d); k1 <= m.D - 1; ++k1) {
    const Index k2 = m.D - 1 - k1;
    const double r = lookup(circum_O, k1, "outlier") + lookup(circum_X, k2, "inlier");
    bound = std::min(bound, ratio(m.c_d - eps_X - r / n, eps_O));
  }
  t.gamma_bound = bound;
  t.condition_holds = t.gamma < bound;
  const double arg = (m.c_d - eps_X - 2.0 * t.gamma * eps_O) / (m.c_d + eps_X);
  if (arg >= -1.0 && arg <= 1.0) {
    t.phi0_star = std::clamp(std::acos(arg), 0.0, std::numbers::pi / 2);
  } else if (t.condition_holds) {
    throw InternalInconsistency("theorem_conditions: angle bound argument outside [-1, 1]");
  } else {
    t.phi0_star = std::numbers::pi / 2;
  }
  return t;
}

struct ConditionEstimateOptions {
  Index probes = 10000;
  double circumradius_budget = 2e6;
};

/// Estimates every quantity entering theorem_conditions from a noise-free
/// dataset and evaluates the conditions.
inline TheoremConditions estimate_conditions(const Dataset& ds, const ConditionEstimateOptions& opt,
                                             std::uint64_t seed) {
  const Index dim = ds.data.rows();
  const Index d = ds.true_basis.cols();
  std::vector<Index> in_idx, out_idx;
  for (Index j = 0; j < ds.data.cols(); ++j) (ds.labels[j] ? in_idx : out_idx).push_back(j);
  Matrix inliers(dim, static_cast<Index>(in_idx.size()));
  Matrix outliers(dim, static_cast<Index>(out_idx.size()));
  for (std::size_t k = 0; k < in_idx.size(); ++k) inliers.col(static_cast<Index>(k)) = ds.data.col(in_idx[k]);
  for (std::size_t k = 0; k < out_idx.size(); ++k) outliers.col(static_cast<Index>(k)) = ds.data.col(out_idx[k]);

  const ContinuousModel m = make_continuous_model(outliers.cols(), inliers.cols(), dim, d);
  const double eps_O = estimate_average_error(outliers, std::nullopt, opt.probes, derive_seed(seed, 0));
  const double eps_X = estimate_average_error(inliers, ds.true_basis, opt.probes, derive_seed(seed, 1));
  const Index k1_max = std::min<Index>(dim - 1, outliers.cols());
  const Index k2_max = std::min<Index>(d - 1, inliers.cols());
  std::map<Index, double> circum_O, circum_X;
  const auto ro = estimate_circumradii(outliers, k1_max, opt.circumradius_budget, derive_seed(seed, 2));
  const auto rx = estimate_circumradii(inliers, k2_max, opt.circumradius_budget, derive_seed(seed, 3));
  for (Index k = 1; k <= k1_max; ++k) circum_O[k] = ro[k];
  for (Index k = 1; k <= k2_max; ++k) circum_X[k] = rx[k];
  if (k1_max < dim - 1) {
    // Too few outliers to form the polytopes; the condition cannot be certified.
    TheoremConditions t;
    t.gamma = static_cast<double>(m.M) / static_cast<double>(m.N);
    t.eps_O = eps_O;
    t.eps_X = eps_X;
    t.circum_O = circum_O;
    t.circum_X = circum_X;
    return t;
  }
  return theorem_conditions(m, eps_O, eps_X, circum_O, circum_X);
}

struct HyperplaneResult {
  Vector normal;
  Index contained = 0;
};

/// Exhaustive search for a hyperplane through the origin containing the most
/// columns of data: every (D-1)-subset of full rank spans a candidate.
inline HyperplaneResult brute_force_maximal_hyperplane(const Matrix& data, double tol = 1e-9) {
  const Index dim = data.rows();
  const Index n = data.cols();
  if (dim < 2 || n < dim - 1) {
    throw std::invalid_argument("brute_force_maximal_hyperplane: need D >= 2 and L >= D-1");
  }
  HyperplaneResult best;
  std::vector<bool> pick(static_cast<std::size_t>(n), false);
  std::fill(pick.begin(), pick.begin() + (dim - 1), true);
  do {
    Matrix sub(dim, dim - 1);
    Index k = 0;
    for (Index j = 0; j < n; ++j) if (pick[j]) sub.col(k++) = data.col(j);
    Eigen::FullPivLU<Matrix> lu(sub);
    lu.setThreshold(1e-10);
    if (lu.rank() < dim - 1) continue;
    const Matrix q = orthonormalize(sub);
    Vector normal = orthogonal_complement(q).col(0);
    fix_sign(normal);
    const Vector r = data.transpose() * normal;
    Index contained = 0;
    for (Index j = 0; j < n; ++j) contained += std::abs(r(j)) <= tol;
    if (contained > best.contained) {
      best.contained = contained;
      best.normal = normal;
    }
  } while (std::prev_permutation(pick.begin(), pick.end()));
  if (best.normal.size() == 0) {
    throw DegenerateData("brute_force_maximal_hyperplane: every subset is rank deficient");
  }
  return best;
}

struct TheoryCheckConfig {
  Index D = 10;
  std::vector<Index> d_list;
  std::vector<Index> N_list;
  std::vector<double> ratio_list;
  Index trials = 1;
  ConditionEstimateOptions estimate;
  std::uint64_t seed = 0;

  void validate() const {
    if (D < 2) throw std::invalid_argument("theory-check: D must be at least 2");
    if (trials < 1) throw std::invalid_argument("theory-check: trials must be positive");
    if (d_list.empty() || N_list.empty() || ratio_list.empty()) {
      throw std::invalid_argument("theory-check: d, N and ratio lists must be nonempty");
    }
    if (estimate.probes < 1) throw std::invalid_argument("theory-check: probes must be positive");
    for (Index n : N_list)
      for (Index d : d_list)
        if (d < 1 || d >= D || n < d + 1) {
          throw std::invalid_argument("theory-check: need 1 <= d < D and N > d");
        }
    for (double r : ratio_list)
      if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("theory-check: ratios must lie in (0, 1)");
  }
};

struct TheoryRecord {
  Index D = 0, d = 0, N = 0, M = 0, trial = 0;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  TheoremConditions conditions;
};

/// Estimates the recovery conditions on noise-free datasets for every
/// (N, d, ratio) cell and trial. Ordered by cell, then trial.
inline std::vector<TheoryRecord> run_theory_check(const TheoryCheckConfig& cfg, unsigned jobs = 1) {
  cfg.validate();
  struct Cell {
    Index n, d;
    double ratio;
  };
  std::vector<Cell> cells;
  for (Index n : cfg.N_list)
    for (Index d : cfg.d_list)
      for (double r : cfg.ratio_list) cells.push_back({n, d, r});
  const auto trials = static_cast<std::size_t>(cfg.trials);
  std::vector<TheoryRecord> out(cells.size() * trials);
  parallel_for(out.size(), jobs, [&](std::size_t t) {
    const Cell& c = cells[t / trials];
    TheoryRecord& rec = out[t];
    rec.D = cfg.D;
    rec.d = c.d;
    rec.N = c.n;
    rec.M = static_cast<Index>(std::llround(c.ratio * static_cast<double>(c.n) / (1.0 - c.ratio)));
    rec.trial = static_cast<Index>(t % trials);
    rec.ratio = c.ratio;
    rec.seed = derive_seed(cfg.seed, t / trials) ^ static_cast<std::uint64_t>(rec.trial);
    const Dataset ds = synthesize(cfg.D, c.d, c.n, rec.M, 0.0, rec.seed);
    rec.conditions = estimate_conditions(ds, cfg.estimate, derive_seed(rec.seed, 7));
  });
  return out;
}

}  // namespace dpcp
