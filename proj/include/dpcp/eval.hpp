#pragma once

// Outlier signals, ROC curves and the synthetic grid experiment.

#include "dpcp/datagen.hpp"
#include "dpcp/dpcp.hpp"
#include "dpcp/numerics.hpp"
#include "dpcp/parallel.hpp"
#include "dpcp/random.hpp"
#include "dpcp/ransac.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iterator>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dpcp {

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Signal {
  std::vector<double> values;  // alpha_j >= 0, small means inlier
  std::vector<bool> labels;    // true = inlier
};

/// alpha_j = ||B^T x_j||, the distance of x_j to the subspace whose
/// orthogonal complement is spanned by the orthonormal columns of B.
inline Signal distance_signal(const Matrix& data, const Matrix& complement_basis,
                              std::vector<bool> labels = {}) {
  if (complement_basis.rows() != data.rows()) {
    throw std::invalid_argument("distance_signal: dimension mismatch");
  }
  Signal s;
  const Vector a = (complement_basis.transpose() * data).colwise().norm();
  s.values.assign(a.data(), a.data() + a.size());
  s.labels = std::move(labels);
  return s;
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  std::vector<RocPoint> points;  // (0,0) first, (1,1) last
  double area_above = 0.0;
};

namespace detail {

inline std::pair<Index, Index> class_counts(const Signal& sig) {
  if (sig.values.size() != sig.labels.size()) {
    throw std::invalid_argument("signal: values and labels differ in length");
  }
  Index in = 0;
  for (bool l : sig.labels) in += l;
  const Index out = static_cast<Index>(sig.labels.size()) - in;
  if (in == 0 || out == 0) throw std::invalid_argument("signal: need both inliers and outliers");
  return {in, out};
}

}  // namespace detail

/// ROC of the rule "inlier iff alpha <= t" as t sweeps the distinct values.
/// The trapezoidal area equals P(alpha_in < alpha_out) + P(tie) / 2.
inline RocResult roc(const Signal& sig) {
  const auto [n_in, n_out] = detail::class_counts(sig);
  for (double v : sig.values) {
    if (!std::isfinite(v)) throw std::invalid_argument("roc: non-finite signal value");
  }
  std::vector<std::size_t> order(sig.values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return sig.values[a] < sig.values[b]; });
  RocResult r;
  r.points.push_back({0.0, 0.0});
  Index tp = 0, fp = 0;
  // Twice the area under the curve, in units of 1 / (n_in n_out).
  std::int64_t twice_area = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = sig.values[order[i]];
    const Index tp0 = tp, fp0 = fp;
    for (; i < order.size() && sig.values[order[i]] == t; ++i) {
      if (sig.labels[order[i]]) ++tp;
      else ++fp;
    }
    twice_area += static_cast<std::int64_t>(fp - fp0) * (tp + tp0);
    r.points.push_back({static_cast<double>(fp) / static_cast<double>(n_out),
                        static_cast<double>(tp) / static_cast<double>(n_in)});
  }
  const auto denom = 2 * static_cast<std::int64_t>(n_in) * n_out;
  r.area_above = static_cast<double>(denom - twice_area) / static_cast<double>(denom);
  return r;
}

/// True iff some threshold separates the classes: max inlier < min outlier.
inline bool perfect_separation(const Signal& sig) {
  detail::class_counts(sig);
  double max_in = -std::numeric_limits<double>::infinity();
  double min_out = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < sig.values.size(); ++j) {
    if (sig.labels[j]) max_in = std::max(max_in, sig.values[j]);
    else min_out = std::min(min_out, sig.values[j]);
  }
  return max_in < min_out;
}

/// Largest principal angle between two subspaces of equal dimension given by
/// orthonormal bases, from its sine ||(I - AA^T) B||_2 (accurate near zero).
inline double largest_principal_angle(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) return std::numbers::pi / 2;
  if (a.cols() == 0) return 0.0;
  const Matrix residual = b - a * (a.transpose() * b);
  const double s = Eigen::JacobiSVD<Matrix>(residual).singularValues()(0);
  return std::asin(std::min(1.0, s));
}

// ---------------------------------------------------------------------------
// Grid experiment

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m{"dpcp-lp", "dpcp-irls", "dpcp-d", "ransac"};
  return m;
}

struct GridConfig {
  Index D = 10;
  std::vector<Index> d_list;
  Index N = 200;
  std::vector<double> ratio_list;
  std::vector<double> sigma_list{0.0};
  Index trials = 1;
  std::vector<std::string> methods;
  std::uint64_t seed = 0;
  std::optional<Index> ransac_budget;  // fixed RANSAC trial count
  double ransac_success_prob = 0.99;

  void validate() const {
    if (D < 2) throw std::invalid_argument("grid: D must be at least 2");
    if (N < 2) throw std::invalid_argument("grid: N must be at least 2");
    if (trials < 1) throw std::invalid_argument("grid: trials must be positive");
    if (d_list.empty() || ratio_list.empty() || sigma_list.empty() || methods.empty()) {
      throw std::invalid_argument("grid: d_list, ratio_list, sigma_list and methods must be nonempty");
    }
    for (Index d : d_list) {
      if (d < 1 || d >= D || N < d + 1) {
        throw std::invalid_argument("grid: d=" + std::to_string(d) + " outside [1, D-1] or N < d+1");
      }
    }
    for (double r : ratio_list) {
      if (!(r >= 0.0 && r < 1.0)) throw std::invalid_argument("grid: ratios must lie in [0, 1)");
    }
    for (double s : sigma_list) {
      if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("grid: sigma must be >= 0");
    }
    for (const auto& m : methods) {
      if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end()) {
        throw std::invalid_argument("grid: unknown method '" + m + "'");
      }
    }
  }
};

struct GridRecord {
  Index D = 0, d = 0, N = 0, M = 0;
  double ratio = 0.0, sigma = 0.0;
  Index trial = 0;
  std::uint64_t seed = 0;
  std::string method;
  bool separation = false;
  double area_above = std::numeric_limits<double>::quiet_NaN();
  double angle_deg = std::numeric_limits<double>::quiet_NaN();
  Index iterations = 0;
  double wall_ms = 0.0;
  std::string status = "ok";
};

inline Index outliers_for_ratio(Index n, double ratio) {
  return static_cast<Index>(std::llround(ratio * static_cast<double>(n) / (1.0 - ratio)));
}

/// RANSAC trials costing about as much as the simplex pivots spent by the
/// LP recursion on the same data. One pivot touches the nonzeros of the LP
/// matrix, about L (D + 2); one trial projects all L points onto a
/// d-dimensional model, about L D (d + 1).
inline Index work_matched_trials(Index pivots, Index dim, Index d) {
  const double per_pivot = static_cast<double>(dim + 2);
  const double per_trial = static_cast<double>(dim * (d + 1));
  return std::max<Index>(1, static_cast<Index>(std::ceil(static_cast<double>(pivots) * per_pivot / per_trial)));
}

struct GridCell {
  Index d = 0;
  double ratio = 0.0;
  double sigma = 0.0;
};

inline std::vector<GridCell> grid_cells(const GridConfig& cfg) {
  std::vector<GridCell> cells;
  for (double s : cfg.sigma_list)
    for (Index d : cfg.d_list)
      for (double r : cfg.ratio_list) cells.push_back({d, r, s});
  return cells;
}

namespace detail {

struct MethodRun {
  std::optional<Matrix> basis;
  Index iterations = 0;
  Index lp_pivots = 0;
  double wall_ms = 0.0;
  std::string error;
};

template <class F>
MethodRun timed(F&& f) {
  MethodRun run;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    f(run);
  } catch (const std::exception& e) {
    run.basis.reset();
    run.error = e.what();
  }
  run.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

inline std::vector<GridRecord> run_trial(const GridConfig& cfg, const GridCell& cell, Index trial,
                                         std::uint64_t seed,
                                         const std::function<void(const std::string&)>& log) {
  const Index m = outliers_for_ratio(cfg.N, cell.ratio);
  const Index c = cfg.D - cell.d;
  const Dataset ds = synthesize(cfg.D, cell.d, cfg.N, m, cell.sigma, seed);
  const Matrix truth = orthogonal_complement(ds.true_basis);

  const auto wants = [&](const char* name) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), name) != cfg.methods.end();
  };
  std::optional<MethodRun> lp_run;
  if (wants("dpcp-lp") || (wants("ransac") && !cfg.ransac_budget)) {
    lp_run = timed([&](MethodRun& r) {
      const SubspaceEstimate e = dpcp_lp(ds.data, c, SolverConfig::lp());
      r.basis = e.complement_basis;
      r.iterations = e.total_iterations();
      r.lp_pivots = e.lp_pivots;
    });
  }

  std::vector<GridRecord> out;
  for (const auto& method : cfg.methods) {
    MethodRun run;
    if (method == "dpcp-lp") {
      run = *lp_run;
    } else if (method == "dpcp-irls") {
      run = timed([&](MethodRun& r) {
        const SubspaceEstimate e = dpcp_irls(ds.data, c, SolverConfig::irls());
        r.basis = e.complement_basis;
        r.iterations = e.total_iterations();
      });
    } else if (method == "dpcp-d") {
      run = timed([&](MethodRun& r) {
        SolverConfig sc = SolverConfig::denoised();
        sc.sigma = cell.sigma;
        const SubspaceEstimate e = dpcp_d_subspace(ds.data, c, sc);
        r.basis = e.complement_basis;
        r.iterations = e.total_iterations();
      });
    } else if (method == "ransac") {
      run = timed([&](MethodRun& r) {
        RansacConfig rc;
        rc.dim = cell.d;
        rc.threshold = cell.sigma > 0.0 ? cell.sigma : 1e-3;
        rc.success_prob = cfg.ransac_success_prob;
        rc.outlier_ratio_hint = static_cast<double>(m) / static_cast<double>(m + cfg.N);
        rc.seed = derive_seed(seed, 100);
        if (cfg.ransac_budget) {
          rc.trials = *cfg.ransac_budget;
        } else {
          rc.max_trials = work_matched_trials(lp_run->lp_pivots, cfg.D, cell.d);
        }
        const RansacResult res = ransac(ds.data, rc);
        r.basis = res.estimate.complement_basis;
        r.iterations = res.trials;
      });
    }
    GridRecord rec;
    rec.D = cfg.D;
    rec.d = cell.d;
    rec.N = cfg.N;
    rec.M = m;
    rec.ratio = cell.ratio;
    rec.sigma = cell.sigma;
    rec.trial = trial;
    rec.seed = seed;
    rec.method = method;
    rec.iterations = run.iterations;
    rec.wall_ms = run.wall_ms;
    if (run.basis) {
      const Signal sig = distance_signal(ds.data, *run.basis, ds.labels);
      rec.separation = perfect_separation(sig);
      rec.area_above = roc(sig).area_above;
      rec.angle_deg = largest_principal_angle(*run.basis, truth) * 180.0 / std::numbers::pi;
    } else {
      rec.status = "failed";
      if (log) log("d=" + std::to_string(cell.d) + " R=" + format_double(cell.ratio) +
                   " trial=" + std::to_string(trial) + " " + method + " failed: " + run.error);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace detail

/// Seed of the dataset for (cell, trial): cell seeds are derived from the
/// base seed, trials XOR their index into it.
inline std::uint64_t grid_seed(std::uint64_t base, std::size_t cell, Index trial) {
  return derive_seed(base, cell) ^ static_cast<std::uint64_t>(trial);
}

/// Runs every method on every (cell, trial). Records come back ordered by
/// cell, trial and method regardless of `jobs`.
inline std::vector<GridRecord> run_grid(const GridConfig& cfg, unsigned jobs = 1,
                                        const std::function<void(const std::string&)>& log = {}) {
  cfg.validate();
  const auto cells = grid_cells(cfg);
  const std::size_t tasks = cells.size() * static_cast<std::size_t>(cfg.trials);
  std::vector<std::vector<GridRecord>> results(tasks);
  std::vector<Index> remaining(cells.size(), cfg.trials);
  std::mutex log_mutex;
  const auto safe_log = [&](const std::string& line) {
    if (!log) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    log(line);
  };
  parallel_for(tasks, jobs, [&](std::size_t t) {
    const std::size_t cell = t / static_cast<std::size_t>(cfg.trials);
    const Index trial = static_cast<Index>(t % static_cast<std::size_t>(cfg.trials));
    results[t] = detail::run_trial(cfg, cells[cell], trial, grid_seed(cfg.seed, cell, trial), safe_log);
    std::lock_guard<std::mutex> lock(log_mutex);
    if (--remaining[cell] == 0 && log) {
      log("cell d=" + std::to_string(cells[cell].d) + " R=" + format_double(cells[cell].ratio) +
          " sigma=" + format_double(cells[cell].sigma) + " done");
    }
  });
  std::vector<GridRecord> out;
  for (auto& r : results) std::move(r.begin(), r.end(), std::back_inserter(out));
  return out;
}

}  // namespace dpcp
