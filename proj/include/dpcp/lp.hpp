#pragma once

// Dense standard-form linear programming.
//
//   minimize  c^T x   subject to  A x = rhs,  x_j >= 0 where nonneg[j]
//
// Free variables are split into a difference of two nonnegative parts and
// the problem is solved by a two-phase revised simplex. The basis is kept
// factorized as singleton (unit-like) columns plus a small dense block; the
// bases of the l1 problems built here are dominated by singletons, so each
// pivot costs little more than one pass over the nonzeros of A.

#include "dpcp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpcp {

enum class LpStatus { optimal, infeasible, unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
  }
  return "unknown";
}

struct LpProblem {
  Vector cost;                 // n
  Matrix constraint_matrix;    // m x n
  Vector rhs;                  // m
  std::vector<bool> nonneg;    // n; false marks a free variable

  Index num_vars() const { return cost.size(); }
  Index num_rows() const { return rhs.size(); }
};

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  Vector x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::vector<Index> basis;  // original variable indices that are basic
  Index iterations = 0;      // simplex pivots over both phases
};

struct SimplexOptions {
  double pivot_tol = 1e-10;
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
};

class SimplexIterationLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

class RevisedSimplex {
 public:
  RevisedSimplex(const LpProblem& p, const SimplexOptions& opt) : opt_(opt) {
    m_ = p.num_rows();
    const Index n = p.num_vars();
    // Rows with negative rhs are negated so the artificial start is feasible.
    Vector row_sign = Vector::Ones(m_);
    rhs_ = p.rhs;
    for (Index i = 0; i < m_; ++i) {
      if (rhs_(i) < 0) {
        row_sign(i) = -1.0;
        rhs_(i) = -rhs_(i);
      }
    }
    col_start_.push_back(0);
    auto add_column = [&](Index var, double sign) {
      for (Index i = 0; i < m_; ++i) {
        const double a = p.constraint_matrix(i, var);
        if (a != 0.0) {
          rows_.push_back(i);
          vals_.push_back(sign * row_sign(i) * a);
        }
      }
      col_start_.push_back(static_cast<Index>(rows_.size()));
      origin_.push_back(var);
      origin_sign_.push_back(sign);
      cost_.push_back(sign * p.cost(var));
    };
    for (Index j = 0; j < n; ++j) {
      add_column(j, 1.0);
      if (!p.nonneg[j]) add_column(j, -1.0);
    }
    structural_ = static_cast<Index>(origin_.size());
    // One artificial per row; rows that already own a positive singleton
    // column start from that column instead and keep their artificial
    // nonbasic.
    basis_.assign(m_, -1);
    for (Index j = 0; j < structural_; ++j) {
      if (col_start_[j + 1] - col_start_[j] != 1) continue;
      const Index r = rows_[col_start_[j]];
      if (vals_[col_start_[j]] > 0 && basis_[r] < 0) basis_[r] = j;
    }
    for (Index i = 0; i < m_; ++i) {
      rows_.push_back(i);
      vals_.push_back(1.0);
      col_start_.push_back(static_cast<Index>(rows_.size()));
      origin_.push_back(-1);
      origin_sign_.push_back(0.0);
      cost_.push_back(0.0);
      if (basis_[i] < 0) basis_[i] = structural_ + i;
    }
    ncols_ = static_cast<Index>(origin_.size());
    pos_.assign(ncols_, -1);
    for (Index r = 0; r < m_; ++r) pos_[basis_[r]] = r;
    n_split_ = structural_;
  }

  LpSolution run(Index original_vars) {
    LpSolution sol;
    // Phase 1: minimize the sum of artificials.
    std::vector<double> phase_cost(ncols_, 0.0);
    for (Index j = structural_; j < ncols_; ++j) phase_cost[j] = 1.0;
    allowed_.assign(ncols_, true);
    phase_cost_ = phase_cost;
    refresh();
    const bool needs_phase1 = phase_objective() > 0.0 ||
                              std::any_of(basis_.begin(), basis_.end(),
                                          [&](Index c) { return c >= structural_; });
    if (needs_phase1) {
      const auto st = iterate(false);
      (void)st;  // phase 1 is bounded below by zero
      const double infeas = phase_objective();
      if (infeas > opt_.feasibility_tol * (1.0 + rhs_.lpNorm<Eigen::Infinity>())) {
        sol.status = LpStatus::infeasible;
        sol.iterations = iterations_;
        return sol;
      }
      drive_out_artificials();
    }
    // Phase 2.
    for (Index j = 0; j < ncols_; ++j) {
      phase_cost_[j] = j < structural_ ? cost_[j] : 0.0;
      allowed_[j] = j < structural_;
    }
    refresh();
    const auto st = iterate(true);
    sol.iterations = iterations_;
    if (st == LpStatus::unbounded) {
      sol.status = LpStatus::unbounded;
      return sol;
    }
    sol.status = LpStatus::optimal;
    sol.x = Vector::Zero(original_vars);
    for (Index r = 0; r < m_; ++r) {
      const Index c = basis_[r];
      if (c >= structural_) continue;
      sol.x(origin_[c]) += origin_sign_[c] * std::max(0.0, xb_(r));
      sol.basis.push_back(origin_[c]);
    }
    std::sort(sol.basis.begin(), sol.basis.end());
    sol.basis.erase(std::unique(sol.basis.begin(), sol.basis.end()),
                    sol.basis.end());
    return sol;
  }

 private:
  Index nnz(Index j) const { return col_start_[j + 1] - col_start_[j]; }

  double phase_objective() const {
    double s = 0.0;
    for (Index r = 0; r < m_; ++r) s += phase_cost_[basis_[r]] * xb_(r);
    return s;
  }

  double dot_column(const double* dense, Index j) const {
    double s = 0.0;
    for (Index k = col_start_[j]; k < col_start_[j + 1]; ++k) {
      s += dense[rows_[k]] * vals_[k];
    }
    return s;
  }

  // Partitions the basis into singleton columns owning distinct rows and a
  // dense remainder. With rows and columns permuted accordingly,
  //
  //   B = [ S  C1 ]      S diagonal (singletons), C2 square,
  //       [ 0  C2 ]
  //
  // so solves with B and B^T only need the inverse of the small block C2.
  void factorize() {
    singleton_row_.assign(m_, -1);
    row_owner_.assign(m_, -1);
    dense_pos_.clear();
    for (Index p = 0; p < m_; ++p) {
      const Index c = basis_[p];
      if (nnz(c) == 1 && row_owner_[rows_[col_start_[c]]] < 0) {
        singleton_row_[p] = rows_[col_start_[c]];
        row_owner_[singleton_row_[p]] = p;
      } else {
        dense_pos_.push_back(p);
      }
    }
    free_rows_.clear();
    free_index_.assign(m_, -1);
    for (Index i = 0; i < m_; ++i) {
      if (row_owner_[i] < 0) {
        free_index_[i] = static_cast<Index>(free_rows_.size());
        free_rows_.push_back(i);
      }
    }
    const Index k = static_cast<Index>(dense_pos_.size());
    Matrix block = Matrix::Zero(k, k);
    for (Index b = 0; b < k; ++b) {
      const Index c = basis_[dense_pos_[b]];
      for (Index t = col_start_[c]; t < col_start_[c + 1]; ++t) {
        if (free_index_[rows_[t]] >= 0) block(free_index_[rows_[t]], b) = vals_[t];
      }
    }
    if (k > 0) {
      Eigen::FullPivLU<Matrix> lu(block);
      if (!lu.isInvertible()) {
        throw std::runtime_error("simplex: basis became singular");
      }
      block_inv_ = lu.inverse();
    } else {
      block_inv_.resize(0, 0);
    }
  }

  // Solves B x = a for a dense right-hand side indexed by rows.
  Vector ftran_dense(const Vector& a) const {
    const Index k = static_cast<Index>(dense_pos_.size());
    Vector x(m_);
    Vector a_free(k);
    for (Index t = 0; t < k; ++t) a_free(t) = a(free_rows_[t]);
    const Vector x_dense = block_inv_ * a_free;
    Vector coupled = Vector::Zero(m_);
    for (Index b = 0; b < k; ++b) {
      x(dense_pos_[b]) = x_dense(b);
      const Index c = basis_[dense_pos_[b]];
      for (Index t = col_start_[c]; t < col_start_[c + 1]; ++t) {
        coupled(rows_[t]) += vals_[t] * x_dense(b);
      }
    }
    for (Index p = 0; p < m_; ++p) {
      const Index i = singleton_row_[p];
      if (i < 0) continue;
      x(p) = (a(i) - coupled(i)) / vals_[col_start_[basis_[p]]];
    }
    return x;
  }

  Vector ftran(Index q) const {
    Vector a = Vector::Zero(m_);
    for (Index t = col_start_[q]; t < col_start_[q + 1]; ++t) a(rows_[t]) = vals_[t];
    return ftran_dense(a);
  }

  // Solves B^T y = v for v indexed by basis positions; y is indexed by rows.
  Vector btran(const Vector& v) const {
    const Index k = static_cast<Index>(dense_pos_.size());
    Vector y = Vector::Zero(m_);
    for (Index p = 0; p < m_; ++p) {
      const Index i = singleton_row_[p];
      if (i >= 0) y(i) = v(p) / vals_[col_start_[basis_[p]]];
    }
    Vector rhs(k);
    for (Index b = 0; b < k; ++b) {
      const Index c = basis_[dense_pos_[b]];
      double s = v(dense_pos_[b]);
      for (Index t = col_start_[c]; t < col_start_[c + 1]; ++t) {
        if (row_owner_[rows_[t]] >= 0) s -= vals_[t] * y(rows_[t]);
      }
      rhs(b) = s;
    }
    const Vector y_free = block_inv_.transpose() * rhs;
    for (Index t = 0; t < k; ++t) y(free_rows_[t]) = y_free(t);
    return y;
  }

  // Refreshes the factorization, basic values and reduced costs.
  void refresh() {
    factorize();
    xb_ = ftran_dense(rhs_);
    Vector cb(m_);
    for (Index p = 0; p < m_; ++p) cb(p) = phase_cost_[basis_[p]];
    const Vector y = btran(cb);
    reduced_.assign(ncols_, 0.0);
    for (Index j = 0; j < ncols_; ++j) {
      if (pos_[j] >= 0 || !allowed_[j]) continue;
      reduced_[j] = phase_cost_[j] - dot_column(y.data(), j);
    }
  }

  Index choose_entering(bool bland) const {
    Index best = -1;
    double best_val = -opt_.optimality_tol;
    for (Index j = 0; j < ncols_; ++j) {
      if (!allowed_[j] || pos_[j] >= 0) continue;
      if (reduced_[j] < best_val) {
        best = j;
        if (bland) return best;
        best_val = reduced_[j];
      }
    }
    return best;
  }

  Index ratio_test(const Vector& eta, bool bland) const {
    Index leave = -1;
    if (bland) {
      double best = std::numeric_limits<double>::infinity();
      for (Index p = 0; p < m_; ++p) {
        if (eta(p) > opt_.pivot_tol) best = std::min(best, std::max(0.0, xb_(p)) / eta(p));
      }
      const double slack = 1e-12 * (1.0 + best);
      for (Index p = 0; p < m_; ++p) {
        if (eta(p) <= opt_.pivot_tol) continue;
        if (std::max(0.0, xb_(p)) / eta(p) > best + slack) continue;
        if (leave < 0 || basis_[p] < basis_[leave]) leave = p;
      }
      return leave;
    }
    // Harris two-pass test: bound the step with relaxed feasibility, then take
    // the largest pivot among candidates within that bound.
    double bound = std::numeric_limits<double>::infinity();
    for (Index p = 0; p < m_; ++p) {
      if (eta(p) <= opt_.pivot_tol) continue;
      bound = std::min(bound, (std::max(0.0, xb_(p)) + opt_.feasibility_tol) / eta(p));
    }
    double best_pivot = 0.0;
    for (Index p = 0; p < m_; ++p) {
      if (eta(p) <= opt_.pivot_tol) continue;
      if (std::max(0.0, xb_(p)) / eta(p) <= bound && eta(p) > best_pivot) {
        best_pivot = eta(p);
        leave = p;
      }
    }
    return leave;
  }

  void swap_into_basis(Index q, Index r) {
    pos_[basis_[r]] = -1;
    pos_[q] = r;
    basis_[r] = q;
    ++iterations_;
  }

  LpStatus iterate(bool phase2) {
    const Index limit = 50 * (m_ + ncols_) + 1000;
    const Index stall_limit = 2 * (m_ + n_split_);
    bool bland = false;
    Index stall = 0;
    double last = phase_objective();
    for (Index it = 0;; ++it) {
      if (it > limit) {
        throw SimplexIterationLimit("simplex: iteration limit exceeded");
      }
      const Index q = choose_entering(bland);
      if (q < 0) return LpStatus::optimal;
      const Vector eta = ftran(q);
      const Index r = ratio_test(eta, bland);
      if (r < 0) {
        if (phase2) return LpStatus::unbounded;
        throw std::runtime_error("simplex: unbounded direction in phase 1");
      }
      swap_into_basis(q, r);
      refresh();
      const double obj = phase_objective();
      if (obj < last - 1e-12 * (1.0 + std::abs(last))) {
        last = obj;
        stall = 0;
      } else if (++stall > stall_limit) {
        bland = true;
      }
    }
  }

  // After phase 1, pivots basic artificials (all at zero) out of the basis.
  // An artificial that cannot be replaced marks a redundant row; it stays
  // basic at zero and, being barred from entering, never moves.
  void drive_out_artificials() {
    for (Index r = 0; r < m_; ++r) {
      if (basis_[r] < structural_) continue;
      Vector unit = Vector::Zero(m_);
      unit(r) = 1.0;
      const Vector rho = btran(unit);
      Index best = -1;
      double best_abs = 1e-9;
      for (Index j = 0; j < structural_; ++j) {
        if (pos_[j] >= 0) continue;
        const double a = std::abs(dot_column(rho.data(), j));
        if (a > best_abs) {
          best_abs = a;
          best = j;
        }
      }
      if (best < 0) continue;
      swap_into_basis(best, r);
      factorize();
    }
  }

  SimplexOptions opt_;
  Index m_ = 0;
  Index ncols_ = 0;
  Index structural_ = 0;
  Index n_split_ = 0;
  Vector rhs_;
  std::vector<Index> col_start_;
  std::vector<Index> rows_;
  std::vector<double> vals_;
  std::vector<Index> origin_;
  std::vector<double> origin_sign_;
  std::vector<double> cost_;
  std::vector<double> phase_cost_;
  std::vector<bool> allowed_;
  std::vector<Index> basis_;
  std::vector<Index> pos_;
  std::vector<double> reduced_;
  Vector xb_;
  Index iterations_ = 0;
  // factorization of the current basis
  std::vector<Index> singleton_row_;
  std::vector<Index> row_owner_;
  std::vector<Index> dense_pos_;
  std::vector<Index> free_rows_;
  std::vector<Index> free_index_;
  Matrix block_inv_;
};

}  // namespace detail

inline void validate(const LpProblem& p) {
  const Index n = p.num_vars();
  const Index m = p.num_rows();
  if (p.constraint_matrix.rows() != m || p.constraint_matrix.cols() != n ||
      static_cast<Index>(p.nonneg.size()) != n) {
    throw std::invalid_argument("LpProblem: inconsistent dimensions");
  }
  if (!p.cost.allFinite() || !p.rhs.allFinite() ||
      !p.constraint_matrix.allFinite()) {
    throw std::invalid_argument("LpProblem: non-finite entries");
  }
}

/// Optimal vertex of min c^T x s.t. A x = rhs with the declared sign
/// restrictions. Infeasibility and unboundedness are reported through
/// `status`.
inline LpSolution solve_standard_form(const LpProblem& p,
                                      const SimplexOptions& opt = {}) {
  validate(p);
  detail::RevisedSimplex simplex(p, opt);
  LpSolution sol = simplex.run(p.num_vars());
  if (sol.status == LpStatus::optimal) sol.objective = p.cost.dot(sol.x);
  return sol;
}

class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LpStepResult {
  Vector n;
  double objective = 0.0;
  Index pivots = 0;
  Index rows = 0;
};

/// Builds the linear program for one step of the l1 recursion on the sphere:
///
///   min ||data^T b||_1  s.t.  b^T anchor = 1,  ortho^T b = 0
///
/// with variables [u+ ; u- ; b], u+ - u- - data^T b = 0 and u+, u- >= 0.
inline LpProblem build_lp_step(const Matrix& data, const Vector& anchor,
                               const Matrix& ortho) {
  const Index dim = data.rows();
  const Index points = data.cols();
  const Index k = ortho.cols();
  if (anchor.size() != dim || (k > 0 && ortho.rows() != dim)) {
    throw std::invalid_argument("build_lp_step: dimension mismatch");
  }
  const Index n = 2 * points + dim;
  const Index m = points + 1 + k;
  LpProblem p;
  p.cost = Vector::Zero(n);
  p.cost.head(2 * points).setOnes();
  p.constraint_matrix = Matrix::Zero(m, n);
  p.constraint_matrix.block(0, 0, points, points).setIdentity();
  p.constraint_matrix.block(0, points, points, points) =
      -Matrix::Identity(points, points);
  p.constraint_matrix.block(0, 2 * points, points, dim) = -data.transpose();
  p.constraint_matrix.block(points, 2 * points, 1, dim) = anchor.transpose();
  if (k > 0) p.constraint_matrix.block(points + 1, 2 * points, k, dim) = ortho.transpose();
  p.rhs = Vector::Zero(m);
  p.rhs(points) = 1.0;
  p.nonneg.assign(n, true);
  for (Index i = 0; i < dim; ++i) p.nonneg[2 * points + i] = false;
  return p;
}

/// Solves one recursion step and returns the minimizer b (not normalized)
/// with its l1 objective.
inline LpStepResult dpcp_lp_step(const Matrix& data, const Vector& anchor,
                                 const Matrix& ortho,
                                 const SimplexOptions& opt = {}) {
  const LpProblem p = build_lp_step(data, anchor, ortho);
  const LpSolution sol = solve_standard_form(p, opt);
  if (sol.status != LpStatus::optimal) {
    throw SolverFailure(std::string("dpcp_lp_step: linear program is ") +
                        to_string(sol.status));
  }
  LpStepResult out;
  out.n = sol.x.tail(data.rows());
  out.objective = (data.transpose() * out.n).lpNorm<1>();
  out.pivots = sol.iterations;
  out.rows = p.num_rows();
  return out;
}

}  // namespace dpcp
