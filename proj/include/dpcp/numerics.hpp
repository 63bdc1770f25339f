#pragma once

// Dense linear-algebra kernel shared by every solver: smallest singular
// directions, orthonormalization and SPD solves.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dpcp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flips `v` so that its first coordinate with magnitude above `tol` is
/// positive. Makes singular directions reproducible across runs.
inline void fix_sign(Eigen::Ref<Vector> v, double tol = 1e-8) {
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > tol) {
      if (v(i) < 0) v = -v;
      return;
    }
  }
}

inline void fix_column_signs(Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    Vector col = m.col(j);
    fix_sign(col);
    m.col(j) = col;
  }
}

/// Eigenvectors of the symmetric matrix `gram` belonging to its `c` smallest
/// eigenvalues, ordered ascending, with the sign convention applied.
inline Matrix smallest_eigenvectors(const Matrix& gram, Index c) {
  if (gram.rows() != gram.cols()) {
    throw std::invalid_argument("smallest_eigenvectors: matrix is not square");
  }
  if (c < 0 || c > gram.rows()) {
    throw std::invalid_argument("smallest_eigenvectors: c exceeds dimension");
  }
  // Householder tridiagonalization followed by implicit symmetric QR.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("smallest_eigenvectors: eigensolver failed");
  }
  Matrix out = eig.eigenvectors().leftCols(c);
  fix_column_signs(out);
  return out;
}

/// The `c` right-singular directions of `a` (L x D) with the smallest
/// singular values, as the columns of a D x c matrix in ascending order.
inline Matrix smallest_right_singular_vectors(const Matrix& a, Index c) {
  if (a.rows() < 1) {
    throw std::invalid_argument("smallest_right_singular_vectors: empty input");
  }
  if (c < 0 || c > a.cols()) {
    throw std::invalid_argument(
        "smallest_right_singular_vectors: c=" + std::to_string(c) +
        " exceeds column count " + std::to_string(a.cols()));
  }
  Matrix gram = Matrix::Zero(a.cols(), a.cols());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  return smallest_eigenvectors(gram, c);
}

/// Orthonormal basis of span(v), built by modified Gram-Schmidt with one
/// reorthogonalization pass. Columns whose residual falls below
/// `rel_tol` times their original norm are dropped, so k' = rank(v).
inline Matrix orthonormalize(const Matrix& v, double rel_tol = 1e-10) {
  Matrix q(v.rows(), v.cols());
  Index kept = 0;
  for (Index j = 0; j < v.cols(); ++j) {
    Vector w = v.col(j);
    const double original = w.norm();
    if (!(original > 0.0)) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (Index i = 0; i < kept; ++i) {
        w -= q.col(i).dot(w) * q.col(i);
      }
    }
    const double residual = w.norm();
    if (residual <= rel_tol * original) continue;
    q.col(kept++) = w / residual;
  }
  return q.leftCols(kept);
}

/// Orthonormal basis of the orthogonal complement of span(basis), where
/// `basis` has orthonormal columns. Returns a D x (D - k) matrix.
inline Matrix orthogonal_complement(const Matrix& basis) {
  const Index dim = basis.rows();
  if (basis.cols() == 0) return Matrix::Identity(dim, dim);
  Eigen::HouseholderQR<Matrix> qr(basis);
  Matrix full = qr.householderQ() * Matrix::Identity(dim, dim);
  return full.rightCols(dim - basis.cols());
}

/// Cholesky factorization of a symmetric positive definite matrix, kept so
/// repeated solves against the same matrix reuse it.
class SpdSolver {
 public:
  explicit SpdSolver(const Matrix& g, double symmetry_tol = 1e-10) {
    if (g.rows() != g.cols()) {
      throw std::invalid_argument("SpdSolver: matrix is not square");
    }
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > symmetry_tol * scale) {
      throw std::invalid_argument("SpdSolver: matrix is not symmetric");
    }
    llt_.compute(g);
    if (llt_.info() != Eigen::Success) {
      throw NotPositiveDefinite("SpdSolver: non-positive pivot in Cholesky");
    }
  }

  Vector solve(const Vector& r) const {
    if (r.size() != llt_.rows()) {
      throw std::invalid_argument("SpdSolver: right-hand side has wrong size");
    }
    return llt_.solve(r);
  }

  Index dim() const { return llt_.rows(); }

 private:
  Eigen::LLT<Matrix> llt_;
};

inline Vector solve_spd(const Matrix& g, const Vector& r) {
  return SpdSolver(g).solve(r);
}

/// Columns scaled to unit l2 norm; zero columns are left untouched.
inline Matrix normalize_columns(const Matrix& data) {
  Matrix out = data;
  for (Index j = 0; j < out.cols(); ++j) {
    const double n = out.col(j).norm();
    if (n > 0.0) out.col(j) /= n;
  }
  return out;
}

/// Principal angles (radians, ascending) between span(a) and span(b), both
/// given by orthonormal columns.
inline Vector principal_angles(const Matrix& a, const Matrix& b) {
  const Index k = std::min(a.cols(), b.cols());
  if (k == 0) return Vector();
  Matrix cross = a.transpose() * b;
  Eigen::JacobiSVD<Matrix> svd(cross);
  Vector s = svd.singularValues();
  Vector angles(k);
  for (Index i = 0; i < k; ++i) {
    angles(i) = std::acos(std::clamp(s(i), -1.0, 1.0));
  }
  return angles;
}

/// Angle (radians) between vector `v` and its projection onto span(basis).
inline double angle_to_subspace(const Vector& v, const Matrix& basis) {
  const double n = v.norm();
  if (n == 0.0) return 0.0;
  const double in_span = (basis.transpose() * v).norm() / n;
  const double out_span = (v - basis * (basis.transpose() * v)).norm() / n;
  return std::atan2(out_span, in_span);
}

}  // namespace dpcp
