#pragma once

// Independent reference computations used by the tests.

#include "dpcp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace dpcp::oracle {

struct SweepMinimum {
  Vector b;
  double objective = std::numeric_limits<double>::infinity();
};

inline double l1_objective(const Matrix& data, const Vector& b) {
  return (data.transpose() * b).lpNorm<1>();
}

/// Global minimum of ||data^T b||_1 over the unit circle, by a sweep of
/// b(theta) = (cos theta, sin theta) at `step_deg` followed by zooming in
/// around the best sample.
inline SweepMinimum circle_sweep(const Matrix& data, double step_deg = 0.01) {
  SweepMinimum best;
  const auto eval = [&](double theta) {
    Vector b(2);
    b << std::cos(theta), std::sin(theta);
    const double f = l1_objective(data, b);
    if (f < best.objective) {
      best.objective = f;
      best.b = b;
    }
  };
  const double step = step_deg * std::numbers::pi / 180.0;
  for (double t = 0.0; t < std::numbers::pi; t += step) eval(t);
  double width = step;
  for (int zoom = 0; zoom < 30; ++zoom) {
    const double centre = std::atan2(best.b(1), best.b(0));
    for (int k = -10; k <= 10; ++k) eval(centre + width * k / 10.0);
    width /= 5.0;
  }
  return best;
}

/// Global minimum of ||data^T b||_1 over the unit sphere of R^3. The
/// objective is piecewise linear on cones cut by the planes x_j^T b = 0, so
/// its minimum on the sphere sits where two such planes meet: the candidates
/// are the normalized cross products of every pair of columns. A coarse
/// angular grid is added as a safety net.
inline SweepMinimum sphere3_minimum(const Matrix& data) {
  SweepMinimum best;
  const auto eval = [&](Vector b) {
    const double n = b.norm();
    if (!(n > 1e-12)) return;
    b /= n;
    const double f = l1_objective(data, b);
    if (f < best.objective) {
      best.objective = f;
      best.b = b;
    }
  };
  for (Index i = 0; i < data.cols(); ++i) {
    for (Index j = i + 1; j < data.cols(); ++j) {
      const Eigen::Vector3d a = data.col(i), c = data.col(j);
      eval(a.cross(c));
    }
  }
  const int steps = 180;
  for (int p = 0; p <= steps; ++p) {
    const double phi = std::numbers::pi * p / steps;
    for (int q = 0; q < 2 * steps; ++q) {
      const double theta = std::numbers::pi * q / steps;
      Vector b(3);
      b << std::sin(phi) * std::cos(theta), std::sin(phi) * std::sin(theta), std::cos(phi);
      eval(b);
    }
  }
  return best;
}

// Exhaustive vertex enumeration for min c^T x, A x = b, x >= 0: every
// nonsingular m-column basis with a nonnegative basic solution is a vertex.
// Returns +inf when no vertex exists.
inline double vertex_enumeration_minimum(const Matrix& a, const Vector& b, const Vector& c) {
  const Index m = a.rows();
  const Index n = a.cols();
  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + m, true);
  do {
    std::vector<Index> cols;
    for (Index j = 0; j < n; ++j) if (pick[j]) cols.push_back(j);
    Matrix basis(m, m);
    for (Index k = 0; k < m; ++k) basis.col(k) = a.col(cols[k]);
    Eigen::FullPivLU<Matrix> lu(basis);
    if (lu.rank() < m) continue;
    const Vector xb = lu.solve(b);
    if (xb.minCoeff() < -1e-10) continue;
    double obj = 0.0;
    for (Index k = 0; k < m; ++k) obj += c(cols[k]) * xb(k);
    best = std::min(best, obj);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

/// Unit vectors in R^2 at the given angles (degrees).
inline Matrix circle_points(const std::vector<double>& degrees) {
  Matrix m(2, static_cast<Index>(degrees.size()));
  for (std::size_t k = 0; k < degrees.size(); ++k) {
    const double t = degrees[k] * std::numbers::pi / 180.0;
    m(0, static_cast<Index>(k)) = std::cos(t);
    m(1, static_cast<Index>(k)) = std::sin(t);
  }
  return m;
}

}  // namespace dpcp::oracle
