#include "dpcp/datagen.hpp"
#include "dpcp/dpcp.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace dpcp {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Matrix plane_instance() {
  // Five copies of e1 as inliers, outliers at 20, 50 and 80 degrees.
  return oracle::circle_points({0, 0, 0, 0, 0, 20, 50, 80});
}

Matrix permute_columns(const Matrix& m, std::uint64_t seed) {
  std::vector<Index> order(m.cols());
  std::iota(order.begin(), order.end(), Index{0});
  CounterRng rng(seed);
  for (Index i = m.cols() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  Matrix out(m.rows(), m.cols());
  for (Index j = 0; j < m.cols(); ++j) out.col(j) = m.col(order[j]);
  return out;
}

Matrix flip_some_columns(const Matrix& m) {
  Matrix out = m;
  for (Index j = 0; j < m.cols(); j += 3) out.col(j) = -out.col(j);
  return out;
}

double max_column_gap_up_to_sign(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (Index j = 0; j < a.cols(); ++j) {
    worst = std::max(worst, std::min((a.col(j) - b.col(j)).norm(), (a.col(j) + b.col(j)).norm()));
  }
  return worst;
}

TEST(DpcpLp, OutlierFreeHyperplaneGivesTheNormal) {
  const Dataset ds = synthesize(3, 2, 30, 0, 0.0, 5);
  const SubspaceEstimate e = dpcp_lp(ds.data, 1);
  const Vector normal = orthogonal_complement(ds.true_basis).col(0);
  EXPECT_LE(std::acos(std::min(1.0, std::abs(e.complement_basis.col(0).dot(normal)))), 1e-7);
  EXPECT_LE(std::abs(e.complement_basis.col(0).dot(normal)) - 1.0, 1e-12);
  EXPECT_LE((ds.true_basis.transpose() * e.complement_basis).norm(), 1e-9);
}

TEST(DpcpLp, PlaneInstanceMatchesSweep) {
  const Matrix x = plane_instance();
  const SubspaceEstimate e = dpcp_lp(x, 1);
  const auto best = oracle::circle_sweep(x);
  const Vector b = e.complement_basis.col(0);
  EXPECT_NEAR(oracle::l1_objective(x, b), best.objective, 1e-9);
  EXPECT_LE(std::acos(std::min(1.0, std::abs(b.dot(best.b)))), 0.01 * kDeg);
  // The global minimizer here is the normal e2 of the inlier line.
  EXPECT_NEAR(std::abs(b(1)), 1.0, 1e-12);
}

TEST(DpcpLp, HighRelativeDimensionConvergesOrthogonally) {
  const Dataset ds = synthesize(10, 9, 200, 200, 0.0, 17);
  const SubspaceEstimate e = dpcp_lp(ds.data, 1);
  const auto& trace = e.objective_trace[0];
  ASSERT_GE(trace.size(), 2u);
  EXPECT_LE(e.iterations_per_component[0], 10);
  for (std::size_t k = 1; k < trace.size(); ++k) EXPECT_LE(trace[k], trace[k - 1] + 1e-12);
  EXPECT_LT(trace[1], trace[0]);
  const Vector b = e.complement_basis.col(0);
  EXPECT_NEAR(angle_to_subspace(b, ds.true_basis), std::numbers::pi / 2, 1e-6);
}

TEST(DpcpLp, RecursionIteratesSatisfyConstraintAndNormBound) {
  const Matrix x = normalize_columns(synthesize(5, 3, 40, 30, 0.0, 3).data);
  Vector n_hat = smallest_right_singular_vectors(x.transpose(), 1).col(0);
  double previous = oracle::l1_objective(x, n_hat);
  for (int k = 0; k < 6; ++k) {
    const LpStepResult step = dpcp_lp_step(x, n_hat, Matrix(5, 0));
    EXPECT_NEAR(step.n.dot(n_hat), 1.0, 1e-9);
    EXPECT_GE(step.n.norm(), 1.0 - 1e-9);
    n_hat = step.n.normalized();
    const double current = oracle::l1_objective(x, n_hat);
    EXPECT_LE(current, previous + 1e-12);
    previous = current;
  }
}

TEST(DpcpLp, MultipleComponentsAreOrthonormal) {
  const Dataset ds = synthesize(8, 5, 100, 60, 0.0, 9);
  const SubspaceEstimate e = dpcp_lp(ds.data, 3);
  const Matrix& b = e.complement_basis;
  ASSERT_EQ(b.cols(), 3);
  EXPECT_LE((b.transpose() * b - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((ds.true_basis.transpose() * b).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(e.objective_trace.size(), 3u);
  EXPECT_GT(e.lp_pivots, 0);
}

TEST(DpcpLp, RejectsBadCodimension) {
  EXPECT_THROW(dpcp_lp(Matrix::Identity(3, 3), 4), std::invalid_argument);
  SolverConfig bad;
  bad.epsilon = 0.0;
  EXPECT_THROW(dpcp_lp(Matrix::Identity(3, 3), 1, bad), std::invalid_argument);
}

TEST(DpcpLp, InvariantToColumnPermutation) {
  const Matrix x = synthesize(6, 4, 50, 30, 0.0, 12).data;
  const SubspaceEstimate a = dpcp_lp(x, 2);
  const SubspaceEstimate b = dpcp_lp(permute_columns(x, 1), 2);
  EXPECT_LE((a.complement_basis - b.complement_basis).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DpcpLp, InvariantToColumnSigns) {
  const Matrix x = synthesize(5, 3, 40, 20, 0.0, 13).data;
  const SubspaceEstimate a = dpcp_lp(x, 2);
  const SubspaceEstimate b = dpcp_lp(flip_some_columns(x), 2);
  EXPECT_LE(max_column_gap_up_to_sign(a.complement_basis, b.complement_basis), 1e-10);
}

TEST(DpcpIrls, OutlierFreeRecoversComplement) {
  const Dataset ds = synthesize(7, 4, 50, 0, 0.0, 2);
  const SubspaceEstimate e = dpcp_irls(ds.data, 3);
  const Vector angles = principal_angles(e.complement_basis, orthogonal_complement(ds.true_basis));
  EXPECT_LE(angles.maxCoeff(), 1e-6);
}

TEST(DpcpIrls, PlaneInstanceMatchesSweep) {
  const Matrix x = plane_instance();
  const SubspaceEstimate e = dpcp_irls(x, 1);
  const auto best = oracle::circle_sweep(x);
  const Vector b = e.complement_basis.col(0);
  EXPECT_LE(std::acos(std::min(1.0, std::abs(b.dot(best.b)))), 0.1 * kDeg);
}

TEST(DpcpIrls, ObjectiveNonIncreasingWhileResidualsExceedDelta) {
  // Noisy inliers keep every residual well above delta.
  const Dataset ds = synthesize(8, 6, 150, 100, 0.05, 31);
  SolverConfig cfg = SolverConfig::irls();
  cfg.epsilon = 1e-12;
  cfg.t_max = 40;
  const SubspaceEstimate e = dpcp_irls(ds.data, 2, cfg);
  const auto& trace = e.objective_trace[0];
  ASSERT_GE(trace.size(), 3u);
  for (std::size_t k = 1; k < trace.size(); ++k) EXPECT_LE(trace[k], trace[k - 1] + 1e-9) << k;
}

TEST(DpcpIrls, InvariantToColumnPermutationAndSigns) {
  const Matrix x = synthesize(6, 3, 60, 40, 0.0, 14).data;
  const SubspaceEstimate a = dpcp_irls(x, 3);
  const SubspaceEstimate b = dpcp_irls(permute_columns(x, 2), 3);
  EXPECT_LE(principal_angles(a.complement_basis, b.complement_basis).maxCoeff(), 1e-7);
  EXPECT_LE((a.complement_basis - b.complement_basis).cwiseAbs().maxCoeff(), 1e-10);
  const SubspaceEstimate c = dpcp_irls(flip_some_columns(x), 3);
  EXPECT_LE(max_column_gap_up_to_sign(a.complement_basis, c.complement_basis), 1e-10);
}

TEST(SoftThreshold, Examples) {
  const Vector v{{1.2, -0.3, 0.0}};
  const Vector y = soft_threshold(v, 0.5);
  EXPECT_NEAR(y(0), 0.7, 1e-15);
  EXPECT_EQ(y(1), 0.0);
  EXPECT_EQ(y(2), 0.0);
  EXPECT_EQ(soft_threshold(v, 0.0), v);
  EXPECT_THROW(soft_threshold(v, -1.0), std::invalid_argument);
}

TEST(SoftThreshold, MinimizesProximalObjectiveOnGrid) {
  const double tau = 0.37;
  const Vector v{{-2.0, -0.5, -0.2, 0.0, 0.1, 0.37, 0.9, 3.3}};
  const Vector y = soft_threshold(v, tau);
  for (Index i = 0; i < v.size(); ++i) {
    const auto f = [&](double t) { return tau * std::abs(t) + 0.5 * (t - v(i)) * (t - v(i)); };
    double best_t = 0.0, best_f = f(0.0);
    for (double t = -4.0; t <= 4.0; t += 1e-4) {
      if (f(t) < best_f) {
        best_f = f(t);
        best_t = t;
      }
    }
    EXPECT_NEAR(y(i), best_t, 2e-4);
    EXPECT_LE(f(y(i)), best_f + 1e-12);
  }
}

TEST(DpcpD, LargeTauThresholdsEverythingAway) {
  const Matrix x = synthesize(4, 3, 30, 10, 0.0, 6).data;
  const Vector b0 = smallest_right_singular_vectors(x.transpose(), 1).col(0);
  SolverConfig cfg = SolverConfig::denoised();
  cfg.tau = (x.transpose() * b0).cwiseAbs().maxCoeff() + 1e-9;
  const DenoisedResult r = dpcp_d(x, cfg);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(r.y.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE((r.b - b0).norm(), 1e-12);
}

TEST(DpcpD, AgreesWithLpOnNoiseFreeHyperplane) {
  const Dataset ds = synthesize(4, 3, 120, 30, 0.0, 8);
  const DenoisedResult r = dpcp_d(ds.data);
  const Vector lp = dpcp_lp(ds.data, 1).complement_basis.col(0);
  EXPECT_LE(std::acos(std::min(1.0, std::abs(r.b.dot(lp)))), 1.0 * kDeg);
  EXPECT_NEAR(r.b.norm(), 1.0, 1e-12);
}

TEST(DpcpD, ExtraYStepChangesObjectiveLittle) {
  const Dataset ds = synthesize(6, 4, 100, 50, 0.02, 10);
  const SolverConfig cfg = SolverConfig::denoised();
  const DenoisedResult r = dpcp_d(ds.data, cfg);
  ASSERT_TRUE(r.converged);
  const Matrix x = normalize_columns(ds.data);
  const double tau = cfg.resolved_tau(x.cols());
  const auto j = [&](const Vector& y) {
    return tau * y.lpNorm<1>() + 0.5 * (y - x.transpose() * r.b).squaredNorm();
  };
  const double before = j(r.y);
  const double after = j(soft_threshold(x.transpose() * r.b, tau));
  EXPECT_LE(after, before + 1e-12);
  EXPECT_LE(before - after, cfg.epsilon * before);
}

TEST(DpcpD, DefaultTauUsesNoiseHint) {
  SolverConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.resolved_tau(400), 0.05);
  cfg.sigma = 0.1;
  EXPECT_DOUBLE_EQ(cfg.resolved_tau(400), 0.1);
  cfg.tau = 0.3;
  EXPECT_DOUBLE_EQ(cfg.resolved_tau(400), 0.3);
}

TEST(DpcpD, SubspaceComponentsAreOrthonormal) {
  const Dataset ds = synthesize(8, 6, 200, 100, 0.0, 3);
  const SubspaceEstimate e = dpcp_d_subspace(ds.data, 2);
  const Matrix& b = e.complement_basis;
  EXPECT_LE((b.transpose() * b - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(principal_angles(b, orthogonal_complement(ds.true_basis)).maxCoeff(), 5.0 * kDeg);
}

TEST(DpcpD, InvariantToColumnPermutation) {
  const Matrix x = synthesize(5, 4, 60, 30, 0.01, 15).data;
  const DenoisedResult a = dpcp_d(x);
  const DenoisedResult b = dpcp_d(permute_columns(x, 3));
  EXPECT_LE((a.b - b.b).cwiseAbs().maxCoeff(), 1e-12);
}

}  // namespace
}  // namespace dpcp
