#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gridmech/error.hpp"
#include "gridmech/qp.hpp"
#include "gridmech/verification.hpp"
#include "oracles.hpp"

namespace gridmech {
namespace {

using qp::kInf;
using qp::Relation;

struct RandomQp {
  Eigen::MatrixXd Q;
  Eigen::VectorXd q;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

RandomQp random_qp(int n, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  RandomQp r;
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = g(rng);
  r.Q = M.transpose() * M / n + 0.1 * Eigen::MatrixXd::Identity(n, n);
  r.q = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i) r.q(i) = 3.0 * g(rng);
  r.A = Eigen::MatrixXd(m, n);
  r.b = Eigen::VectorXd(m);
  for (int k = 0; k < m; ++k) {
    for (int j = 0; j < n; ++j) r.A(k, j) = g(rng);
    r.b(k) = 0.5 + std::abs(g(rng));  // x = 0 is strictly feasible
  }
  return r;
}

qp::QuadraticProgram to_program(const RandomQp& r) {
  qp::QuadraticProgram p;
  const int n = static_cast<int>(r.q.size());
  for (int j = 0; j < n; ++j) p.add_variable(-kInf, kInf, r.q(j));
  for (int i = 0; i < n; ++i) {
    p.add_quadratic(i, i, r.Q(i, i));
    for (int j = i + 1; j < n; ++j) p.add_quadratic(i, j, r.Q(i, j));
  }
  for (int k = 0; k < r.A.rows(); ++k) {
    std::vector<qp::Term> terms;
    for (int j = 0; j < n; ++j) terms.push_back({static_cast<std::size_t>(j), r.A(k, j)});
    p.add_constraint(std::move(terms), Relation::LessEqual, r.b(k));
  }
  return p;
}

class RandomQpAgainstActiveSets : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(RandomQpAgainstActiveSets, MatchesEnumeratedKktPoint) {
  const RandomQp r = random_qp(20, 5, GetParam());
  const auto ref = oracle::enumerate_active_sets(r.Q, r.q, r.A, r.b);
  ASSERT_TRUE(ref.found);
  EXPECT_EQ(ref.sets_tried, 32);

  const qp::QuadraticProgram p = to_program(r);
  const qp::Solution s = qp::solve(p, {1e-10, 1e-10, 1e-10, 200, true});
  ASSERT_TRUE(s.optimal()) << qp::to_string(s.status);
  for (int j = 0; j < 20; ++j) EXPECT_NEAR(s.x[j], ref.x(j), 1e-6) << "variable " << j;
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(s.row_duals[k], ref.multipliers(k), 1e-6) << "row " << k;
  EXPECT_NEAR(s.objective, ref.objective, 1e-7 * std::max(1.0, std::abs(ref.objective)));

  const KktReport kkt = kkt_residuals(p, s);
  EXPECT_LT(kkt.worst(), 1e-6);
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomQpAgainstActiveSets, ::testing::Values(1u, 2u, 3u, 4u, 5u, 6u));

TEST(QpSolver, BoxConstrainedDiagonalClampsUnconstrainedMinimizer) {
  // min sum (d_j/2) x_j^2 + q_j x_j on [l, u]: x_j = clamp(-q_j/d_j, l, u).
  qp::QuadraticProgram p;
  const double d[] = {1.0, 2.0, 4.0, 0.5};
  const double q[] = {-3.0, 1.0, -10.0, 0.25};
  const double lo[] = {0.0, -1.0, 0.0, -kInf};
  const double hi[] = {2.0, 1.0, 1.0, kInf};
  for (int j = 0; j < 4; ++j) {
    p.add_variable(lo[j], hi[j], q[j]);
    p.add_quadratic(j, j, d[j]);
  }
  const auto s = qp::solve(p);
  ASSERT_TRUE(s.optimal());
  for (int j = 0; j < 4; ++j)
    EXPECT_NEAR(s.x[j], std::clamp(-q[j] / d[j], lo[j], hi[j]), 1e-6);
}

TEST(QpSolver, EqualityConstrainedProjection) {
  // Closest point to (1, 2, 3) on x + y + z = 3: subtract the mean excess.
  qp::QuadraticProgram p;
  const double c[] = {1.0, 2.0, 3.0};
  for (double v : c) {
    const auto j = p.add_variable(-kInf, kInf, -v);
    p.add_quadratic(j, j, 1.0);
  }
  p.add_constraint({{0, 1.0}, {1, 1.0}, {2, 1.0}}, Relation::Equal, 3.0);
  const auto s = qp::solve(p);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.x[0], 0.0, 1e-7);
  EXPECT_NEAR(s.x[1], 1.0, 1e-7);
  EXPECT_NEAR(s.x[2], 2.0, 1e-7);
  // y = -(x - c) component: multiplier 1 on the equality.
  EXPECT_NEAR(s.row_duals[0], 1.0, 1e-6);
}

TEST(QpSolver, LinearProgramVertex) {
  // max x + y s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0 -> (1.6, 1.2).
  qp::QuadraticProgram p;
  p.add_variable(0.0, kInf, -1.0);
  p.add_variable(0.0, kInf, -1.0);
  p.add_constraint({{0, 1.0}, {1, 2.0}}, Relation::LessEqual, 4.0);
  p.add_constraint({{0, 3.0}, {1, 1.0}}, Relation::LessEqual, 6.0);
  const auto s = qp::solve(p);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.x[0], 1.6, 1e-6);
  EXPECT_NEAR(s.x[1], 1.2, 1e-6);
  EXPECT_NEAR(s.objective, -2.8, 1e-6);
}

TEST(QpSolver, DetectsInfeasibleRows) {
  qp::QuadraticProgram p;
  p.add_variable(0.0, 1.0, 1.0);
  p.add_constraint({{0, 1.0}}, Relation::Equal, 5.0);
  const auto s = qp::solve(p);
  EXPECT_FALSE(s.optimal());
}

TEST(QpSolver, DeterministicAcrossRuns) {
  const qp::QuadraticProgram p = to_program(random_qp(12, 4, 99));
  const auto a = qp::solve(p);
  const auto b = qp::solve(p);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(QpProblem, RejectsBadData) {
  qp::QuadraticProgram p;
  p.add_variable();
  p.add_quadratic(0, 0, -1.0);
  EXPECT_THROW(p.validate(), ModelError);

  qp::QuadraticProgram bad_index;
  bad_index.add_variable();
  bad_index.add_constraint({{3, 1.0}}, Relation::Equal, 0.0);
  EXPECT_THROW(bad_index.validate(), ModelError);

  qp::QuadraticProgram nan_cost;
  nan_cost.add_variable(0.0, 1.0, std::nan(""));
  EXPECT_THROW(nan_cost.validate(), ModelError);
}

TEST(QpProblem, ObjectiveAndActivity) {
  qp::QuadraticProgram p;
  p.add_variable(0, kInf, 1.0);
  p.add_variable(0, kInf, -2.0);
  p.add_quadratic(0, 0, 2.0);
  p.add_quadratic(0, 1, 1.0);
  p.add_constant(5.0);
  p.add_constraint({{0, 1.0}, {1, -1.0}}, Relation::LessEqual, 0.0);
  const std::vector<double> x = {1.0, 3.0};
  // 1/2 * 2 * 1 + 1 * 1 * 3 + 1 - 6 + 5
  EXPECT_DOUBLE_EQ(p.objective(x), 1.0 + 3.0 + 1.0 - 6.0 + 5.0);
  EXPECT_DOUBLE_EQ(p.row_activity(x)[0], -2.0);
}

TEST(KktResiduals, FlagsPerturbedSolution) {
  const qp::QuadraticProgram p = to_program(random_qp(10, 3, 5));
  auto s = qp::solve(p);
  ASSERT_TRUE(s.optimal());
  EXPECT_LT(kkt_residuals(p, s).worst(), 1e-6);
  s.x[0] += 0.01;
  EXPECT_GT(kkt_residuals(p, s).stationarity, 1e-4);
}

}  // namespace
}  // namespace gridmech
