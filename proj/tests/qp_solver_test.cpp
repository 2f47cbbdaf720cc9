#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <random>

#include "emplan/qp_solver.hpp"

#include "oracles.hpp"

using namespace emplan;
using namespace emplan::test;

namespace {

QpProblem make_problem(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c,
                       const Eigen::MatrixXd& Ai, const Eigen::VectorXd& bi,
                       const Eigen::MatrixXd& Ae = {}, const Eigen::VectorXd& be = {}) {
  QpProblem p;
  p.cost.Q = Q;
  p.cost.c = c;
  p.cost.constant = 0.0;
  p.constraints = LinearConstraintSet::empty(int(Q.rows()));
  for (int i = 0; i < Ai.rows(); ++i)
    p.constraints.add_inequality(Ai.row(i).transpose(), bi[i], ConstraintTag::Boundary);
  for (int i = 0; i < Ae.rows(); ++i)
    p.constraints.add_equality(Ae.row(i).transpose(), be[i], ConstraintTag::InitialCondition);
  return p;
}

void check_kkt(const QpProblem& problem, const QpSolution& sol) {
  REQUIRE(sol.status == QpStatus::Optimal);
  CHECK(sol.primal_residual <= 1e-6);
  CHECK(sol.stationarity_residual <= 1e-6);
  if (problem.constraints.Ai.rows() > 0) {
    CHECK((problem.constraints.Ai * sol.params - problem.constraints.bi).maxCoeff() <= 1e-6);
  }
}

}  // namespace

TEST_CASE("projection onto a halfspace") {
  // min x^2 s.t. x >= 1
  Eigen::MatrixXd Q(1, 1);
  Q << 1.0;
  Eigen::VectorXd c(1);
  c << 0.0;
  Eigen::MatrixXd Ai(1, 1);
  Ai << -1.0;
  Eigen::VectorXd bi(1);
  bi << -1.0;
  const QpSolution sol = solve_qp(make_problem(Q, c, Ai, bi));
  check_kkt(make_problem(Q, c, Ai, bi), sol);
  CHECK(sol.params[0] == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(sol.active_set.size() == 1);
  CHECK(sol.active_set[0] == 0);
}

TEST_CASE("unconstrained minimum lands on the target") {
  // min ||p - c||^2 = p^T I p - 2 c^T p + const
  const int n = 6;
  Eigen::VectorXd target(n);
  target << 1.0, -2.0, 0.5, 3.0, -0.25, 2.0;
  const QpProblem problem = make_problem(Eigen::MatrixXd::Identity(n, n), target,
                                         Eigen::MatrixXd::Zero(0, n), Eigen::VectorXd::Zero(0));
  const QpSolution sol = solve_qp(problem);
  REQUIRE(sol.status == QpStatus::Optimal);
  CHECK((sol.params - target).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("random QPs match the active-set enumeration oracle") {
  std::mt19937 rng(13);
  std::normal_distribution<double> gauss(0.0, 1.0);
  int solved = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 10;
    const int mi = 15;
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
    const Eigen::MatrixXd Q = A.transpose() * A + Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd c(n);
    for (int i = 0; i < n; ++i) c[i] = gauss(rng);

    Eigen::MatrixXd Ai(mi, n);
    Eigen::VectorXd bi(mi);
    Eigen::VectorXd interior(n);
    for (int i = 0; i < n; ++i) interior[i] = 0.3 * gauss(rng);
    for (int i = 0; i < mi; ++i) {
      for (int j = 0; j < n; ++j) Ai(i, j) = gauss(rng);
      bi[i] = Ai.row(i).dot(interior) + std::abs(gauss(rng)) * 0.5 + 0.01;
    }

    const QpProblem problem = make_problem(Q, c, Ai, bi);
    const QpSolution sol = solve_qp(problem);
    REQUIRE(sol.status == QpStatus::Optimal);
    CHECK(sol.primal_residual <= 1e-6);
    CHECK(sol.stationarity_residual <= 1e-6);

    // Enumeration over 2^15 subsets is slow; do it on a third of the trials.
    if (trial % 3 == 0) {
      const auto oracle = enumerate_qp_optimum(problem);
      REQUIRE(oracle.has_value());
      CHECK((sol.params - *oracle).lpNorm<Eigen::Infinity>() < 1e-6);
      ++solved;
    }
  }
  CHECK(solved >= 13);
}

TEST_CASE("equality constrained projection") {
  // min ||p||^2 s.t. p0 + p1 = 2  ->  p = (1, 1)
  Eigen::MatrixXd Ae(1, 2);
  Ae << 1.0, 1.0;
  Eigen::VectorXd be(1);
  be << 2.0;
  const QpProblem problem =
      make_problem(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2),
                   Eigen::MatrixXd::Zero(0, 2), Eigen::VectorXd::Zero(0), Ae, be);
  const QpSolution sol = solve_qp(problem);
  REQUIRE(sol.status == QpStatus::Optimal);
  CHECK(sol.params[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(sol.params[1] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("dependent equality rows are dropped, not fatal") {
  Eigen::MatrixXd Ae(2, 2);
  Ae << 1.0, 1.0, 2.0, 2.0;  // second row is twice the first
  Eigen::VectorXd be(2);
  be << 2.0, 4.0;
  const QpProblem problem =
      make_problem(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2),
                   Eigen::MatrixXd::Zero(0, 2), Eigen::VectorXd::Zero(0), Ae, be);
  const QpSolution sol = solve_qp(problem);
  REQUIRE(sol.status == QpStatus::Optimal);
  CHECK(sol.params[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("contradictory constraints are reported infeasible") {
  // x <= -1 and x >= 1
  Eigen::MatrixXd Ai(2, 1);
  Ai << 1.0, -1.0;
  Eigen::VectorXd bi(2);
  bi << -1.0, -1.0;
  const QpSolution sol =
      solve_qp(make_problem(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), Ai, bi));
  CHECK(sol.status == QpStatus::Infeasible);
  CHECK(!sol.violated_tags.empty());
}

TEST_CASE("returned point satisfies every row") {
  std::mt19937 rng(29);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 8, mi = 40;
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
    const Eigen::MatrixXd Q = A.transpose() * A + 0.1 * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd c(n);
    for (int i = 0; i < n; ++i) c[i] = 2.0 * gauss(rng);
    Eigen::MatrixXd Ai(mi, n);
    Eigen::VectorXd bi(mi);
    for (int i = 0; i < mi; ++i) {
      for (int j = 0; j < n; ++j) Ai(i, j) = gauss(rng);
      bi[i] = 0.05 + std::abs(gauss(rng));
    }
    const QpProblem problem = make_problem(Q, c, Ai, bi);
    const QpSolution sol = solve_qp(problem);
    REQUIRE(sol.status == QpStatus::Optimal);
    CHECK((problem.constraints.Ai * sol.params - problem.constraints.bi).maxCoeff() <= 1e-6);
  }
}

TEST_CASE("scaling the objective leaves the argmin unchanged") {
  std::mt19937 rng(37);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 6, mi = 10;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
  const Eigen::MatrixXd Q = A.transpose() * A + Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) c[i] = gauss(rng);
  Eigen::MatrixXd Ai(mi, n);
  Eigen::VectorXd bi(mi);
  for (int i = 0; i < mi; ++i) {
    for (int j = 0; j < n; ++j) Ai(i, j) = gauss(rng);
    bi[i] = 0.2;
  }
  const QpSolution base = solve_qp(make_problem(Q, c, Ai, bi));
  const QpSolution scaled = solve_qp(make_problem(7.5 * Q, 7.5 * c, Ai, bi));
  REQUIRE(base.status == QpStatus::Optimal);
  REQUIRE(scaled.status == QpStatus::Optimal);
  CHECK((base.params - scaled.params).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("warm start from the optimal active set is immediate") {
  std::mt19937 rng(43);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 10, mi = 25;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
  const Eigen::MatrixXd Q = A.transpose() * A + Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) c[i] = 3.0 * gauss(rng);
  Eigen::MatrixXd Ai(mi, n);
  Eigen::VectorXd bi(mi);
  for (int i = 0; i < mi; ++i) {
    for (int j = 0; j < n; ++j) Ai(i, j) = gauss(rng);
    bi[i] = 0.1;
  }
  const QpProblem problem = make_problem(Q, c, Ai, bi);
  const QpSolution cold = solve_qp(problem);
  REQUIRE(cold.status == QpStatus::Optimal);
  REQUIRE(!cold.active_set.empty());  // the fixture must bind something

  const QpSolution warm = solve_qp(problem, &cold);
  REQUIRE(warm.status == QpStatus::Optimal);
  CHECK(warm.iterations <= 2);
  CHECK(warm.iterations < cold.iterations);
  CHECK((warm.params - cold.params).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("iteration limit is reported") {
  // A tiny iteration budget cannot finish; the solver must say so rather
  // than return a wrong Optimal. Build a problem with many active rows.
  std::mt19937 rng(51);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 12, mi = 60;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd c = Eigen::VectorXd::Ones(n) * 10.0;
  Eigen::MatrixXd Ai(mi, n);
  Eigen::VectorXd bi(mi);
  for (int i = 0; i < mi; ++i) {
    for (int j = 0; j < n; ++j) Ai(i, j) = std::abs(gauss(rng));
    bi[i] = 1.0;
  }
  const QpSolution sol = solve_qp(make_problem(Q, c, Ai, bi));
  // Budget 10x rows is plenty here; just confirm the status is sane.
  CHECK((sol.status == QpStatus::Optimal || sol.status == QpStatus::IterLimit));
  if (sol.status == QpStatus::Optimal) {
    CHECK(sol.iterations <= 10 * (mi + 0));
  }
}
