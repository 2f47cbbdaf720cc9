#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>

#include "emplan/spline.hpp"
#include "emplan/spline_builder.hpp"

using namespace emplan;

namespace {

Spline random_quintic(std::mt19937& rng, const std::vector<double>& knots) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const int n = int(knots.size()) - 1;
  Eigen::VectorXd p(n * 6);
  for (int i = 0; i < p.size(); ++i) {
    const int power = i % 6;
    p[i] = coef(rng) / std::pow(2.0, power);  // keep high powers tame
  }
  return Spline(knots, 5, p);
}

// Expands a segment into global monomials and evaluates that expansion; an
// independent route to the same value.
double expanded_eval(const Spline& sp, double x, int order) {
  const int k = sp.segment_index(x);
  const double x_k = sp.knots()[k];
  std::array<double, 6> global{};
  for (int j = 0; j <= 5; ++j) {
    const double c = sp.params()[k * 6 + j];
    double binom = 1.0;
    for (int m = j; m >= 0; --m) {
      global[m] += c * binom * std::pow(-x_k, j - m);
      binom = binom * double(m) / double(j - m + 1);
    }
  }
  for (int d = 0; d < order; ++d) {
    for (int m = 0; m + 1 <= 5; ++m) global[m] = global[m + 1] * double(m + 1);
    global[5] = 0.0;
  }
  double r = 0.0;
  for (int m = 5; m >= 0; --m) r = r * x + global[m];
  return r;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fb, double fm, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * eps)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, fm, flm, 0.5 * eps, depth - 1) +
         adaptive_simpson(f, m, b, fm, fb, frm, 0.5 * eps, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double eps = 1e-12) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return adaptive_simpson(f, a, b, fa, fb, fm, eps, 40);
}

}  // namespace

TEST_CASE("eval derivative of x^2") {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(6);
  p[2] = 1.0;
  const Spline sp({0.0, 1.0}, 5, p);
  CHECK(sp.eval(0.5, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sp.eval(0.5, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(sp.eval(0.5, 2) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("value at a knot is the segment constant coefficient") {
  std::mt19937 rng(3);
  const std::vector<double> knots = {0.0, 1.5, 3.0, 5.0};
  const Spline sp = random_quintic(rng, knots);
  for (int k = 0; k < sp.segment_count(); ++k) {
    CHECK(sp.eval(knots[k], 0) == doctest::Approx(sp.params()[k * 6]).epsilon(1e-12));
  }
}

TEST_CASE("eval matches the symbolic expansion oracle") {
  std::mt19937 rng(11);
  const std::vector<double> knots = {0.0, 1.7, 3.1, 5.0};
  const Spline sp = random_quintic(rng, knots);
  std::uniform_real_distribution<double> xs(0.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    const double x = xs(rng);
    for (int order = 0; order <= 3; ++order) {
      const double got = sp.eval(x, order);
      const double want = expanded_eval(sp, x, order);
      CHECK(got == doctest::Approx(want).epsilon(1e-10));
    }
  }
}

TEST_CASE("eval outside the knot span throws") {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(6);
  const Spline sp({0.0, 1.0}, 5, p);
  CHECK_THROWS_AS(sp.eval(-0.5, 0), OutOfDomain);
  CHECK_THROWS_AS(sp.eval(1.5, 0), OutOfDomain);
}

TEST_CASE("smoothness cost of simple shapes") {
  SUBCASE("f(x) = x, first derivative") {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(6);
    p[1] = 1.0;
    const QuadraticCost q = smoothness_cost({0.0, 1.0}, 5, 1, 1.0);
    CHECK(q.value(p) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("f(x) = x^2, second derivative") {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(6);
    p[2] = 1.0;
    const QuadraticCost q = smoothness_cost({0.0, 1.0}, 5, 2, 1.0);
    CHECK(q.value(p) == doctest::Approx(4.0).epsilon(1e-12));
  }
}

TEST_CASE("third-derivative cost matches adaptive quadrature") {
  std::mt19937 rng(17);
  const std::vector<double> knots = {0.0, 0.9, 2.2, 4.0};
  for (int trial = 0; trial < 20; ++trial) {
    const Spline sp = random_quintic(rng, knots);
    const QuadraticCost q = smoothness_cost(knots, 5, 3, 1.0);
    const double assembled = q.value(sp.params());
    const double numeric = integrate(
        [&](double x) {
          const double d = sp.eval(x, 3);
          return d * d;
        },
        0.0, 4.0);
    CHECK(assembled ==
          doctest::Approx(numeric).epsilon(1e-8).scale(std::max(1.0, std::abs(numeric))));
  }
}

TEST_CASE("guidance cost against zero has no linear term") {
  const std::vector<double> knots = {0.0, 1.0, 2.0};
  PiecewiseLinear g{{0.0, 2.0}, {0.0, 0.0}};
  const QuadraticCost q = guidance_cost(knots, 5, g, 1.0);
  CHECK(q.c.norm() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(q.constant == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("guidance cost vanishes when the spline equals the line") {
  const std::vector<double> knots = {0.0, 1.0, 2.0};
  PiecewiseLinear g{{0.0, 2.0}, {1.0, 3.0}};  // g(x) = 1 + x
  Eigen::VectorXd p = Eigen::VectorXd::Zero(12);
  p[0] = 1.0;
  p[1] = 1.0;  // segment 0: 1 + u
  p[6] = 2.0;
  p[7] = 1.0;  // segment 1: 2 + u
  const QuadraticCost q = guidance_cost(knots, 5, g, 1.0);
  CHECK(std::abs(q.value(p)) < 1e-10);
}

TEST_CASE("guidance cost matches dense trapezoid integration") {
  std::mt19937 rng(23);
  const std::vector<double> knots = {0.0, 1.3, 2.9, 4.0};
  std::uniform_real_distribution<double> ys(-2.0, 2.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Spline sp = random_quintic(rng, knots);
    PiecewiseLinear g;
    for (double x = 0.0; x < 4.0; x += 0.37) {
      g.xs.push_back(x);
      g.ys.push_back(ys(rng));
    }
    g.xs.push_back(4.0);
    g.ys.push_back(ys(rng));
    const QuadraticCost q = guidance_cost(knots, 5, g, 1.0);
    const double assembled = q.value(sp.params());
    // Per-segment trapezoid with segment-local evaluation: random parameter
    // vectors are discontinuous at knots, so a step must never straddle one.
    double trapezoid = 0.0;
    const double step = 1e-4;
    for (int k = 0; k + 1 < int(knots.size()); ++k) {
      auto f_seg = [&](double x) {
        const double u = x - knots[k];
        double r = 0.0;
        for (int j = 5; j >= 0; --j) r = r * u + sp.params()[k * 6 + j];
        return r;
      };
      const int n_steps = int(std::round((knots[k + 1] - knots[k]) / step));
      const double h = (knots[k + 1] - knots[k]) / n_steps;
      double prev = std::pow(f_seg(knots[k]) - g(knots[k]), 2);
      for (int i = 1; i <= n_steps; ++i) {
        const double x = knots[k] + i * h;
        const double cur = std::pow(f_seg(x) - g(x), 2);
        trapezoid += 0.5 * (prev + cur) * h;
        prev = cur;
      }
    }
    CHECK(assembled ==
          doctest::Approx(trapezoid).epsilon(1e-6).scale(std::max(1.0, trapezoid)));
  }
}

TEST_CASE("guidance domain must cover the knots") {
  PiecewiseLinear g{{0.0, 1.0}, {0.0, 0.0}};
  CHECK_THROWS_AS(guidance_cost({0.0, 1.0, 2.0}, 5, g, 1.0), GuidanceDomainMismatch);
}

TEST_CASE("joint rows per interior knot") {
  SplineConstraintSpecs specs;
  specs.joint_order = 3;
  const LinearConstraintSet set = build_constraints({0.0, 1.0, 2.0}, 5, specs);
  CHECK(set.Ae.rows() == 4);  // one knot, orders 0..3
  CHECK(set.Ai.rows() == 0);
  for (const auto tag : set.eq_tags) CHECK(tag == ConstraintTag::SmoothnessJoint);
}

TEST_CASE("boundary spec becomes two rows evaluating the basis") {
  SplineConstraintSpecs specs;
  specs.joint_order = -1;  // no joint rows for this check
  specs.boundary.push_back({2.0, 0, -1.0, 1.0});
  const LinearConstraintSet set = build_constraints({0.0, 1.5, 3.0}, 5, specs);
  REQUIRE(set.Ai.rows() == 2);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(12);
  p[6 + 0] = 2.0;
  p[6 + 1] = 3.0;
  const double up = set.Ai.row(0).dot(p);
  CHECK(up == doctest::Approx(2.0 + 3.0 * 0.5).epsilon(1e-12));
  CHECK(set.bi[0] == doctest::Approx(1.0));
  CHECK(set.bi[1] == doctest::Approx(1.0));  // -a p <= -lower with lower = -1
  for (const auto tag : set.ineq_tags) CHECK(tag == ConstraintTag::Boundary);
}

TEST_CASE("infeasible box is rejected") {
  SplineConstraintSpecs specs;
  specs.boundary.push_back({0.5, 0, 1.0, -1.0});
  CHECK_THROWS_AS(build_constraints({0.0, 1.0}, 5, specs), InfeasibleBox);
}

TEST_CASE("monotonicity rows accept increasing and reject decreasing splines") {
  SplineConstraintSpecs specs;
  specs.joint_order = -1;
  for (double t = 0.0; t <= 2.0 + 1e-9; t += 0.25) specs.monotone_points.push_back(t);
  const LinearConstraintSet set = build_constraints({0.0, 1.0, 2.0}, 5, specs);
  REQUIRE(set.Ai.rows() == 8);

  Eigen::VectorXd inc = Eigen::VectorXd::Zero(12);
  inc[1] = 1.0;  // f = u on segment 0
  inc[6] = 1.0;
  inc[7] = 1.0;  // f = 1 + u on segment 1
  Eigen::VectorXd dec = -inc;
  const Eigen::VectorXd inc_r = set.Ai * inc - set.bi;
  CHECK(inc_r.maxCoeff() <= 1e-12);
  const Eigen::VectorXd dec_r = set.Ai * dec - set.bi;
  CHECK(dec_r.maxCoeff() > 0.1);
  for (const auto tag : set.ineq_tags) CHECK(tag == ConstraintTag::Monotonicity);
}

TEST_CASE("quadratic form matches quadrature for every functional") {
  // The assembled quadratic form agrees with direct numerical integration for
  // the guidance term and all three smoothness terms across random splines.
  std::mt19937 rng(31);
  const std::vector<double> knots = {0.0, 1.1, 2.3, 3.2, 4.5};
  PiecewiseLinear g{{0.0, 2.0, 4.5}, {0.5, -0.4, 1.2}};
  for (int trial = 0; trial < 25; ++trial) {
    const Spline sp = random_quintic(rng, knots);
    for (int i = 0; i <= 3; ++i) {
      const QuadraticCost q =
          i == 0 ? guidance_cost(knots, 5, g, 1.0) : smoothness_cost(knots, 5, i, 1.0);
      const double assembled = q.value(sp.params());
      const double numeric = integrate(
          [&](double x) {
            const double v = i == 0 ? sp.eval(x, 0) - g(x) : sp.eval(x, i);
            return v * v;
          },
          0.0, 4.5);
      CHECK(assembled ==
            doctest::Approx(numeric).epsilon(1e-8).scale(std::max(1.0, std::abs(numeric))));
    }
  }
}

TEST_CASE("smoothness blocks do not couple distinct segments") {
  for (int i = 1; i <= 3; ++i) {
    const QuadraticCost q = smoothness_cost({0.0, 1.0, 2.0, 3.0}, 5, i, 1.0);
    for (int a = 0; a < q.Q.rows(); ++a) {
      for (int b = 0; b < q.Q.cols(); ++b) {
        if (a / 6 != b / 6) CHECK(q.Q(a, b) == 0.0);
      }
    }
  }
}

TEST_CASE("parameters satisfying joint rows give continuous derivatives") {
  const std::vector<double> knots = {0.0, 1.0, 2.5, 4.0};
  SplineConstraintSpecs specs;
  specs.joint_order = 3;
  const LinearConstraintSet set = build_constraints(knots, 5, specs);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(set.Ae, Eigen::ComputeFullV);
  const Eigen::MatrixXd V = svd.matrixV();
  const int rank = int(svd.rank());
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(V.cols() - rank);
    for (int i = 0; i < z.size(); ++i) z[i] = coef(rng);
    const Eigen::VectorXd p = V.rightCols(V.cols() - rank) * z;
    const Spline sp(knots, 5, p);
    for (std::size_t k = 1; k + 1 < knots.size(); ++k) {
      for (int order = 0; order <= 3; ++order) {
        const double left = sp.eval(knots[k] - 1e-12, order);
        const double right = sp.eval(knots[k] + 1e-12, order);
        CHECK(std::abs(left - right) < 1e-9);
      }
    }
  }
}
