#include "emplan/spline_builder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "emplan/poly.hpp"

namespace emplan {

QuadraticCost QuadraticCost::zero(int dim) {
  return {Eigen::MatrixXd::Zero(dim, dim), Eigen::VectorXd::Zero(dim), 0.0};
}

void QuadraticCost::add(const QuadraticCost& other) {
  Q += other.Q;
  c += other.c;
  constant += other.constant;
}

double QuadraticCost::value(const Eigen::VectorXd& p) const {
  return p.dot(Q * p) - 2.0 * c.dot(p) + constant;
}

std::string to_string(ConstraintTag tag) {
  switch (tag) {
    case ConstraintTag::Boundary: return "boundary";
    case ConstraintTag::SmoothnessJoint: return "smoothness-joint";
    case ConstraintTag::Monotonicity: return "monotonicity";
    case ConstraintTag::InitialCondition: return "initial-condition";
  }
  return "?";
}

LinearConstraintSet LinearConstraintSet::empty(int dim) {
  LinearConstraintSet s;
  s.Ae = Eigen::MatrixXd::Zero(0, dim);
  s.be = Eigen::VectorXd::Zero(0);
  s.Ai = Eigen::MatrixXd::Zero(0, dim);
  s.bi = Eigen::VectorXd::Zero(0);
  return s;
}

namespace {
void append_row(Eigen::MatrixXd& A, Eigen::VectorXd& b, const Eigen::VectorXd& a, double rhs) {
  A.conservativeResize(A.rows() + 1, Eigen::NoChange);
  A.row(A.rows() - 1) = a.transpose();
  b.conservativeResize(b.size() + 1);
  b[b.size() - 1] = rhs;
}
}  // namespace

void LinearConstraintSet::add_equality(const Eigen::VectorXd& a, double b, ConstraintTag tag) {
  append_row(Ae, be, a, b);
  eq_tags.push_back(tag);
}

void LinearConstraintSet::add_inequality(const Eigen::VectorXd& a, double b, ConstraintTag tag) {
  append_row(Ai, bi, a, b);
  ineq_tags.push_back(tag);
}

void LinearConstraintSet::add_range(const Eigen::VectorXd& a, double lower, double upper,
                                    ConstraintTag tag) {
  if (lower > upper) throw InfeasibleBox("constraint range has lower > upper");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (upper < kInf) add_inequality(a, upper, tag);
  if (lower > -kInf) add_inequality(-a, -lower, tag);
}

void LinearConstraintSet::append(const LinearConstraintSet& other) {
  for (int i = 0; i < other.Ae.rows(); ++i)
    add_equality(other.Ae.row(i).transpose(), other.be[i], other.eq_tags[i]);
  for (int i = 0; i < other.Ai.rows(); ++i)
    add_inequality(other.Ai.row(i).transpose(), other.bi[i], other.ineq_tags[i]);
}

double PiecewiseLinear::operator()(double x) const {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = std::size_t(it - xs.begin());
  const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

QuadraticCost smoothness_cost(const std::vector<double>& knots, int degree, int deriv_order,
                              double weight) {
  const int n = int(knots.size()) - 1;
  const int per = degree + 1;
  QuadraticCost cost = QuadraticCost::zero(n * per);
  for (int k = 0; k < n; ++k) {
    const double h = knots[k + 1] - knots[k];
    for (int a = deriv_order; a <= degree; ++a) {
      double fa = 1.0;
      for (int m = 0; m < deriv_order; ++m) fa *= double(a - m);
      for (int b = deriv_order; b <= degree; ++b) {
        double fb = 1.0;
        for (int m = 0; m < deriv_order; ++m) fb *= double(b - m);
        const int pw = a + b - 2 * deriv_order;
        const double integral = fa * fb * std::pow(h, pw + 1) / double(pw + 1);
        cost.Q(k * per + a, k * per + b) += weight * integral;
      }
    }
  }
  return cost;
}

QuadraticCost guidance_cost(const std::vector<double>& knots, int degree,
                            const PiecewiseLinear& g, double weight) {
  if (g.x_min() > knots.front() + 1e-9 || g.x_max() < knots.back() - 1e-9)
    throw GuidanceDomainMismatch("guidance function does not cover the knot span");

  const int n = int(knots.size()) - 1;
  const int per = degree + 1;
  QuadraticCost cost = smoothness_cost(knots, degree, 0, weight);  // the p^T Q p part

  for (int k = 0; k < n; ++k) {
    // Subdivide at guidance breakpoints so the quadrature stays exact.
    std::vector<double> cuts = {knots[k], knots[k + 1]};
    for (double bx : g.xs)
      if (bx > knots[k] + 1e-12 && bx < knots[k + 1] - 1e-12) cuts.push_back(bx);
    std::sort(cuts.begin(), cuts.end());

    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double a = cuts[c], b = cuts[c + 1];
      const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
      for (int q = 0; q < 5; ++q) {
        const double x = mid + half * GaussLegendre5::nodes[q];
        const double w = GaussLegendre5::weights[q] * half;
        const double gx = g(x);
        const double u = x - knots[k];
        double up = 1.0;
        for (int j = 0; j <= degree; ++j) {
          cost.c[k * per + j] += weight * w * up * gx;
          up *= u;
        }
        cost.constant += weight * w * gx * gx;
      }
    }
  }
  return cost;
}

Eigen::VectorXd evaluation_row(const std::vector<double>& knots, int degree, double x,
                               int order) {
  const int n = int(knots.size()) - 1;
  const int per = degree + 1;
  auto it = std::upper_bound(knots.begin(), knots.end(), x);
  int k = std::clamp(int(it - knots.begin()) - 1, 0, n - 1);
  Eigen::VectorXd row = Eigen::VectorXd::Zero(n * per);
  row.segment(k * per, per) = Spline::basis(x - knots[k], degree, order);
  return row;
}

LinearConstraintSet build_constraints(const std::vector<double>& knots, int degree,
                                      const SplineConstraintSpecs& specs) {
  const int n = int(knots.size()) - 1;
  const int per = degree + 1;
  LinearConstraintSet set = LinearConstraintSet::empty(n * per);

  // Joint smoothness at interior knots: f^(j) continuous for j = 0..joint_order.
  for (int k = 1; k < n; ++k) {
    const double h = knots[k] - knots[k - 1];
    for (int j = 0; j <= specs.joint_order; ++j) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n * per);
      row.segment((k - 1) * per, per) = Spline::basis(h, degree, j);
      row.segment(k * per, per) = -Spline::basis(0.0, degree, j);
      set.add_equality(row, 0.0, ConstraintTag::SmoothnessJoint);
    }
  }

  for (const auto& iv : specs.initial) {
    set.add_equality(evaluation_row(knots, degree, iv.x, iv.order), iv.value,
                     ConstraintTag::InitialCondition);
  }

  for (const auto& bs : specs.boundary) {
    if (bs.lower > bs.upper) throw InfeasibleBox("boundary spec has lower > upper");
    set.add_range(evaluation_row(knots, degree, bs.x, bs.order), bs.lower, bs.upper,
                  ConstraintTag::Boundary);
  }

  for (const auto& hs : specs.heading) {
    if (hs.lower > hs.upper) throw InfeasibleBox("heading spec has lower > upper");
    Eigen::VectorXd row = evaluation_row(knots, degree, hs.x, 0) +
                          hs.c * evaluation_row(knots, degree, hs.x, 1);
    set.add_range(row, hs.lower, hs.upper, ConstraintTag::Boundary);
  }

  // f(t_{i+1}) >= f(t_i)  ==>  (row_i - row_{i+1}) . p <= 0
  for (std::size_t i = 0; i + 1 < specs.monotone_points.size(); ++i) {
    Eigen::VectorXd row = evaluation_row(knots, degree, specs.monotone_points[i], 0) -
                          evaluation_row(knots, degree, specs.monotone_points[i + 1], 0);
    set.add_inequality(row, 0.0, ConstraintTag::Monotonicity);
  }
  return set;
}

}  // namespace emplan
