#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "emplan/errors.hpp"
#include "emplan/spline.hpp"

namespace emplan {

/// cost(p) = p^T Q p - 2 c^T p + constant.
struct QuadraticCost {
  Eigen::MatrixXd Q;
  Eigen::VectorXd c;
  double constant = 0.0;

  static QuadraticCost zero(int dim);
  void add(const QuadraticCost& other);
  double value(const Eigen::VectorXd& p) const;
};

enum class ConstraintTag { Boundary, SmoothnessJoint, Monotonicity, InitialCondition };

std::string to_string(ConstraintTag tag);

/// Equality rows a.p = b and inequality rows a.p <= b over the stacked spline
/// parameter vector. Every row carries a provenance tag.
struct LinearConstraintSet {
  Eigen::MatrixXd Ae;
  Eigen::VectorXd be;
  std::vector<ConstraintTag> eq_tags;
  Eigen::MatrixXd Ai;
  Eigen::VectorXd bi;
  std::vector<ConstraintTag> ineq_tags;

  static LinearConstraintSet empty(int dim);
  int dim() const { return int(Ae.cols()); }
  void add_equality(const Eigen::VectorXd& a, double b, ConstraintTag tag);
  void add_inequality(const Eigen::VectorXd& a, double b, ConstraintTag tag);
  /// lower <= a.p <= upper as up to two inequality rows (skips infinite bounds).
  void add_range(const Eigen::VectorXd& a, double lower, double upper, ConstraintTag tag);
  void append(const LinearConstraintSet& other);
};

/// Samples of a piecewise-linear function; xs strictly increasing.
struct PiecewiseLinear {
  std::vector<double> xs;
  std::vector<double> ys;

  double operator()(double x) const;
  double x_min() const { return xs.front(); }
  double x_max() const { return xs.back(); }
};

/// w * integral of (f^(i))^2 over the knot span, assembled in closed form as
/// a block-diagonal quadratic form over the stacked parameters.
QuadraticCost smoothness_cost(const std::vector<double>& knots, int degree,
                              int deriv_order, double weight);

/// w * integral of (f - g)^2. The polynomial part is closed-form; integrals
/// against g use 5-point Gauss-Legendre per interval, subdivided at the
/// breakpoints of g so the rule stays exact. Throws GuidanceDomainMismatch if
/// g does not cover the knot span.
QuadraticCost guidance_cost(const std::vector<double>& knots, int degree,
                            const PiecewiseLinear& g, double weight);

struct BoundarySpec {
  double x;
  int order;  // derivative order 0..3
  double lower;
  double upper;
};

/// L <= f(x) + c * f'(x) <= U (heading-style corner bound).
struct HeadingSpec {
  double x;
  double c;
  double lower;
  double upper;
};

/// f^(order)(x) = value, tagged as an initial condition.
struct PointValueSpec {
  double x;
  int order;
  double value;
};

struct SplineConstraintSpecs {
  int joint_order = 3;  // equate f^(0..joint_order) at interior knots
  std::vector<PointValueSpec> initial;
  std::vector<BoundarySpec> boundary;
  std::vector<HeadingSpec> heading;
  std::vector<double> monotone_points;  // f nondecreasing along these
};

/// Assembles joint equalities plus boundary / heading / monotonicity
/// inequalities. Throws InfeasibleBox when a spec has lower > upper.
LinearConstraintSet build_constraints(const std::vector<double>& knots, int degree,
                                      const SplineConstraintSpecs& specs);

/// Row evaluating f^(order)(x) against the stacked parameters.
Eigen::VectorXd evaluation_row(const std::vector<double>& knots, int degree, double x,
                               int order);

}  // namespace emplan
