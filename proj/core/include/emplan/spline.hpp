#pragma once

#include <Eigen/Core>
#include <vector>

#include "emplan/errors.hpp"

namespace emplan {

/// Piecewise polynomial over ordered knots. Segment k is expanded in the
/// local variable (x - knot_k) and owns the half-open interval
/// [knot_k, knot_{k+1}); the last interval is closed. The stacked parameter
/// vector holds (degree + 1) coefficients per segment, constant term first.
class Spline {
 public:
  Spline(std::vector<double> knots, int degree, Eigen::VectorXd params);

  int degree() const { return degree_; }
  int segment_count() const { return int(knots_.size()) - 1; }
  int params_per_segment() const { return degree_ + 1; }
  const std::vector<double>& knots() const { return knots_; }
  const Eigen::VectorXd& params() const { return params_; }
  double x_min() const { return knots_.front(); }
  double x_max() const { return knots_.back(); }

  /// f^(order)(x) for order 0..3. Throws OutOfDomain outside the knot span.
  double eval(double x, int order = 0) const;

  /// Index of the segment owning x.
  int segment_index(double x) const;

  /// Derivative-order basis row in the segment-local variable u = x - knot_k:
  /// entry j is d^order/du^order u^j. Length is degree + 1.
  static Eigen::VectorXd basis(double u, int degree, int order);

 private:
  std::vector<double> knots_;
  int degree_;
  Eigen::VectorXd params_;
};

}  // namespace emplan
