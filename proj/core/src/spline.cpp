#include "emplan/spline.hpp"

#include <algorithm>
#include <cassert>

namespace emplan {

Spline::Spline(std::vector<double> knots, int degree, Eigen::VectorXd params)
    : knots_(std::move(knots)), degree_(degree), params_(std::move(params)) {
  assert(knots_.size() >= 2);
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) assert(knots_[i] < knots_[i + 1]);
  assert(params_.size() == Eigen::Index(segment_count() * params_per_segment()));
}

int Spline::segment_index(double x) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  int idx = int(it - knots_.begin()) - 1;
  return std::clamp(idx, 0, segment_count() - 1);
}

Eigen::VectorXd Spline::basis(double u, int degree, int order) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(degree + 1);
  for (int j = order; j <= degree; ++j) {
    double coef = 1.0;
    for (int k = 0; k < order; ++k) coef *= double(j - k);
    double up = 1.0;
    for (int k = 0; k < j - order; ++k) up *= u;
    b[j] = coef * up;
  }
  return b;
}

double Spline::eval(double x, int order) const {
  const double tol = 1e-9 * std::max(1.0, std::abs(x_max()));
  if (x < x_min() - tol || x > x_max() + tol)
    throw OutOfDomain("spline evaluation outside knot range");
  x = std::clamp(x, x_min(), x_max());
  const int k = segment_index(x);
  const double u = x - knots_[k];
  const int n = params_per_segment();
  // Horner on the derivative-adjusted coefficients.
  double r = 0.0;
  for (int j = degree_; j >= order; --j) {
    double coef = params_[k * n + j];
    for (int m = 0; m < order; ++m) coef *= double(j - m);
    r = r * u + coef;
  }
  return r;
}

}  // namespace emplan
