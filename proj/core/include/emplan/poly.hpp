#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace emplan {

// Dense univariate polynomial, coeffs[i] multiplies x^i.
class Poly {
 public:
  Poly() = default;
  explicit Poly(std::vector<double> coeffs) : c_(std::move(coeffs)) {}

  static Poly constant(double v) { return Poly({v}); }

  double eval(double x) const {
    double r = 0.0;
    for (std::size_t i = c_.size(); i-- > 0;) r = r * x + c_[i];
    return r;
  }

  Poly derivative() const {
    if (c_.size() <= 1) return Poly({0.0});
    std::vector<double> d(c_.size() - 1);
    for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * double(i);
    return Poly(std::move(d));
  }

  Poly operator*(const Poly& o) const {
    std::vector<double> r(c_.size() + o.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < c_.size(); ++i)
      for (std::size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
    return Poly(std::move(r));
  }

  Poly operator-(const Poly& o) const {
    std::vector<double> r(std::max(c_.size(), o.c_.size()), 0.0);
    for (std::size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
    for (std::size_t i = 0; i < o.c_.size(); ++i) r[i] -= o.c_[i];
    return Poly(std::move(r));
  }

  // Definite integral over [0, h].
  double integrate(double h) const {
    double r = 0.0;
    double hp = h;
    for (std::size_t i = 0; i < c_.size(); ++i) {
      r += c_[i] * hp / double(i + 1);
      hp *= h;
    }
    return r;
  }

  const std::vector<double>& coeffs() const { return c_; }

 private:
  std::vector<double> c_;
};

// Quintic matching value / first / second derivative at both ends of [0, h].
// Returns coefficients in the local variable u = x - x_start.
inline std::array<double, 6> quintic_hermite(double p0, double v0, double a0,
                                             double p1, double v1, double a1,
                                             double h) {
  assert(h > 0.0);
  const double h2 = h * h, h3 = h2 * h, h4 = h3 * h, h5 = h4 * h;
  std::array<double, 6> c{};
  c[0] = p0;
  c[1] = v0;
  c[2] = 0.5 * a0;
  const double r1 = p1 - (c[0] + c[1] * h + c[2] * h2);
  const double r2 = v1 - (c[1] + 2.0 * c[2] * h);
  const double r3 = a1 - 2.0 * c[2];
  c[3] = (10.0 * r1 - 4.0 * r2 * h + 0.5 * r3 * h2) / h3;
  c[4] = (-15.0 * r1 + 7.0 * r2 * h - r3 * h2) / h4;
  c[5] = (6.0 * r1 - 3.0 * r2 * h + 0.5 * r3 * h2) / h5;
  return c;
}

// 5-point Gauss-Legendre rule on [-1, 1]; exact through degree 9.
struct GaussLegendre5 {
  static constexpr std::array<double, 5> nodes = {
      -0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
      0.9061798459386640};
  static constexpr std::array<double, 5> weights = {
      0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
      0.4786286704993665, 0.2369268850561891};

  // Integrates fn over [a, b].
  template <typename Fn>
  static double integrate(double a, double b, Fn&& fn) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (int i = 0; i < 5; ++i) sum += weights[i] * fn(mid + half * nodes[i]);
    return sum * half;
  }
};

inline double normalize_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a <= 0.0) a += 2.0 * M_PI;
  return a - M_PI;  // result in (-pi, pi]
}

}  // namespace emplan
