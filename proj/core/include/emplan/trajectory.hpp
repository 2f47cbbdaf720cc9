#pragma once

#include <vector>

#include "emplan/geometry.hpp"

namespace emplan {

struct TrajectoryPoint {
  double t = 0.0;  // relative to cycle start
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double kappa = 0.0;
  double v = 0.0;
  double a = 0.0;
};

/// Time-parameterized planner output, fixed 0.02 s step.
struct Trajectory {
  static constexpr double kStep = 0.02;

  std::vector<TrajectoryPoint> points;

  bool empty() const { return points.empty(); }
  double duration() const { return points.empty() ? 0.0 : points.back().t; }

  /// Linear interpolation between stored points; clamps outside the range.
  TrajectoryPoint at(double t) const;

  CartesianState state_at(double t) const;
};

}  // namespace emplan
