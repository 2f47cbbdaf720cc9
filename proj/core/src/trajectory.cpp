#include "emplan/trajectory.hpp"

#include <algorithm>

#include "emplan/poly.hpp"

namespace emplan {

TrajectoryPoint Trajectory::at(double t) const {
  if (points.empty()) return {};
  if (t <= points.front().t) return points.front();
  if (t >= points.back().t) return points.back();
  auto it = std::upper_bound(points.begin(), points.end(), t,
                             [](double v, const TrajectoryPoint& p) { return v < p.t; });
  const TrajectoryPoint& b = *it;
  const TrajectoryPoint& a = *(it - 1);
  const double w = (t - a.t) / (b.t - a.t);
  TrajectoryPoint p;
  p.t = t;
  p.x = a.x + w * (b.x - a.x);
  p.y = a.y + w * (b.y - a.y);
  p.heading = a.heading + w * normalize_angle(b.heading - a.heading);
  p.kappa = a.kappa + w * (b.kappa - a.kappa);
  p.v = a.v + w * (b.v - a.v);
  p.a = a.a + w * (b.a - a.a);
  return p;
}

CartesianState Trajectory::state_at(double t) const {
  const TrajectoryPoint p = at(t);
  return {p.x, p.y, p.heading, p.kappa, p.v, p.a};
}

}  // namespace emplan
