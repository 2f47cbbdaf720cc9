#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "emplan/geometry.hpp"
#include "emplan/spline.hpp"
#include "emplan/trajectory.hpp"

namespace emplan {

struct ObstaclePose {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

struct Obstacle {
  enum class Kind { Static, Dynamic };

  std::string id;
  double length = 0.0;
  double width = 0.0;
  Kind kind = Kind::Static;
  std::vector<ObstaclePose> trajectory;  // exactly one pose for Static
  double speed = 0.0;                    // 0 for Static

  ObstaclePose pose_at(double t) const;
  std::array<std::array<double, 2>, 4> corners(const ObstaclePose& pose) const;
};

/// Bicycle-model footprint: the body is covered by a rectangle of width w
/// running from rear overhang to front axle, closed by two half circles of
/// radius w/2. Overlap tests use the rectangle inflated longitudinally by the
/// cap radius, which contains the capsule.
struct EgoFootprint {
  double l_f = 2.8;       // front-to-rear-axle distance
  double l_r_geom = 1.0;  // rear overhang behind the reference point
  double width = 2.0;
  double cap_radius = 1.0;

  double front_extent() const { return l_f + cap_radius; }
  double rear_extent() const { return l_r_geom + cap_radius; }
  double half_width() const { return 0.5 * width; }
  std::array<std::array<double, 2>, 4> corners(double x, double y, double heading) const;
};

/// Blocked box in the station-lateral frame.
struct SlRegion {
  double s_min = 0.0, s_max = 0.0;
  double l_min = 0.0, l_max = 0.0;
  std::string source_id;
  std::optional<double> interaction_time;
};

/// Blocked convex polygon in the station-time frame, counterclockwise.
struct StRegion {
  std::vector<std::array<double, 2>> polygon;  // (t, s)
  std::string source_id;

  double t_min() const;
  double t_max() const;
  /// Blocked station interval at time t, when the polygon covers t.
  std::optional<std::array<double, 2>> slice(double t) const;
};

/// Sampled estimate of where the ego will be over the horizon, taken from the
/// previous cycle's trajectory (or synthesized on the first cycle).
struct EgoMotionEstimate {
  std::vector<double> times;
  std::vector<CartesianState> poses;
  std::vector<double> stations;
};

EgoMotionEstimate ego_motion_from_trajectory(const Trajectory& prev, const ReferenceLine& ref,
                                             double dt, double horizon);
/// First-cycle fallback: constant speed straight along the lane center.
EgoMotionEstimate ego_motion_synthesized(const ReferenceLine& ref, double start_s,
                                         double speed, double dt, double horizon);

struct SlProjectionParams {
  double dt = 0.1;
  double horizon = 8.0;
  double low_speed_abs = 2.0;    // m/s
  double low_speed_ratio = 0.4;  // of ego speed
};

/// Station-lateral E-step. Static obstacles project to one box each. Dynamic
/// obstacles are considered only when oncoming or slow; each time sample
/// whose ego/obstacle boxes overlap yields one box stamped with that time.
std::vector<SlRegion> project_sl(const std::vector<Obstacle>& obstacles,
                                 const ReferenceLine& ref, const EgoMotionEstimate& ego_motion,
                                 double ego_speed, const EgoFootprint& footprint,
                                 const SlProjectionParams& params);

struct StProjectionParams {
  double dt = 0.1;
  double station_step = 0.5;
  double chain_gap = 1.5;  // station gap above which interval chains split
};

/// Station-time E-step: blocked station intervals of every obstacle against
/// the ego swept along the lateral path l = f(s), stitched over time into
/// convex regions.
std::vector<StRegion> project_st(const std::vector<Obstacle>& obstacles, const Spline& path,
                                 double path_s0, double path_s1, const ReferenceLine& ref,
                                 double horizon, const EgoFootprint& footprint,
                                 const StProjectionParams& params);

/// Separation distance between two axis-aligned boxes (0 when overlapping).
double box_gap(double a_lo, double a_hi, double b_lo, double b_hi);

/// Oriented rectangle overlap (separating-axis test).
bool obb_overlap(const std::array<std::array<double, 2>, 4>& a,
                 const std::array<std::array<double, 2>, 4>& b);

}  // namespace emplan
