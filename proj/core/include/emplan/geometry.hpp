#pragma once

#include <array>
#include <span>
#include <vector>

#include "emplan/errors.hpp"

namespace emplan {

/// Pose plus motion state in world coordinates. heading is normalized to
/// (-pi, pi].
struct CartesianState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double kappa = 0.0;
  double v = 0.0;
  double a = 0.0;
};

/// State in reference-line coordinates: station s, signed lateral offset l
/// (left of the line is positive) and lateral derivatives taken with respect
/// to station.
struct FrenetState {
  double s = 0.0;
  double l = 0.0;
  double dl = 0.0;
  double ddl = 0.0;
  double dddl = 0.0;
};

struct RefSample {
  double s = 0.0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double kappa = 0.0;
  double dkappa = 0.0;
};

/// Discretized smooth guide curve. Samples must start at s = 0, be strictly
/// increasing, spaced at most 1 m apart, and carry headings consistent with
/// the sampled geometry. Interpolation between samples uses per-segment
/// quintic Hermite fits on (x, y), which keeps curvature and its derivative
/// available everywhere.
class ReferenceLine {
 public:
  /// Validates invariants; throws ValidationError on violation.
  static ReferenceLine from_samples(std::vector<RefSample> samples);

  /// Derives s/heading/kappa/dkappa from a plain (x, y) polyline by finite
  /// differences. The polyline is assumed to sample a smooth curve.
  static ReferenceLine from_polyline(std::span<const std::array<double, 2>> points);

  double length() const { return samples_.back().s; }
  const std::vector<RefSample>& samples() const { return samples_; }

  /// Interpolated pose at station s in [0, length].
  RefSample pose_at(double s) const;

  /// Nearest-point projection of a full state. Throws AmbiguousProjection
  /// when two non-adjacent samples tie for nearest, OutOfRange when the
  /// projection falls beyond either endpoint.
  FrenetState project(const CartesianState& state) const;

  /// Position-only projection; returns (s, l).
  std::array<double, 2> project_point(double x, double y) const;

  /// Position-only projection onto the line extended by its end tangents, so
  /// points behind the start or past the end map to stations outside
  /// [0, length] instead of failing. Used for obstacle mapping.
  std::array<double, 2> project_point_extended(double x, double y) const;

  /// Inverse mapping for a pure state (v = a = 0 in the result). Throws
  /// CurvatureSingularity when |l| >= 1/|kappa(s)|.
  CartesianState to_cartesian(const FrenetState& fs) const;

  /// Inverse mapping including speed and acceleration, given the station
  /// derivatives ds/dt and d2s/dt2.
  CartesianState to_cartesian(const FrenetState& fs, double s_dot, double s_ddot) const;

 private:
  explicit ReferenceLine(std::vector<RefSample> samples);

  struct Segment {
    std::array<double, 6> cx;
    std::array<double, 6> cy;
    double h;
  };

  // Returns (segment index, local u) for station s clamped to the domain.
  std::pair<int, double> locate(double s) const;
  // Nearest station parameter for a point; throws on ambiguity / out of range.
  double nearest_station(double x, double y) const;

  std::vector<RefSample> samples_;
  std::vector<Segment> segments_;
};

}  // namespace emplan
