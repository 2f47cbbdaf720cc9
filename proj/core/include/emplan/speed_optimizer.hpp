#pragma once

#include <string>
#include <vector>

#include "emplan/projection.hpp"
#include "emplan/qp_solver.hpp"
#include "emplan/spline.hpp"
#include "emplan/spline_builder.hpp"

namespace emplan {

struct SpeedLimits {
  double v_ref = 10.0;
  double v_upper = 15.0;
  double acc_max = 2.0;
  double dec_max = 4.0;  // positive magnitude
  double jerk_max = 2.0;
};

/// Temporary speed ceiling while squeezing past a nudged obstacle.
struct SpeedCap {
  double t_start = 0.0;
  double t_end = 0.0;
  double v_cap = 0.0;
  std::string source_id;
};

struct SpeedDpParams {
  double dt = 0.5;            // grid time step for the DP stage
  double ds = 0.5;            // grid station cell
  double tunnel_dt = 0.1;     // refined tunnel grid
  double w_ref = 4.0;         // velocity keeping
  double w_acc = 1.0;
  double w_jerk = 0.5;
  double w_obstacle = 2.0;
  double above_ref_ratio = 4.0;  // extra penalty above the reference speed
  double obstacle_range = 10.0;  // proximity cost reach, station meters
  double follow_headway = 0.5;   // s
  double follow_buffer_floor = 3.0;
  double cap_slack = 0.5;  // m/s of grid slack above a hard cap
};

enum class SpeedDecisionKind { Yield, Overtake, Follow, Stop };

struct SpeedDecision {
  std::string source_id;
  int region_index = -1;  // into the region list passed to the search
  SpeedDecisionKind kind = SpeedDecisionKind::Yield;
};

struct DpSpeedProfile {
  std::vector<double> times;
  std::vector<double> stations;
  std::vector<SpeedDecision> decisions;

  double station_at(double t) const;
};

struct SpeedTunnel {
  std::vector<double> times;
  std::vector<double> s_low;
  std::vector<double> s_high;
};

enum class SpeedDpStatus { Ok, NoFeasibleProfile };

struct DpSpeedResult {
  SpeedDpStatus status = SpeedDpStatus::Ok;
  DpSpeedProfile profile;
  SpeedTunnel tunnel;
  double follow_buffer = 0.0;
};

/// Forward DP over the station-time grid. Transitions violating monotonicity,
/// the acceleration/deceleration box, the jerk box (at grid resolution) or a
/// buffered region interior are pruned. Decisions are derived from which side
/// of each region the winning profile passes.
DpSpeedResult dp_speed_search(const std::vector<StRegion>& regions, const SpeedLimits& limits,
                              const SpeedDpParams& params, double horizon, double init_v,
                              double init_a, const std::vector<SpeedCap>& caps);

struct SpeedQpParams {
  int segments = 4;
  double constraint_dt = 0.1;
  double w_ref = 1.0;   // guidance toward the DP profile
  double w_acc = 0.1;
  double w_jerk = 0.1;
};

struct SpeedProfile {
  Spline spline;
};

struct SpeedQpSetup {
  QpProblem problem;
  std::vector<double> knots;
  std::vector<double> constraint_times;
};

/// stop_at_end pins the terminal speed near zero when the rough profile came
/// to rest (a Stop decision), so smoothing cannot reintroduce creep.
SpeedQpSetup build_speed_qp(const SpeedTunnel& tunnel, const PiecewiseLinear& s_ref,
                            double init_v, double init_a, const SpeedLimits& limits,
                            const std::vector<SpeedCap>& caps, const SpeedQpParams& params,
                            bool stop_at_end = false);

enum class SpeedQpStatus { Ok, Infeasible };

struct SpeedQpResult {
  SpeedQpStatus status = SpeedQpStatus::Ok;
  SpeedProfile profile;
  QpSolution solution;
  std::vector<ConstraintTag> violated_tags;
};

SpeedQpResult qp_speed(const SpeedTunnel& tunnel, const DpSpeedProfile& guidance, double init_v,
                       double init_a, const SpeedLimits& limits,
                       const std::vector<SpeedCap>& caps, const SpeedQpParams& params,
                       const QpSolution* warm_start = nullptr);

}  // namespace emplan
