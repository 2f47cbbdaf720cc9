#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "emplan/config.hpp"
#include "emplan/geometry.hpp"
#include "emplan/path_optimizer.hpp"
#include "emplan/projection.hpp"
#include "emplan/speed_optimizer.hpp"
#include "emplan/trajectory.hpp"

namespace emplan {

enum class RegulationKind { SpeedLimit, StopLine, KeepClear };

struct Regulation {
  RegulationKind kind = RegulationKind::SpeedLimit;
  double v = 0.0;      // SpeedLimit
  double s = 0.0;      // StopLine station
  double s_min = 0.0;  // KeepClear span
  double s_max = 0.0;
};

struct LaneCandidate {
  std::string lane_id;
  std::shared_ptr<const ReferenceLine> reference_line;
  RoadBounds road;
  bool is_change_lane = false;
  bool is_current = false;
  std::vector<Regulation> regulations;
};

struct World {
  CartesianState ego;
  EgoFootprint footprint;
  std::vector<Obstacle> obstacles;
};

struct TrajectoryCost {
  double lane_change_penalty = 0.0;
  double progress_term = 0.0;
  double smoothness_term = 0.0;
  double obstacle_proximity_term = 0.0;
  double total = 0.0;
  bool feasible = false;
};

enum class LaneFailureKind {
  None,
  ProjectionFailure,
  AllPathsCollide,
  DegenerateTunnel,
  PathQpInfeasible,
  NoFeasibleProfile,
  SpeedQpInfeasible,
};

std::string to_string(LaneFailureKind kind);

struct LaneDiagnostics {
  std::vector<SlRegion> sl_regions;
  std::vector<StRegion> st_regions;  // ego-relative stations
  std::optional<DpPath> dp_path;
  std::optional<FeasibleTunnel> path_tunnel;
  std::vector<PathDecision> path_decisions;
  std::optional<PathProfile> path_profile;
  std::optional<DpSpeedProfile> dp_speed;
  std::optional<SpeedTunnel> speed_tunnel;
  std::optional<SpeedProfile> speed_profile;
  std::vector<SpeedCap> caps;
  double start_station = 0.0;
  double follow_buffer = 0.0;
  std::optional<QpSolution> path_qp_solution;
  std::optional<QpSolution> speed_qp_solution;
  int path_qp_iterations = 0;
  int speed_qp_iterations = 0;
  int sl_projections = 0;
  int path_msteps = 0;
  int st_projections = 0;
  int speed_msteps = 0;
  std::map<std::string, double> stage_micros;  // e1, m1, e2, m2
};

struct LaneResult {
  bool ok = false;
  LaneFailureKind failure = LaneFailureKind::None;
  std::string failure_detail;
  Trajectory trajectory;
  TrajectoryCost cost;
  double terminal_station = 0.0;  // absolute, for regulation checks
  double max_speed = 0.0;
  LaneDiagnostics diag;
};

struct CycleResult {
  Trajectory best;
  std::string chosen_lane;
  bool fallback = false;
  std::vector<std::pair<std::string, LaneResult>> per_lane;
  double decider_micros = 0.0;
};

/// Pure cross-lane decision given per-lane outcomes: safety rules first, then
/// lowest cost with switch hysteresis. Returns the winning index or -1.
int decide_lane(const std::vector<std::pair<std::string, LaneResult>>& lanes,
                const std::vector<LaneCandidate>& candidates, const DeciderParams& params);

/// Lane-level E/M planner with per-lane warm-start caches. One planning cycle
/// is in flight at a time; candidates inside a cycle may plan concurrently.
class EmPlanner {
 public:
  explicit EmPlanner(PlannerConfig config);

  const PlannerConfig& config() const { return config_; }

  /// Full lane pipeline: SL projection, DP+QP path, ST projection with
  /// regulation injection, DP+QP speed, Cartesian composition.
  LaneResult plan_lane(const LaneCandidate& candidate, const World& world,
                       const Trajectory* prev_trajectory,
                       const QpSolution* path_warm = nullptr,
                       const QpSolution* speed_warm = nullptr) const;

  /// Plans every candidate and applies the cross-lane decider. On total
  /// failure emits a comfort-stop fallback along the previous trajectory.
  CycleResult plan_cycle(const std::vector<LaneCandidate>& candidates, const World& world,
                         const Trajectory* prev_trajectory);

 private:
  Trajectory fallback_stop(const World& world, const Trajectory* prev) const;

  PlannerConfig config_;
  std::map<std::string, QpSolution> path_warm_;
  std::map<std::string, QpSolution> speed_warm_;
};

}  // namespace emplan
