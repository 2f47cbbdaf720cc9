#pragma once

#include <array>
#include <string>
#include <vector>

#include "emplan/geometry.hpp"
#include "emplan/projection.hpp"
#include "emplan/qp_solver.hpp"
#include "emplan/spline.hpp"
#include "emplan/spline_builder.hpp"

namespace emplan {

/// Physical free-space bounds for the lane, as lateral offsets from the
/// reference line.
struct RoadBounds {
  double l_min = -2.0;
  double l_max = 2.0;
};

struct PathCostParams {
  double w1 = 1.0;    // integral (f')^2
  double w2 = 10.0;   // integral (f'')^2
  double w3 = 100.0;  // integral (f''')^2
  double w4 = 0.5;    // guidance
  double d_c = 0.3;   // collision buffer
  double d_n = 1.5;   // nudge range
  double collision_cost = 1e8;
  double w_obstacle = 100.0;  // nudge cost scale
  double on_road_penalty = 1e3;
  double obstacle_sample_ds = 1.0;
};

struct LatticeConfig {
  double row_interval = 15.0;
  std::vector<double> lateral_offsets;  // template per row, ego-center offsets
  double total_span = 200.0;
  int edge_order = 5;

  /// Default config: row interval max(10, 1.5 s * speed), doubled for lane
  /// changes; 7 offsets at 0.5 m spacing clamped so the body stays on the
  /// road; span covering max(200 m, 8 s * speed).
  static LatticeConfig make(double ego_speed, bool lane_change, const RoadBounds& road,
                            const EgoFootprint& footprint);
};

struct LatticeNode {
  double s = 0.0;
  double l = 0.0;
};

struct Lattice {
  FrenetState start;
  std::vector<std::vector<LatticeNode>> rows;  // row 0 is the start alone
  int edge_count() const;
};

/// Rows of candidate points ahead of the start, connected by quintic edges.
/// Throws EmptyRow when clamping leaves a row without offsets.
Lattice sample_lattice(const LatticeConfig& config, const FrenetState& start,
                       const RoadBounds& road, double max_station);

/// Piecewise-quintic rough path chosen by forward dynamic programming.
struct DpPath {
  std::vector<LatticeNode> nodes;
  std::vector<std::array<double, 6>> edge_coeffs;  // per hop, local in s - s_row
  double total_cost = 0.0;

  double s_begin() const { return nodes.front().s; }
  double s_end() const { return nodes.back().s; }
  double eval(double s, int order = 0) const;
};

enum class DpPathStatus { Ok, AllPathsCollide };

struct DpPathResult {
  DpPathStatus status = DpPathStatus::Ok;
  DpPath path;
};

DpPathResult dp_search(const Lattice& lattice, const std::vector<SlRegion>& regions,
                       const PiecewiseLinear& guidance, const PathCostParams& params,
                       const EgoFootprint& footprint, const RoadBounds& road);

enum class NudgeSide { Left, Right, Ignore };

struct PathDecision {
  std::string obstacle_id;
  NudgeSide kind = NudgeSide::Ignore;
};

struct FeasibleTunnel {
  std::vector<double> stations;
  std::vector<double> l_low;
  std::vector<double> l_high;

  /// Bounds at an arbitrary station (nearest grid entry).
  std::array<double, 2> bounds_at(double s) const;
};

enum class TunnelStatus { Ok, Degenerate };

struct TunnelResult {
  TunnelStatus status = TunnelStatus::Ok;
  FeasibleTunnel tunnel;
  std::vector<PathDecision> decisions;
};

/// Clips road bounds by every region on the side the DP path passed it and
/// derives per-obstacle nudge decisions.
TunnelResult extract_tunnel_and_decisions(const DpPath& dp_path,
                                          const std::vector<SlRegion>& regions,
                                          const RoadBounds& road, const EgoFootprint& footprint,
                                          const PathCostParams& params);

struct PathQpParams {
  int segments = 5;
  double constraint_ds = 2.0;
  double max_ddl = 0.5;
  double max_dddl = 0.2;
  // The smoothing spline refines the reachable front of the tunnel; the DP
  // span beyond it is safety margin no trajectory reaches within a horizon.
  double span = 145.0;
};

struct PathProfile {
  Spline spline;
  std::vector<PathDecision> decisions;
};

struct PathQpSetup {
  QpProblem problem;
  std::vector<double> knots;
  std::vector<double> constraint_stations;
};

PathQpSetup build_path_qp(const FeasibleTunnel& tunnel, const PiecewiseLinear& guidance,
                          const FrenetState& start, const EgoFootprint& footprint,
                          const PathCostParams& cost, const PathQpParams& qp);

enum class PathQpStatus { Ok, Infeasible };

struct PathQpResult {
  PathQpStatus status = PathQpStatus::Ok;
  PathProfile profile;
  QpSolution solution;
  std::vector<ConstraintTag> violated_tags;
};

/// Spline refinement of the DP path inside the tunnel, warm-started from the
/// previous cycle's solution when available.
PathQpResult qp_path(const FeasibleTunnel& tunnel, const DpPath& dp_path,
                     const std::vector<PathDecision>& decisions, const FrenetState& start,
                     const EgoFootprint& footprint, const PathCostParams& cost,
                     const PathQpParams& qp, const QpSolution* warm_start = nullptr);

}  // namespace emplan
