#pragma once

#include <array>
#include <vector>

#include "emplan/speed_optimizer.hpp"

namespace emplan {

/// Quantized station-time search grid shared by the DP stage and by
/// exhaustive reference searches in tests: one definition of costs, limits
/// and pruning, so different search strategies are comparable exactly.
///
/// A grid state at layer i is (cell, d, a): station cell s_i, velocity cells
/// d = s_i - s_{i-1}, acceleration cells a = d_i - d_{i-1}. Jerk needs three
/// consecutive steps, which this third-order state captures exactly.
struct SpeedGridModel {
  SpeedGridModel(const std::vector<StRegion>& regions, const SpeedLimits& limits,
                 const SpeedDpParams& params, double horizon, double init_v, double init_a,
                 const std::vector<SpeedCap>& caps);

  int steps = 0;       // layer gaps; layers = steps + 1
  int d_max = 0;       // max velocity cells per step
  int a_min_q = 0;     // acceleration bounds in cells (a_min_q negative)
  int a_max_q = 0;
  int jerk_q = 1;      // max |da| per step in cells, floored at one quantum
  int cells = 0;       // station cells
  double dt = 0.5;
  double ds = 0.5;
  int init_d = 0;
  int init_a_cells = 0;
  double follow_buffer = 3.0;

  std::vector<std::vector<std::array<double, 2>>> slices;      // per layer
  std::vector<std::vector<std::array<double, 2>>> mid_slices;  // per gap
  std::vector<std::vector<double>> proximity;                  // [layer][cell]
  std::vector<std::vector<double>> walls;  // per layer: stoppable lower edges
  std::vector<std::vector<double>> vref_node;  // [layer][cell] stop-aware ref
  std::vector<int> d_cap;                                      // per gap
  std::vector<double> vref_step;                               // per gap

  bool node_blocked(int layer, int cell) const;
  bool mid_blocked(int gap, double s_meters) const;
  /// Braking feasibility: from (cell, v) the ego can still stop short of
  /// every wall at this layer. Applies only to edges that do not move toward
  /// the ego, where stopping is the correct last resort.
  bool can_stop_before_walls(int layer, int cell, int d) const;
  bool step_valid(int gap, int cell_from, int d_from, int a_from, int d_next) const;
  double step_cost(int gap, int d_from, int a_from, int d_next, int cell_next) const;

  /// Lowest speed reachable at time t from init_v under the deceleration and
  /// jerk limits, used to keep externally imposed speed ceilings attainable.
  static double reachable_speed_floor(double t, double init_v, const SpeedLimits& limits);

  /// Effective ceiling for a speed cap at time t. The raw reachability
  /// envelope has jerk corners no third-order-continuous spline can track, so
  /// the bound follows a time-shifted, slackened envelope.
  static double cap_bound(double t, double cap_v, double init_v, const SpeedLimits& limits);

 private:
  SpeedLimits limits_;
  SpeedDpParams params_;
};

}  // namespace emplan
