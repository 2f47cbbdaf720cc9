#pragma once

#include <string>

#include "emplan/path_optimizer.hpp"
#include "emplan/projection.hpp"
#include "emplan/speed_optimizer.hpp"

namespace emplan {

/// Cross-lane trajectory cost weighting.
struct DeciderParams {
  double hysteresis = 0.8;  // switch lanes only below this fraction of current cost
  double lane_change_penalty = 0.2;
  double w_progress = 1.0;
  double w_smoothness = 0.01;
  double w_obstacle = 1.0;
};

/// Speed cap applied while passing close to a nudged obstacle; the ceiling
/// scales linearly with lateral clearance and vanishes at the nudge range.
struct PassingCapParams {
  double min_ratio = 0.25;  // ceiling fraction of v_ref at zero clearance
  double lead_time = 1.5;  // window opens this long before first interaction
  double tail_time = 0.5;
  double floor = 2.0;  // m/s
};

struct PlannerParams {
  double horizon = 8.0;
  double plan_span = 200.0;
  double output_step = 0.02;
  double fallback_decel = 4.0;
};

struct PlannerConfig {
  PlannerParams planner;
  PathCostParams path;
  PathQpParams path_qp;
  SpeedLimits limits;
  SpeedDpParams speed_dp;
  SpeedQpParams speed_qp;
  SlProjectionParams sl;
  StProjectionParams st;
  DeciderParams decider;
  PassingCapParams passing;

  /// Parses a human-editable "key = value" file ('#' comments). Unknown keys
  /// raise ParseError. Returns defaults when path is empty.
  static PlannerConfig load(const std::string& path);
  void apply_line(const std::string& line, int line_no);
  /// Defaults (or current values) in the same key = value format.
  std::string dump() const;
};

}  // namespace emplan
