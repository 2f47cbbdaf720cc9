#pragma once

#include <string>
#include <vector>

#include "emplan/scenario.hpp"

namespace emplan {

struct TraceRecord {
  int cycle = 0;
  double t_abs = 0.0;
  CartesianState ego;
  std::string chosen_lane;
  bool fallback = false;
  Trajectory trajectory;
  std::vector<std::pair<std::string, LaneResult>> per_lane;
  double decider_micros = 0.0;
};

struct Trace {
  std::vector<TraceRecord> records;
};

/// Closed-loop stepping: plan, advance the ego exactly along the chosen
/// trajectory by one cycle period, advance obstacles along their predictions,
/// repeat. Planner failures become recorded fallback events, never exceptions.
Trace run_closed_loop(const Scenario& scenario, const PlannerConfig& config);

/// World snapshot at absolute time t: obstacle predictions re-based so their
/// trajectories start at relative time 0.
World world_at(const Scenario& scenario, double t_abs, const CartesianState& ego,
               double horizon);

struct CaseStudyCycle {
  PathProfile path;
  SpeedProfile speed;
  double nudge_station = 0.0;   // station of peak lateral deviation
  double min_speed = 0.0;       // min S'(t) over the horizon
  double interaction_station = 0.0;  // mean station of the SL interaction
};

/// Runs the closed loop for a fixed number of cycles and reports the chosen
/// lane's path/speed profiles per cycle.
std::vector<CaseStudyCycle> iterate_case_study(const Scenario& scenario,
                                               const PlannerConfig& config, int cycles);

}  // namespace emplan
