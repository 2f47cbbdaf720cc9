#pragma once

#include <array>
#include <string>
#include <vector>

#include "emplan/planner.hpp"

namespace emplan {

struct ScenarioLane {
  std::string lane_id;
  double width = 3.5;
  bool is_change_lane = false;
  bool is_current = false;
  std::vector<std::array<double, 2>> centerline;
  std::vector<Regulation> regulations;
};

struct SimParams {
  double cycle_period = 0.1;
  int cycles = 20;
};

/// Planning horizon assumed when validating obstacle prediction coverage.
inline constexpr double kDefaultPlanningHorizon = 8.0;

struct Scenario {
  int version = 1;
  std::vector<ScenarioLane> lanes;
  CartesianState ego;
  EgoFootprint footprint;
  std::vector<Obstacle> obstacles;
  SimParams sim;

  /// Lane candidates with reference lines built from the centerlines.
  std::vector<LaneCandidate> candidates() const;
};

/// Loads and eagerly validates a scenario file. Throws ParseError on malformed
/// JSON / missing fields, ValidationError on invariant violations, IoError
/// when the file cannot be read.
Scenario load_scenario(const std::string& path);
Scenario load_scenario_text(const std::string& text);

/// Canonical serialization (used by round-trip tests and trace output).
std::string serialize_scenario(const Scenario& scenario);

}  // namespace emplan
