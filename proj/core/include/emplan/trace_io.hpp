#pragma once

#include <string>
#include <vector>

#include "emplan/simulator.hpp"

namespace emplan {

struct OutputFormats {
  bool json = true;
  bool csv = true;
  bool svg = false;

  /// Parses "json,csv,svg"; throws ParseError on unknown names.
  static OutputFormats parse(const std::string& list);
};

/// Writes trace.json / trajectory.csv / per-cycle SVG views into out_dir.
/// Planning content in trace.json is deterministic; stage timings go to a
/// separate timings.csv. Returns the written file names.
std::vector<std::string> emit_outputs(const Trace& trace, const Scenario& scenario,
                                      const std::string& out_dir, const OutputFormats& formats);

}  // namespace emplan
