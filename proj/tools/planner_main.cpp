#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "emplan/config.hpp"
#include "emplan/log.hpp"
#include "emplan/scenario.hpp"
#include "emplan/simulator.hpp"
#include "emplan/trace_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitLoadError = 2;
constexpr int kExitIoError = 3;

int run_plan(const std::string& scenario_path, int cycles_override, const std::string& out_dir,
             bool plot, const std::string& formats_list, const std::string& config_path,
             bool dump_config) {
  emplan::PlannerConfig config;
  try {
    config = emplan::PlannerConfig::load(config_path);
  } catch (const emplan::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const emplan::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitLoadError;
  }

  if (dump_config) {
    std::cout << config.dump();
    return kExitOk;
  }

  emplan::Scenario scenario;
  try {
    scenario = emplan::load_scenario(scenario_path);
  } catch (const emplan::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const emplan::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitLoadError;
  }
  if (cycles_override > 0) scenario.sim.cycles = cycles_override;

  emplan::OutputFormats formats;
  try {
    formats = emplan::OutputFormats::parse(formats_list);
    if (plot) formats.svg = true;
  } catch (const emplan::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitLoadError;
  }

  const emplan::Trace trace = emplan::run_closed_loop(scenario, config);

  int fallbacks = 0;
  for (const auto& record : trace.records) fallbacks += record.fallback ? 1 : 0;

  try {
    const auto files = emplan::emit_outputs(trace, scenario, out_dir, formats);
    std::cout << "planned " << trace.records.size() << " cycles";
    if (fallbacks > 0) std::cout << " (" << fallbacks << " fallback)";
    std::cout << ", wrote " << files.size() << " files to " << out_dir << "\n";
  } catch (const emplan::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIoError;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lane-level motion planner: DP + spline-QP path/speed in a Frenet frame"};
  app.require_subcommand(0, 1);

  auto* plan = app.add_subcommand("plan", "Run the closed-loop simulator on a scenario");
  std::string scenario_path;
  std::string out_dir = "out";
  std::string formats = "json,csv";
  std::string config_path;
  int cycles = 0;
  bool plot = false;
  bool dump_config = false;
  plan->add_option("--scenario", scenario_path, "Scenario JSON file");
  plan->add_option("--cycles", cycles, "Override the scenario's cycle count");
  plan->add_option("--out", out_dir, "Output directory")->capture_default_str();
  plan->add_flag("--plot", plot, "Also write per-cycle SVG views");
  plan->add_option("--formats", formats, "Comma list of json,csv,svg")->capture_default_str();
  plan->add_option("--config", config_path, "Planner config file (key = value)");
  plan->add_flag("--dump-config", dump_config, "Print the effective config and exit");

  CLI11_PARSE(app, argc, argv);

  if (plan->parsed()) {
    if (!dump_config && scenario_path.empty()) {
      std::cerr << "error: --scenario is required (or use --dump-config)\n";
      return kExitLoadError;
    }
    return run_plan(scenario_path, cycles, out_dir, plot, formats, config_path, dump_config);
  }
  std::cout << app.help();
  return kExitOk;
}
