#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "emplan/simulator.hpp"
#include "emplan/trace_io.hpp"

using namespace emplan;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) {
  return std::string(EMPLAN_FIXTURE_DIR) + "/" + name;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("emplan_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("fifty empty-road cycles advance the ego fifty meters") {
  const Scenario sc = load_scenario(fixture("straight_empty.json"));
  const Trace trace = run_closed_loop(sc, PlannerConfig{});
  REQUIRE(trace.records.size() == 50);
  // Ego state recorded at the START of each cycle; extrapolate the last one.
  const TraceRecord& last = trace.records.back();
  const CartesianState end = last.trajectory.state_at(sc.sim.cycle_period);
  CHECK(std::abs(end.x - 50.0) <= 0.1);
  for (const auto& record : trace.records) {
    CHECK(!record.fallback);
    CHECK(record.chosen_lane == "main");
  }
}

TEST_CASE("ego hand-off between cycles is exact") {
  Scenario sc = load_scenario(fixture("oncoming_nudge.json"));
  sc.sim.cycles = 8;
  const Trace trace = run_closed_loop(sc, PlannerConfig{});
  REQUIRE(trace.records.size() == 8);
  for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
    const CartesianState pred = trace.records[k].trajectory.state_at(sc.sim.cycle_period);
    const CartesianState& got = trace.records[k + 1].ego;
    CHECK(std::abs(pred.x - got.x) <= 1e-6);
    CHECK(std::abs(pred.y - got.y) <= 1e-6);
    CHECK(std::abs(pred.v - got.v) <= 1e-6);
    CHECK(std::abs(pred.heading - got.heading) <= 1e-6);
  }
}

TEST_CASE("every planner stage is timed in every cycle") {
  Scenario sc = load_scenario(fixture("oncoming_nudge.json"));
  sc.sim.cycles = 3;
  const Trace trace = run_closed_loop(sc, PlannerConfig{});
  for (const auto& record : trace.records) {
    for (const auto& [lane_id, lane] : record.per_lane) {
      for (const char* stage : {"e1", "m1", "e2", "m2"}) {
        CAPTURE(record.cycle);
        CAPTURE(stage);
        const bool lane_reached_stage = lane.ok || stage[0] == 'e' || lane.diag.stage_micros.count(stage);
        CHECK(lane_reached_stage);
        if (lane.ok) {
          REQUIRE(lane.diag.stage_micros.count(stage) == 1);
          CHECK(lane.diag.stage_micros.at(stage) > 0.0);
        }
      }
      if (lane.ok) {
        CHECK(lane.diag.sl_projections == 1);
        CHECK(lane.diag.path_msteps == 1);
        CHECK(lane.diag.st_projections == 1);
        CHECK(lane.diag.speed_msteps == 1);
      }
    }
    CHECK(record.decider_micros >= 0.0);
  }
}

TEST_CASE("closed loop runs are reproducible byte for byte") {
  Scenario sc = load_scenario(fixture("oncoming_nudge.json"));
  sc.sim.cycles = 5;
  const PlannerConfig config;
  const Trace a = run_closed_loop(sc, config);
  const Trace b = run_closed_loop(sc, config);

  const fs::path dir_a = temp_dir("rerun_a");
  const fs::path dir_b = temp_dir("rerun_b");
  OutputFormats formats;
  formats.json = true;
  formats.csv = true;
  emit_outputs(a, sc, dir_a.string(), formats);
  emit_outputs(b, sc, dir_b.string(), formats);
  CHECK(slurp(dir_a / "trace.json") == slurp(dir_b / "trace.json"));
  CHECK(slurp(dir_a / "trajectory.csv") == slurp(dir_b / "trajectory.csv"));
}

TEST_CASE("csv output holds a constant speed column on the empty road") {
  Scenario sc = load_scenario(fixture("straight_empty.json"));
  sc.sim.cycles = 3;
  const Trace trace = run_closed_loop(sc, PlannerConfig{});
  const fs::path dir = temp_dir("csv");
  OutputFormats formats;
  formats.json = false;
  formats.csv = true;
  emit_outputs(trace, sc, dir.string(), formats);
  std::ifstream in(dir / "trajectory.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "cycle,t,x,y,v,a");
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string item;
    for (int i = 0; i <= 4; ++i) std::getline(ss, item, ',');
    CHECK(std::abs(std::stod(item) - 10.0) <= 1e-3);
    ++rows;
  }
  CHECK(rows == 3 * 401);
}

TEST_CASE("format flags control which files appear") {
  Scenario sc = load_scenario(fixture("straight_empty.json"));
  sc.sim.cycles = 2;
  const Trace trace = run_closed_loop(sc, PlannerConfig{});

  const fs::path csv_only = temp_dir("fmt_csv");
  emit_outputs(trace, sc, csv_only.string(), OutputFormats::parse("csv"));
  CHECK(fs::exists(csv_only / "trajectory.csv"));
  CHECK(!fs::exists(csv_only / "trace.json"));
  int svg_count = 0;
  for (const auto& entry : fs::directory_iterator(csv_only)) {
    if (entry.path().extension() == ".svg") ++svg_count;
  }
  CHECK(svg_count == 0);

  const fs::path with_svg = temp_dir("fmt_svg");
  emit_outputs(trace, sc, with_svg.string(), OutputFormats::parse("json,csv,svg"));
  CHECK(fs::exists(with_svg / "trace.json"));
  CHECK(fs::exists(with_svg / "sl_cycle_0.svg"));
  CHECK(fs::exists(with_svg / "st_cycle_0.svg"));
  CHECK(fs::exists(with_svg / "xy_cycle_0.svg"));

  CHECK_THROWS_AS(OutputFormats::parse("json,bogus"), ParseError);
}

TEST_CASE("planner failures surface as recorded fallback events") {
  Scenario sc = load_scenario(fixture("straight_empty.json"));
  // Drop a wall across the lane.
  Obstacle wall;
  wall.id = "wall";
  wall.kind = Obstacle::Kind::Static;
  wall.length = 2.0;
  wall.width = 8.0;
  wall.trajectory = {{0.0, 40.0, 0.0, 0.0}};
  sc.obstacles.push_back(wall);
  sc.sim.cycles = 3;
  const Trace trace = run_closed_loop(sc, PlannerConfig{});
  REQUIRE(trace.records.size() == 3);
  for (const auto& record : trace.records) {
    CHECK(record.fallback);
    CHECK(!record.trajectory.points.empty());
  }
}

TEST_CASE("cli exit codes and outputs") {
  const std::string cli = EMPLAN_CLI_PATH;
  const fs::path dir = temp_dir("cli");

  SUBCASE("successful run") {
    const std::string cmd = cli + " plan --scenario " + fixture("straight_empty.json") +
                            " --cycles 2 --out " + dir.string() + " > /dev/null 2>&1";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(dir / "trace.json"));
    CHECK(fs::exists(dir / "trajectory.csv"));
  }
  SUBCASE("missing scenario file exits with the io code") {
    const std::string cmd = cli + " plan --scenario /does/not/exist.json > /dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 3);
  }
  SUBCASE("invalid scenario exits with the load code") {
    const fs::path bad = dir / "bad.json";
    fs::create_directories(dir);
    std::ofstream(bad) << "{\"version\": 1}";
    const std::string cmd = cli + " plan --scenario " + bad.string() + " > /dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 2);
  }
  SUBCASE("dump-config prints keys") {
    const fs::path out = dir / "config.txt";
    fs::create_directories(dir);
    const std::string cmd = cli + " plan --dump-config > " + out.string() + " 2>/dev/null";
    CHECK(std::system(cmd.c_str()) == 0);
    const std::string text = slurp(out);
    CHECK(text.find("path.w1") != std::string::npos);
    CHECK(text.find("limits.v_ref") != std::string::npos);
  }
}
