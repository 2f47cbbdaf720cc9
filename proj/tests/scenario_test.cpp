#include <doctest.h>

#include <cmath>

#include <sstream>

#include "emplan/config.hpp"
#include "emplan/scenario.hpp"

using namespace emplan;

namespace {

const char* kMinimalScenario = R"json({
  "version": 1,
  "lanes": [{
    "lane_id": "only",
    "width": 3.5,
    "is_current": true,
    "centerline": [[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [1.5, 0.0], [2.0, 0.0],
                   [2.5, 0.0], [3.0, 0.0], [3.5, 0.0], [4.0, 0.0], [4.5, 0.0],
                   [5.0, 0.0], [5.5, 0.0], [6.0, 0.0], [6.5, 0.0], [7.0, 0.0],
                   [7.5, 0.0], [8.0, 0.0], [8.5, 0.0], [9.0, 0.0], [9.5, 0.0],
                   [10.0, 0.0]]
  }],
  "ego": {"x": 0.0, "y": 0.0, "heading": 0.0, "v": 5.0,
          "footprint": {"l_f": 2.8, "l_r": 1.0, "width": 2.0}},
  "obstacles": [],
  "sim": {"cycle_period": 0.1, "cycles": 1}
})json";

std::string fixture(const std::string& name) {
  return std::string(EMPLAN_FIXTURE_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("minimal scenario loads") {
  const Scenario sc = load_scenario_text(kMinimalScenario);
  CHECK(sc.lanes.size() == 1);
  CHECK(sc.obstacles.empty());
  CHECK(sc.ego.v == doctest::Approx(5.0));
  const auto candidates = sc.candidates();
  REQUIRE(candidates.size() == 1);
  CHECK(candidates[0].reference_line->length() == doctest::Approx(10.0));
  CHECK(candidates[0].road.l_min == doctest::Approx(-1.75));
}

TEST_CASE("obstacle prediction shorter than the simulation is rejected") {
  Scenario sc = load_scenario_text(kMinimalScenario);
  std::string text = serialize_scenario(sc);
  // Inject an obstacle whose prediction ends at 2 s against a >8 s need.
  const std::string needle = "\"obstacles\": []";
  auto pos = text.find(needle);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, needle.size(),
               "\"obstacles\": [{\"id\": \"short\", \"kind\": \"dynamic\", \"length\": 4.0,"
               "\"width\": 1.8, \"trajectory\": [[0.0, 50.0, 0.0, 0.0], [2.0, 30.0, 0.0, 0.0]]}]");
  CHECK_THROWS_AS(load_scenario_text(text), ValidationError);
}

TEST_CASE("malformed documents raise parse errors") {
  CHECK_THROWS_AS(load_scenario_text("{ not json"), ParseError);
  CHECK_THROWS_AS(load_scenario_text("{}"), ParseError);
  CHECK_THROWS_AS(load_scenario_text(R"({"version": 1, "lanes": "nope"})"), ParseError);
}

TEST_CASE("validation failures name the broken invariant") {
  std::string text(kMinimalScenario);
  auto pos = text.find("\"is_current\": true");
  text.replace(pos, std::string("\"is_current\": true").size(), "\"is_current\": false");
  CHECK_THROWS_WITH_AS(load_scenario_text(text), doctest::Contains("is_current"),
                       ValidationError);
}

TEST_CASE("missing file is an io error") {
  CHECK_THROWS_AS(load_scenario("/nonexistent/path.json"), IoError);
}

TEST_CASE("head-on fixture loads with one oncoming obstacle at ten") {
  const Scenario sc = load_scenario(fixture("oncoming_nudge.json"));
  REQUIRE(sc.obstacles.size() == 1);
  const Obstacle& ob = sc.obstacles[0];
  CHECK(ob.kind == Obstacle::Kind::Dynamic);
  CHECK(ob.speed == doctest::Approx(10.0).epsilon(1e-6));
  CHECK(sc.ego.v == doctest::Approx(10.0));
  // Closing course: obstacle x decreases over time.
  CHECK(ob.trajectory.front().x > ob.trajectory.back().x);
}

TEST_CASE("golden fixtures round-trip through serialization") {
  for (const char* name :
       {"straight_empty.json", "oncoming_nudge.json", "two_lane_block.json"}) {
    const Scenario a = load_scenario(fixture(name));
    const Scenario b = load_scenario_text(serialize_scenario(a));
    REQUIRE(a.lanes.size() == b.lanes.size());
    for (std::size_t i = 0; i < a.lanes.size(); ++i) {
      CHECK(a.lanes[i].lane_id == b.lanes[i].lane_id);
      CHECK(a.lanes[i].width == b.lanes[i].width);
      CHECK(a.lanes[i].is_current == b.lanes[i].is_current);
      REQUIRE(a.lanes[i].centerline.size() == b.lanes[i].centerline.size());
      for (std::size_t k = 0; k < a.lanes[i].centerline.size(); ++k) {
        CHECK(a.lanes[i].centerline[k] == b.lanes[i].centerline[k]);
      }
    }
    REQUIRE(a.obstacles.size() == b.obstacles.size());
    for (std::size_t i = 0; i < a.obstacles.size(); ++i) {
      CHECK(a.obstacles[i].id == b.obstacles[i].id);
      REQUIRE(a.obstacles[i].trajectory.size() == b.obstacles[i].trajectory.size());
      for (std::size_t k = 0; k < a.obstacles[i].trajectory.size(); ++k) {
        CHECK(a.obstacles[i].trajectory[k].x == b.obstacles[i].trajectory[k].x);
        CHECK(a.obstacles[i].trajectory[k].t == b.obstacles[i].trajectory[k].t);
      }
    }
    CHECK(a.sim.cycles == b.sim.cycles);
    CHECK(a.ego.v == b.ego.v);
  }
}

TEST_CASE("every checked-in fixture loads cleanly") {
  for (const char* name :
       {"straight_empty.json", "stop_line.json", "speed_limit.json", "keep_clear.json",
        "oncoming_nudge.json", "cut_in.json", "static_nudge.json", "two_lane_block.json",
        "multi_obstacle.json"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_scenario(fixture(name)));
  }
}

TEST_CASE("config dump round-trips and rejects bad input") {
  PlannerConfig base;
  base.path.w2 = 12.5;
  base.limits.v_ref = 8.0;
  const std::string dump = base.dump();

  PlannerConfig loaded;
  int line_no = 0;
  std::stringstream ss(dump);
  std::string line;
  while (std::getline(ss, line)) loaded.apply_line(line, ++line_no);
  CHECK(loaded.path.w2 == doctest::Approx(12.5));
  CHECK(loaded.limits.v_ref == doctest::Approx(8.0));
  CHECK(loaded.decider.hysteresis == doctest::Approx(base.decider.hysteresis));

  PlannerConfig bad;
  CHECK_THROWS_AS(bad.apply_line("mystery.key = 1.0", 1), ParseError);
  CHECK_THROWS_AS(bad.apply_line("path.w1 equals 3", 2), ParseError);
  CHECK_THROWS_AS(bad.apply_line("path.w1 = banana", 3), ParseError);
  CHECK_NOTHROW(bad.apply_line("# a comment", 4));
  CHECK_NOTHROW(bad.apply_line("   ", 5));
}
