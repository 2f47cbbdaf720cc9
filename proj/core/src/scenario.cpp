#include "emplan/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace emplan {

using nlohmann::json;

namespace {

double require_number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_number())
    throw ParseError(where + ": missing numeric field '" + key + "'");
  return j[key].get<double>();
}

std::string require_string(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_string())
    throw ParseError(where + ": missing string field '" + key + "'");
  return j[key].get<std::string>();
}

Regulation parse_regulation(const json& j, const std::string& where) {
  Regulation reg;
  const std::string kind = require_string(j, "kind", where);
  if (kind == "speed_limit") {
    reg.kind = RegulationKind::SpeedLimit;
    reg.v = require_number(j, "v", where);
  } else if (kind == "stop_line") {
    reg.kind = RegulationKind::StopLine;
    reg.s = require_number(j, "s", where);
  } else if (kind == "keep_clear") {
    reg.kind = RegulationKind::KeepClear;
    reg.s_min = require_number(j, "s_min", where);
    reg.s_max = require_number(j, "s_max", where);
  } else {
    throw ParseError(where + ": unknown regulation kind '" + kind + "'");
  }
  return reg;
}

void validate(const Scenario& sc) {
  if (sc.lanes.empty()) throw ValidationError("scenario has no lanes");
  int current = 0;
  for (const auto& lane : sc.lanes) current += lane.is_current ? 1 : 0;
  if (current != 1)
    throw ValidationError("exactly one lane must be flagged is_current, found " +
                          std::to_string(current));

  for (const auto& lane : sc.lanes) {
    if (lane.width <= 0.0) throw ValidationError("lane " + lane.lane_id + ": width must be > 0");
    ReferenceLine ref = ReferenceLine::from_polyline(lane.centerline);  // validates geometry
    for (const Regulation& reg : lane.regulations) {
      if (reg.kind == RegulationKind::StopLine && (reg.s < 0.0 || reg.s > ref.length()))
        throw ValidationError("lane " + lane.lane_id + ": stop line outside lane span");
      if (reg.kind == RegulationKind::KeepClear &&
          (reg.s_min < 0.0 || reg.s_max > ref.length() || reg.s_min >= reg.s_max))
        throw ValidationError("lane " + lane.lane_id + ": keep-clear span invalid");
    }
  }

  const double required = sc.sim.cycles * sc.sim.cycle_period + kDefaultPlanningHorizon;
  for (const Obstacle& ob : sc.obstacles) {
    if (ob.length <= 0.0 || ob.width <= 0.0)
      throw ValidationError("obstacle " + ob.id + ": non-positive size");
    if (ob.trajectory.empty()) throw ValidationError("obstacle " + ob.id + ": no poses");
    if (ob.kind == Obstacle::Kind::Static) {
      if (ob.trajectory.size() != 1)
        throw ValidationError("obstacle " + ob.id + ": static obstacles carry exactly one pose");
    } else {
      if (std::abs(ob.trajectory.front().t) > 1e-9)
        throw ValidationError("obstacle " + ob.id + ": trajectory must start at t = 0");
      for (std::size_t i = 1; i < ob.trajectory.size(); ++i) {
        if (ob.trajectory[i].t <= ob.trajectory[i - 1].t)
          throw ValidationError("obstacle " + ob.id + ": trajectory times must increase");
      }
      if (ob.trajectory.back().t < required - 1e-9)
        throw ValidationError("obstacle " + ob.id + ": prediction horizon " +
                              std::to_string(ob.trajectory.back().t) +
                              " s shorter than simulation needs " + std::to_string(required) +
                              " s");
    }
  }
}

}  // namespace

std::vector<LaneCandidate> Scenario::candidates() const {
  std::vector<LaneCandidate> out;
  for (const auto& lane : lanes) {
    LaneCandidate c;
    c.lane_id = lane.lane_id;
    c.reference_line =
        std::make_shared<ReferenceLine>(ReferenceLine::from_polyline(lane.centerline));
    c.road = {-0.5 * lane.width, 0.5 * lane.width};
    c.is_change_lane = lane.is_change_lane;
    c.is_current = lane.is_current;
    c.regulations = lane.regulations;
    out.push_back(std::move(c));
  }
  return out;
}

Scenario load_scenario_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario JSON: ") + e.what());
  }

  Scenario sc;
  if (!j.contains("version") || !j["version"].is_number_integer())
    throw ParseError("scenario: missing integer 'version'");
  sc.version = j["version"].get<int>();
  if (sc.version != 1) throw ValidationError("unsupported scenario version");

  if (!j.contains("lanes") || !j["lanes"].is_array())
    throw ParseError("scenario: missing 'lanes' array");
  for (const auto& jl : j["lanes"]) {
    ScenarioLane lane;
    lane.lane_id = require_string(jl, "lane_id", "lane");
    lane.width = require_number(jl, "width", "lane " + lane.lane_id);
    lane.is_change_lane = jl.value("is_change_lane", false);
    lane.is_current = jl.value("is_current", false);
    if (!jl.contains("centerline") || !jl["centerline"].is_array())
      throw ParseError("lane " + lane.lane_id + ": missing 'centerline'");
    for (const auto& jp : jl["centerline"]) {
      if (!jp.is_array() || jp.size() != 2)
        throw ParseError("lane " + lane.lane_id + ": centerline entries are [x, y]");
      lane.centerline.push_back({jp[0].get<double>(), jp[1].get<double>()});
    }
    for (const auto& jr : jl.value("regulations", json::array()))
      lane.regulations.push_back(parse_regulation(jr, "lane " + lane.lane_id));
    sc.lanes.push_back(std::move(lane));
  }

  if (!j.contains("ego")) throw ParseError("scenario: missing 'ego'");
  const json& je = j["ego"];
  sc.ego.x = require_number(je, "x", "ego");
  sc.ego.y = require_number(je, "y", "ego");
  sc.ego.heading = require_number(je, "heading", "ego");
  sc.ego.v = require_number(je, "v", "ego");
  sc.ego.a = je.value("a", 0.0);
  sc.ego.kappa = je.value("kappa", 0.0);
  if (je.contains("footprint")) {
    const json& jf = je["footprint"];
    sc.footprint.l_f = require_number(jf, "l_f", "footprint");
    sc.footprint.l_r_geom = require_number(jf, "l_r", "footprint");
    sc.footprint.width = require_number(jf, "width", "footprint");
    sc.footprint.cap_radius = 0.5 * sc.footprint.width;
    if (sc.footprint.l_f <= 0 || sc.footprint.l_r_geom <= 0 || sc.footprint.width <= 0)
      throw ValidationError("footprint dimensions must be positive");
  }

  for (const auto& jo : j.value("obstacles", json::array())) {
    Obstacle ob;
    ob.id = require_string(jo, "id", "obstacle");
    ob.length = require_number(jo, "length", "obstacle " + ob.id);
    ob.width = require_number(jo, "width", "obstacle " + ob.id);
    const std::string kind = require_string(jo, "kind", "obstacle " + ob.id);
    if (kind == "static") {
      ob.kind = Obstacle::Kind::Static;
    } else if (kind == "dynamic") {
      ob.kind = Obstacle::Kind::Dynamic;
    } else {
      throw ParseError("obstacle " + ob.id + ": unknown kind '" + kind + "'");
    }
    if (!jo.contains("trajectory") || !jo["trajectory"].is_array() || jo["trajectory"].empty())
      throw ParseError("obstacle " + ob.id + ": missing 'trajectory'");
    for (const auto& jp : jo["trajectory"]) {
      if (!jp.is_array() || jp.size() != 4)
        throw ParseError("obstacle " + ob.id + ": trajectory entries are [t, x, y, heading]");
      ob.trajectory.push_back(
          {jp[0].get<double>(), jp[1].get<double>(), jp[2].get<double>(), jp[3].get<double>()});
    }
    if (jo.contains("speed")) {
      ob.speed = jo["speed"].get<double>();
    } else if (ob.kind == Obstacle::Kind::Dynamic && ob.trajectory.size() >= 2) {
      const auto& a = ob.trajectory[0];
      const auto& b = ob.trajectory[1];
      ob.speed = std::hypot(b.x - a.x, b.y - a.y) / (b.t - a.t);
    }
    sc.obstacles.push_back(std::move(ob));
  }

  if (j.contains("sim")) {
    sc.sim.cycle_period = require_number(j["sim"], "cycle_period", "sim");
    sc.sim.cycles = int(require_number(j["sim"], "cycles", "sim"));
    if (sc.sim.cycle_period <= 0.0 || sc.sim.cycles <= 0)
      throw ValidationError("sim parameters must be positive");
  }

  validate(sc);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario_text(ss.str());
}

std::string serialize_scenario(const Scenario& sc) {
  json j;
  j["version"] = sc.version;
  j["lanes"] = json::array();
  for (const auto& lane : sc.lanes) {
    json jl;
    jl["lane_id"] = lane.lane_id;
    jl["width"] = lane.width;
    jl["is_change_lane"] = lane.is_change_lane;
    jl["is_current"] = lane.is_current;
    jl["centerline"] = json::array();
    for (const auto& p : lane.centerline) jl["centerline"].push_back({p[0], p[1]});
    jl["regulations"] = json::array();
    for (const Regulation& reg : lane.regulations) {
      json jr;
      switch (reg.kind) {
        case RegulationKind::SpeedLimit:
          jr["kind"] = "speed_limit";
          jr["v"] = reg.v;
          break;
        case RegulationKind::StopLine:
          jr["kind"] = "stop_line";
          jr["s"] = reg.s;
          break;
        case RegulationKind::KeepClear:
          jr["kind"] = "keep_clear";
          jr["s_min"] = reg.s_min;
          jr["s_max"] = reg.s_max;
          break;
      }
      jl["regulations"].push_back(jr);
    }
    j["lanes"].push_back(jl);
  }
  j["ego"] = {{"x", sc.ego.x},
              {"y", sc.ego.y},
              {"heading", sc.ego.heading},
              {"kappa", sc.ego.kappa},
              {"v", sc.ego.v},
              {"a", sc.ego.a},
              {"footprint",
               {{"l_f", sc.footprint.l_f},
                {"l_r", sc.footprint.l_r_geom},
                {"width", sc.footprint.width}}}};
  j["obstacles"] = json::array();
  for (const Obstacle& ob : sc.obstacles) {
    json jo;
    jo["id"] = ob.id;
    jo["kind"] = ob.kind == Obstacle::Kind::Static ? "static" : "dynamic";
    jo["length"] = ob.length;
    jo["width"] = ob.width;
    jo["speed"] = ob.speed;
    jo["trajectory"] = json::array();
    for (const auto& p : ob.trajectory) jo["trajectory"].push_back({p.t, p.x, p.y, p.heading});
    j["obstacles"].push_back(jo);
  }
  j["sim"] = {{"cycle_period", sc.sim.cycle_period}, {"cycles", sc.sim.cycles}};
  return j.dump(2);
}

}  // namespace emplan
