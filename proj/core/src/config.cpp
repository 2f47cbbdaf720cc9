#include "emplan/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "emplan/errors.hpp"

namespace emplan {

namespace {

struct Entry {
  const char* key;
  std::function<double*(PlannerConfig&)> field;
};

std::vector<Entry> registry() {
  auto f = [](auto member) {
    return [member](PlannerConfig& c) -> double* { return member(c); };
  };
  return {
      {"planner.horizon", f([](PlannerConfig& c) { return &c.planner.horizon; })},
      {"planner.plan_span", f([](PlannerConfig& c) { return &c.planner.plan_span; })},
      {"planner.output_step", f([](PlannerConfig& c) { return &c.planner.output_step; })},
      {"planner.fallback_decel", f([](PlannerConfig& c) { return &c.planner.fallback_decel; })},
      {"path.w1", f([](PlannerConfig& c) { return &c.path.w1; })},
      {"path.w2", f([](PlannerConfig& c) { return &c.path.w2; })},
      {"path.w3", f([](PlannerConfig& c) { return &c.path.w3; })},
      {"path.w4", f([](PlannerConfig& c) { return &c.path.w4; })},
      {"path.d_c", f([](PlannerConfig& c) { return &c.path.d_c; })},
      {"path.d_n", f([](PlannerConfig& c) { return &c.path.d_n; })},
      {"path.collision_cost", f([](PlannerConfig& c) { return &c.path.collision_cost; })},
      {"path.w_obstacle", f([](PlannerConfig& c) { return &c.path.w_obstacle; })},
      {"path.on_road_penalty", f([](PlannerConfig& c) { return &c.path.on_road_penalty; })},
      {"path.obstacle_sample_ds", f([](PlannerConfig& c) { return &c.path.obstacle_sample_ds; })},
      {"path.constraint_ds", f([](PlannerConfig& c) { return &c.path_qp.constraint_ds; })},
      {"path.max_ddl", f([](PlannerConfig& c) { return &c.path_qp.max_ddl; })},
      {"path.max_dddl", f([](PlannerConfig& c) { return &c.path_qp.max_dddl; })},
      {"limits.v_ref", f([](PlannerConfig& c) { return &c.limits.v_ref; })},
      {"limits.v_upper", f([](PlannerConfig& c) { return &c.limits.v_upper; })},
      {"limits.acc_max", f([](PlannerConfig& c) { return &c.limits.acc_max; })},
      {"limits.dec_max", f([](PlannerConfig& c) { return &c.limits.dec_max; })},
      {"limits.jerk_max", f([](PlannerConfig& c) { return &c.limits.jerk_max; })},
      {"speed.dp_dt", f([](PlannerConfig& c) { return &c.speed_dp.dt; })},
      {"speed.dp_ds", f([](PlannerConfig& c) { return &c.speed_dp.ds; })},
      {"speed.tunnel_dt", f([](PlannerConfig& c) { return &c.speed_dp.tunnel_dt; })},
      {"speed.dp_w_ref", f([](PlannerConfig& c) { return &c.speed_dp.w_ref; })},
      {"speed.dp_w_acc", f([](PlannerConfig& c) { return &c.speed_dp.w_acc; })},
      {"speed.dp_w_jerk", f([](PlannerConfig& c) { return &c.speed_dp.w_jerk; })},
      {"speed.dp_w_obstacle", f([](PlannerConfig& c) { return &c.speed_dp.w_obstacle; })},
      {"speed.above_ref_ratio", f([](PlannerConfig& c) { return &c.speed_dp.above_ref_ratio; })},
      {"speed.obstacle_range", f([](PlannerConfig& c) { return &c.speed_dp.obstacle_range; })},
      {"speed.follow_headway", f([](PlannerConfig& c) { return &c.speed_dp.follow_headway; })},
      {"speed.follow_buffer_floor",
       f([](PlannerConfig& c) { return &c.speed_dp.follow_buffer_floor; })},
      {"speed.qp_w_ref", f([](PlannerConfig& c) { return &c.speed_qp.w_ref; })},
      {"speed.qp_w_acc", f([](PlannerConfig& c) { return &c.speed_qp.w_acc; })},
      {"speed.qp_w_jerk", f([](PlannerConfig& c) { return &c.speed_qp.w_jerk; })},
      {"speed.constraint_dt", f([](PlannerConfig& c) { return &c.speed_qp.constraint_dt; })},
      {"projection.sl_dt", f([](PlannerConfig& c) { return &c.sl.dt; })},
      {"projection.sl_horizon", f([](PlannerConfig& c) { return &c.sl.horizon; })},
      {"projection.low_speed_abs", f([](PlannerConfig& c) { return &c.sl.low_speed_abs; })},
      {"projection.low_speed_ratio", f([](PlannerConfig& c) { return &c.sl.low_speed_ratio; })},
      {"projection.st_dt", f([](PlannerConfig& c) { return &c.st.dt; })},
      {"projection.st_station_step", f([](PlannerConfig& c) { return &c.st.station_step; })},
      {"decider.hysteresis", f([](PlannerConfig& c) { return &c.decider.hysteresis; })},
      {"decider.lane_change_penalty",
       f([](PlannerConfig& c) { return &c.decider.lane_change_penalty; })},
      {"decider.w_progress", f([](PlannerConfig& c) { return &c.decider.w_progress; })},
      {"decider.w_smoothness", f([](PlannerConfig& c) { return &c.decider.w_smoothness; })},
      {"decider.w_obstacle", f([](PlannerConfig& c) { return &c.decider.w_obstacle; })},
      {"passing.min_ratio", f([](PlannerConfig& c) { return &c.passing.min_ratio; })},
      {"passing.lead_time", f([](PlannerConfig& c) { return &c.passing.lead_time; })},
      {"passing.tail_time", f([](PlannerConfig& c) { return &c.passing.tail_time; })},
      {"passing.floor", f([](PlannerConfig& c) { return &c.passing.floor; })},
  };
}

}  // namespace

void PlannerConfig::apply_line(const std::string& raw, int line_no) {
  std::string line = raw;
  const auto hash = line.find('#');
  if (hash != std::string::npos) line.erase(hash);
  const auto notspace = line.find_first_not_of(" \t\r\n");
  if (notspace == std::string::npos) return;
  const auto eq = line.find('=');
  if (eq == std::string::npos) {
    throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
  }
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    const auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  const std::string key = trim(line.substr(0, eq));
  const std::string value = trim(line.substr(eq + 1));
  for (const Entry& entry : registry()) {
    if (key == entry.key) {
      try {
        *entry.field(*this) = std::stod(value);
      } catch (const std::exception&) {
        throw ParseError("config line " + std::to_string(line_no) + ": bad number '" + value +
                         "'");
      }
      return;
    }
  }
  throw ParseError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
}

PlannerConfig PlannerConfig::load(const std::string& path) {
  PlannerConfig config;
  if (path.empty()) return config;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) config.apply_line(line, ++line_no);
  return config;
}

std::string PlannerConfig::dump() const {
  std::ostringstream os;
  os << "# planner configuration (defaults unless overridden)\n";
  PlannerConfig& self = *const_cast<PlannerConfig*>(this);
  for (const Entry& entry : registry()) {
    os << entry.key << " = " << *entry.field(self) << "\n";
  }
  return os.str();
}

}  // namespace emplan
