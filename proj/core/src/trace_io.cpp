#include "emplan/trace_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace emplan {

using nlohmann::json;
namespace fs = std::filesystem;

OutputFormats OutputFormats::parse(const std::string& list) {
  OutputFormats f{false, false, false};
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "json") {
      f.json = true;
    } else if (item == "csv") {
      f.csv = true;
    } else if (item == "svg") {
      f.svg = true;
    } else if (!item.empty()) {
      throw ParseError("unknown output format '" + item + "'");
    }
  }
  return f;
}

namespace {

json region_json(const SlRegion& r) {
  json j{{"source", r.source_id},
         {"s_min", r.s_min},
         {"s_max", r.s_max},
         {"l_min", r.l_min},
         {"l_max", r.l_max}};
  if (r.interaction_time) j["t"] = *r.interaction_time;
  return j;
}

json lane_json(const LaneResult& lane) {
  json j;
  j["ok"] = lane.ok;
  j["failure"] = to_string(lane.failure);
  if (!lane.failure_detail.empty()) j["failure_detail"] = lane.failure_detail;
  j["cost"] = {{"total", lane.cost.total},
               {"progress", lane.cost.progress_term},
               {"lane_change", lane.cost.lane_change_penalty},
               {"smoothness", lane.cost.smoothness_term},
               {"obstacle", lane.cost.obstacle_proximity_term},
               {"feasible", lane.cost.feasible}};
  j["start_station"] = lane.diag.start_station;
  j["qp_iterations"] = {{"path", lane.diag.path_qp_iterations},
                        {"speed", lane.diag.speed_qp_iterations}};

  j["sl_regions"] = json::array();
  for (const auto& r : lane.diag.sl_regions) j["sl_regions"].push_back(region_json(r));
  j["st_regions"] = json::array();
  for (const auto& r : lane.diag.st_regions) {
    json poly = json::array();
    for (const auto& p : r.polygon) poly.push_back({p[0], p[1]});
    j["st_regions"].push_back({{"source", r.source_id}, {"polygon", poly}});
  }

  if (lane.diag.dp_path) {
    json nodes = json::array();
    for (const auto& n : lane.diag.dp_path->nodes) nodes.push_back({n.s, n.l});
    j["dp_path"] = {{"nodes", nodes}, {"cost", lane.diag.dp_path->total_cost}};
  }
  if (lane.diag.path_tunnel) {
    j["path_tunnel"] = {{"stations", lane.diag.path_tunnel->stations},
                        {"l_low", lane.diag.path_tunnel->l_low},
                        {"l_high", lane.diag.path_tunnel->l_high}};
  }
  json decisions = json::array();
  for (const auto& d : lane.diag.path_decisions) {
    const char* side = d.kind == NudgeSide::Left    ? "nudge_left"
                       : d.kind == NudgeSide::Right ? "nudge_right"
                                                    : "ignore";
    decisions.push_back({{"obstacle", d.obstacle_id}, {"decision", side}});
  }
  j["path_decisions"] = decisions;

  if (lane.diag.dp_speed) {
    j["dp_speed"] = {{"times", lane.diag.dp_speed->times},
                     {"stations", lane.diag.dp_speed->stations}};
    json sd = json::array();
    for (const auto& d : lane.diag.dp_speed->decisions) {
      const char* kind = d.kind == SpeedDecisionKind::Yield      ? "yield"
                         : d.kind == SpeedDecisionKind::Overtake ? "overtake"
                         : d.kind == SpeedDecisionKind::Follow   ? "follow"
                                                                 : "stop";
      sd.push_back({{"obstacle", d.source_id}, {"decision", kind}});
    }
    j["speed_decisions"] = sd;
  }
  if (lane.diag.speed_tunnel) {
    j["speed_tunnel"] = {{"times", lane.diag.speed_tunnel->times},
                         {"s_low", lane.diag.speed_tunnel->s_low},
                         {"s_high", lane.diag.speed_tunnel->s_high}};
  }
  if (!lane.diag.caps.empty()) {
    json caps = json::array();
    for (const auto& c : lane.diag.caps)
      caps.push_back({{"obstacle", c.source_id},
                      {"t_start", c.t_start},
                      {"t_end", c.t_end},
                      {"v_cap", c.v_cap}});
    j["passing_caps"] = caps;
  }
  return j;
}

// Minimal SVG plotting: world rectangles mapped into a fixed canvas.
class SvgCanvas {
 public:
  SvgCanvas(double x0, double x1, double y0, double y1, int width, int height)
      : x0_(x0), x1_(x1), y0_(y0), y1_(y1), w_(width), h_(height) {
    os_ << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w_ << "' height='" << h_
        << "' viewBox='0 0 " << w_ << " " << h_ << "'>\n";
    os_ << "<rect width='" << w_ << "' height='" << h_ << "' fill='white'/>\n";
  }

  void polyline(const std::vector<std::array<double, 2>>& pts, const std::string& color,
                double stroke = 1.5) {
    if (pts.size() < 2) return;
    os_ << "<polyline fill='none' stroke='" << color << "' stroke-width='" << stroke
        << "' points='";
    for (const auto& p : pts) os_ << px(p[0]) << "," << py(p[1]) << " ";
    os_ << "'/>\n";
  }

  void polygon(const std::vector<std::array<double, 2>>& pts, const std::string& fill) {
    if (pts.size() < 3) return;
    os_ << "<polygon fill='" << fill << "' fill-opacity='0.4' stroke='none' points='";
    for (const auto& p : pts) os_ << px(p[0]) << "," << py(p[1]) << " ";
    os_ << "'/>\n";
  }

  void text(double x, double y, const std::string& body) {
    os_ << "<text x='" << px(x) << "' y='" << py(y) << "' font-size='11'>" << body
        << "</text>\n";
  }

  std::string finish() {
    os_ << "</svg>\n";
    return os_.str();
  }

 private:
  double px(double x) const { return (x - x0_) / (x1_ - x0_) * (w_ - 20) + 10; }
  double py(double y) const { return h_ - ((y - y0_) / (y1_ - y0_) * (h_ - 20) + 10); }

  double x0_, x1_, y0_, y1_;
  int w_, h_;
  std::ostringstream os_;
};

void write_file(const fs::path& path, const std::string& body,
                std::vector<std::string>& written) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << body;
  written.push_back(path.filename().string());
}

const LaneResult* chosen_lane(const TraceRecord& record) {
  for (const auto& [id, lane] : record.per_lane) {
    if (id == record.chosen_lane) return &lane;
  }
  return nullptr;
}

std::string sl_svg(const TraceRecord& record, const LaneResult& lane) {
  const auto& diag = lane.diag;
  double s0 = diag.start_station, s1 = s0 + 100.0;
  if (diag.path_tunnel && !diag.path_tunnel->stations.empty())
    s1 = diag.path_tunnel->stations.back();
  SvgCanvas canvas(s0, s1, -6.0, 6.0, 900, 300);
  for (const auto& r : diag.sl_regions) {
    canvas.polygon({{r.s_min, r.l_min}, {r.s_max, r.l_min}, {r.s_max, r.l_max}, {r.s_min, r.l_max}},
                   "crimson");
  }
  if (diag.path_tunnel) {
    std::vector<std::array<double, 2>> lo, hi;
    for (std::size_t i = 0; i < diag.path_tunnel->stations.size(); ++i) {
      lo.push_back({diag.path_tunnel->stations[i], diag.path_tunnel->l_low[i]});
      hi.push_back({diag.path_tunnel->stations[i], diag.path_tunnel->l_high[i]});
    }
    canvas.polyline(lo, "gray", 1.0);
    canvas.polyline(hi, "gray", 1.0);
  }
  if (diag.dp_path) {
    std::vector<std::array<double, 2>> pts;
    for (double s = diag.dp_path->s_begin(); s <= diag.dp_path->s_end(); s += 1.0)
      pts.push_back({s, diag.dp_path->eval(s)});
    canvas.polyline(pts, "orange", 1.0);
  }
  if (diag.path_profile) {
    const Spline& f = diag.path_profile->spline;
    std::vector<std::array<double, 2>> pts;
    for (double s = f.x_min(); s <= f.x_max(); s += 1.0) pts.push_back({s, f.eval(s)});
    canvas.polyline(pts, "royalblue", 2.0);
  }
  canvas.text(s0 + 2.0, 5.2, "SL cycle " + std::to_string(record.cycle));
  return canvas.finish();
}

std::string st_svg(const TraceRecord& record, const LaneResult& lane, double horizon) {
  const auto& diag = lane.diag;
  double s_max = 100.0;
  if (diag.speed_tunnel && !diag.speed_tunnel->s_high.empty())
    s_max = *std::max_element(diag.speed_tunnel->s_high.begin(), diag.speed_tunnel->s_high.end());
  SvgCanvas canvas(0.0, horizon, 0.0, std::max(50.0, std::min(s_max, 150.0)), 600, 400);
  for (const auto& r : diag.st_regions) canvas.polygon(r.polygon, "crimson");
  if (diag.dp_speed) {
    std::vector<std::array<double, 2>> pts;
    for (std::size_t i = 0; i < diag.dp_speed->times.size(); ++i)
      pts.push_back({diag.dp_speed->times[i], diag.dp_speed->stations[i]});
    canvas.polyline(pts, "orange", 1.0);
  }
  if (diag.speed_profile) {
    const Spline& S = diag.speed_profile->spline;
    std::vector<std::array<double, 2>> pts;
    for (double t = S.x_min(); t <= S.x_max(); t += 0.1) pts.push_back({t, S.eval(t)});
    canvas.polyline(pts, "royalblue", 2.0);
  }
  canvas.text(0.3, std::max(50.0, std::min(s_max, 150.0)) * 0.95,
              "ST cycle " + std::to_string(record.cycle));
  return canvas.finish();
}

std::string xy_svg(const TraceRecord& record, const Scenario& scenario) {
  double x0 = 1e18, x1 = -1e18, y0 = 1e18, y1 = -1e18;
  for (const auto& lane : scenario.lanes) {
    for (const auto& p : lane.centerline) {
      x0 = std::min(x0, p[0]);
      x1 = std::max(x1, p[0]);
      y0 = std::min(y0, p[1] - 6.0);
      y1 = std::max(y1, p[1] + 6.0);
    }
  }
  SvgCanvas canvas(x0, x1, y0, y1, 1000, 260);
  for (const auto& lane : scenario.lanes) {
    std::vector<std::array<double, 2>> pts(lane.centerline.begin(), lane.centerline.end());
    canvas.polyline(pts, "lightgray", 1.0);
  }
  for (const auto& ob : scenario.obstacles) {
    Obstacle tmp = ob;
    const auto pose = tmp.pose_at(record.t_abs);
    const auto cs = tmp.corners(pose);
    canvas.polygon({cs[0], cs[1], cs[2], cs[3]}, "crimson");
  }
  std::vector<std::array<double, 2>> traj;
  for (const auto& p : record.trajectory.points) traj.push_back({p.x, p.y});
  canvas.polyline(traj, "royalblue", 2.0);
  canvas.text(x0 + 2.0, y1 - 1.0, "XY cycle " + std::to_string(record.cycle));
  return canvas.finish();
}

}  // namespace

std::vector<std::string> emit_outputs(const Trace& trace, const Scenario& scenario,
                                      const std::string& out_dir, const OutputFormats& formats) {
  std::vector<std::string> written;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

  if (formats.json) {
    json j;
    j["scenario"] = json::parse(serialize_scenario(scenario));
    j["cycles"] = json::array();
    for (const TraceRecord& record : trace.records) {
      json jr;
      jr["cycle"] = record.cycle;
      jr["t_abs"] = record.t_abs;
      jr["ego"] = {{"x", record.ego.x},
                   {"y", record.ego.y},
                   {"heading", record.ego.heading},
                   {"v", record.ego.v},
                   {"a", record.ego.a}};
      jr["chosen_lane"] = record.chosen_lane;
      jr["fallback"] = record.fallback;
      json pts = json::array();
      for (const auto& p : record.trajectory.points)
        pts.push_back({p.t, p.x, p.y, p.heading, p.kappa, p.v, p.a});
      jr["trajectory"] = pts;
      jr["lanes"] = json::object();
      for (const auto& [id, lane] : record.per_lane) jr["lanes"][id] = lane_json(lane);
      j["cycles"].push_back(jr);
    }
    write_file(fs::path(out_dir) / "trace.json", j.dump(1), written);

    // Wall-clock timings are run-dependent, so they live outside trace.json.
    std::ostringstream t;
    t << "cycle,lane,stage,micros\n";
    for (const TraceRecord& record : trace.records) {
      for (const auto& [id, lane] : record.per_lane) {
        for (const auto& [stage, micros] : lane.diag.stage_micros)
          t << record.cycle << "," << id << "," << stage << "," << micros << "\n";
      }
      t << record.cycle << ",-,decider," << record.decider_micros << "\n";
    }
    write_file(fs::path(out_dir) / "timings.csv", t.str(), written);
  }

  if (formats.csv) {
    std::ostringstream csv;
    csv << "cycle,t,x,y,v,a\n";
    csv.precision(9);
    for (const TraceRecord& record : trace.records) {
      for (const auto& p : record.trajectory.points) {
        csv << record.cycle << "," << p.t << "," << p.x << "," << p.y << "," << p.v << ","
            << p.a << "\n";
      }
    }
    write_file(fs::path(out_dir) / "trajectory.csv", csv.str(), written);
  }

  if (formats.svg) {
    for (const TraceRecord& record : trace.records) {
      const LaneResult* lane = chosen_lane(record);
      if (lane) {
        write_file(fs::path(out_dir) / ("sl_cycle_" + std::to_string(record.cycle) + ".svg"),
                   sl_svg(record, *lane), written);
        write_file(fs::path(out_dir) / ("st_cycle_" + std::to_string(record.cycle) + ".svg"),
                   st_svg(record, *lane, 8.0), written);
      }
      write_file(fs::path(out_dir) / ("xy_cycle_" + std::to_string(record.cycle) + ".svg"),
                 xy_svg(record, scenario), written);
    }
  }
  return written;
}

}  // namespace emplan
