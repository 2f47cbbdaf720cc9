#include "emplan/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "emplan/log.hpp"

namespace emplan {

World world_at(const Scenario& scenario, double t_abs, const CartesianState& ego,
               double horizon) {
  World world;
  world.ego = ego;
  world.footprint = scenario.footprint;
  for (const Obstacle& src : scenario.obstacles) {
    Obstacle ob = src;
    ob.trajectory.clear();
    if (src.kind == Obstacle::Kind::Static) {
      ob.trajectory = src.trajectory;
    } else {
      for (double tau = 0.0; tau <= horizon + 1e-9; tau += 0.1) {
        ObstaclePose p = src.pose_at(t_abs + tau);
        p.t = tau;
        ob.trajectory.push_back(p);
      }
      const ObstaclePose a = src.pose_at(t_abs);
      const ObstaclePose b = src.pose_at(t_abs + 0.1);
      ob.speed = std::hypot(b.x - a.x, b.y - a.y) / 0.1;
    }
    world.obstacles.push_back(std::move(ob));
  }
  return world;
}

Trace run_closed_loop(const Scenario& scenario, const PlannerConfig& config) {
  Trace trace;
  EmPlanner planner(config);
  std::vector<LaneCandidate> candidates = scenario.candidates();

  CartesianState ego = scenario.ego;
  Trajectory prev;
  bool has_prev = false;
  std::string current_lane;
  for (const auto& c : candidates)
    if (c.is_current) current_lane = c.lane_id;

  for (int cycle = 0; cycle < scenario.sim.cycles; ++cycle) {
    const double t_abs = cycle * scenario.sim.cycle_period;
    for (auto& c : candidates) c.is_current = (c.lane_id == current_lane);

    const World world = world_at(scenario, t_abs, ego, config.planner.horizon);
    CycleResult result = planner.plan_cycle(candidates, world, has_prev ? &prev : nullptr);

    TraceRecord record;
    record.cycle = cycle;
    record.t_abs = t_abs;
    record.ego = ego;
    record.chosen_lane = result.chosen_lane;
    record.fallback = result.fallback;
    record.trajectory = result.best;
    record.per_lane = std::move(result.per_lane);
    record.decider_micros = result.decider_micros;
    trace.records.push_back(std::move(record));

    // Exact handoff: the next ego state is the trajectory at one period.
    ego = result.best.state_at(scenario.sim.cycle_period);

    // Thread the executed trajectory into the next cycle, re-based in time.
    Trajectory next_prev;
    for (const TrajectoryPoint& p : result.best.points) {
      if (p.t < scenario.sim.cycle_period - 1e-9) continue;
      TrajectoryPoint q = p;
      q.t = p.t - scenario.sim.cycle_period;
      next_prev.points.push_back(q);
    }
    prev = std::move(next_prev);
    has_prev = !prev.points.empty();
    if (!result.fallback) current_lane = result.chosen_lane;
  }
  return trace;
}

std::vector<CaseStudyCycle> iterate_case_study(const Scenario& scenario,
                                               const PlannerConfig& config, int cycles) {
  Scenario sc = scenario;
  sc.sim.cycles = cycles;
  Trace trace = run_closed_loop(sc, config);

  std::vector<CaseStudyCycle> out;
  for (const TraceRecord& record : trace.records) {
    const LaneResult* lane = nullptr;
    for (const auto& [id, r] : record.per_lane) {
      if (id == record.chosen_lane) lane = &r;
    }
    if (!lane || !lane->diag.path_profile || !lane->diag.speed_profile) continue;
    CaseStudyCycle cs{*lane->diag.path_profile, *lane->diag.speed_profile, 0.0, 0.0, 0.0};

    // Nudge station: the predicted meeting point, i.e. the center of the
    // time-stamped interaction regions. Falls back to the peak lateral
    // deviation when nothing was projected.
    const Spline& f = cs.path.spline;
    double sum_center = 0.0;
    int timed = 0;
    for (const SlRegion& r : lane->diag.sl_regions) {
      if (!r.interaction_time) continue;
      sum_center += 0.5 * (r.s_min + r.s_max);
      ++timed;
    }
    if (timed > 0) {
      cs.nudge_station = sum_center / timed;
    } else {
      double peak = 0.0;
      for (double s = f.x_min(); s <= f.x_max() + 1e-9; s += 0.25) {
        const double l = std::abs(f.eval(s, 0));
        if (l > peak) {
          peak = l;
          cs.nudge_station = s;
        }
      }
    }
    const Spline& S = cs.speed.spline;
    double vmin = std::numeric_limits<double>::max();
    for (double t = S.x_min(); t <= S.x_max() + 1e-9; t += 0.05)
      vmin = std::min(vmin, S.eval(t, 1));
    cs.min_speed = vmin;

    double sum = 0.0;
    int n = 0;
    for (const SlRegion& r : lane->diag.sl_regions) {
      if (!r.interaction_time) continue;
      sum += 0.5 * (r.s_min + r.s_max);
      ++n;
    }
    cs.interaction_station = n > 0 ? sum / n : 0.0;
    out.push_back(std::move(cs));
  }
  return out;
}

}  // namespace emplan
