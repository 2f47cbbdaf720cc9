#include "emplan/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>

#include "emplan/log.hpp"
#include "emplan/poly.hpp"

namespace emplan {

namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point start) {
  return std::chrono::duration<double, std::micro>(Clock::now() - start).count();
}

// Station-frame speed and acceleration of the ego state on this lane.
void station_derivatives(const FrenetState& fs, const CartesianState& ego, const RefSample& ref,
                         double& s_dot, double& s_ddot) {
  const double one_minus = 1.0 - ref.kappa * fs.l;
  const double dtheta = std::atan2(fs.dl, one_minus);
  const double cos_d = std::cos(dtheta);
  s_dot = ego.v * cos_d / one_minus;
  const double kr_l_prime = ref.dkappa * fs.l + ref.kappa * fs.dl;
  const double dtheta_prime = one_minus / cos_d * ego.kappa - ref.kappa;
  s_ddot = (ego.a * cos_d - s_dot * s_dot * (fs.dl * dtheta_prime - kr_l_prime)) / one_minus;
}

Trajectory compose_trajectory(const PathProfile& path, const SpeedProfile& speed,
                              const ReferenceLine& ref, double start_s, double horizon,
                              double step) {
  Trajectory traj;
  const int n = int(std::round(horizon / step)) + 1;
  traj.points.reserve(n);
  const Spline& f = path.spline;
  const Spline& S = speed.spline;
  for (int i = 0; i < n; ++i) {
    const double t = i * step;
    const double s_rel = std::max(0.0, S.eval(t, 0));
    const double s_dot = std::max(0.0, S.eval(t, 1));
    const double s_ddot = S.eval(t, 2);
    const double station = std::min(start_s + s_rel, f.x_max());
    FrenetState fs;
    fs.s = std::min(station, ref.length());
    fs.l = f.eval(station, 0);
    fs.dl = f.eval(station, 1);
    fs.ddl = f.eval(station, 2);
    const CartesianState cs = ref.to_cartesian(fs, s_dot, s_ddot);
    TrajectoryPoint p;
    p.t = t;
    p.x = cs.x;
    p.y = cs.y;
    p.heading = cs.heading;
    p.kappa = cs.kappa;
    p.v = std::max(0.0, cs.v);
    p.a = cs.a;
    traj.points.push_back(p);
  }
  return traj;
}

// Worst-case ratio of body speed to station speed along the path, used to map
// a lane speed limit onto the station-speed bound.
double path_speed_factor(const Spline& f, const ReferenceLine& ref, double s0, double s1) {
  double factor = 1.0;
  for (double s = s0; s <= s1 + 1e-9; s += 5.0) {
    const double l = f.eval(std::clamp(s, f.x_min(), f.x_max()), 0);
    const double dl = f.eval(std::clamp(s, f.x_min(), f.x_max()), 1);
    const double kappa = ref.pose_at(std::min(s, ref.length())).kappa;
    const double one_minus = 1.0 - kappa * l;
    factor = std::max(factor, std::sqrt(one_minus * one_minus + dl * dl) /
                                  std::max(one_minus, 1e-3));
  }
  return factor;
}

}  // namespace

std::string to_string(LaneFailureKind kind) {
  switch (kind) {
    case LaneFailureKind::None: return "none";
    case LaneFailureKind::ProjectionFailure: return "projection-failure";
    case LaneFailureKind::AllPathsCollide: return "all-paths-collide";
    case LaneFailureKind::DegenerateTunnel: return "degenerate-tunnel";
    case LaneFailureKind::PathQpInfeasible: return "path-qp-infeasible";
    case LaneFailureKind::NoFeasibleProfile: return "no-feasible-profile";
    case LaneFailureKind::SpeedQpInfeasible: return "speed-qp-infeasible";
  }
  return "?";
}

EmPlanner::EmPlanner(PlannerConfig config) : config_(std::move(config)) {}

LaneResult EmPlanner::plan_lane(const LaneCandidate& candidate, const World& world,
                                const Trajectory* prev_trajectory, const QpSolution* path_warm,
                                const QpSolution* speed_warm) const {
  LaneResult result;
  const ReferenceLine& ref = *candidate.reference_line;
  const double horizon = config_.planner.horizon;

  FrenetState start;
  try {
    start = ref.project(world.ego);
  } catch (const Error& e) {
    result.failure = LaneFailureKind::ProjectionFailure;
    result.failure_detail = e.what();
    return result;
  }
  result.diag.start_station = start.s;

  const double span = std::min(config_.planner.plan_span, ref.length() - start.s - 2.0);
  if (span < 30.0) {
    result.failure = LaneFailureKind::ProjectionFailure;
    result.failure_detail = "insufficient reference line ahead of the ego";
    return result;
  }

  // ---- E-step 1: obstacle projection onto the station-lateral frame.
  auto t_e1 = Clock::now();
  EgoMotionEstimate motion =
      prev_trajectory && !prev_trajectory->empty()
          ? ego_motion_from_trajectory(*prev_trajectory, ref, config_.sl.dt, horizon)
          : ego_motion_synthesized(ref, start.s, world.ego.v, config_.sl.dt, horizon);
  result.diag.sl_regions =
      project_sl(world.obstacles, ref, motion, world.ego.v, world.footprint, config_.sl);
  result.diag.sl_projections = 1;
  result.diag.stage_micros["e1"] = micros_since(t_e1);

  // ---- M-step 1: DP rough path, feasible tunnel, spline QP refinement.
  auto t_m1 = Clock::now();
  const LatticeConfig lattice_cfg =
      LatticeConfig::make(world.ego.v, candidate.is_change_lane, candidate.road, world.footprint);
  Lattice lattice;
  try {
    lattice = sample_lattice(lattice_cfg, start, candidate.road, start.s + span);
  } catch (const EmptyRow& e) {
    result.failure = LaneFailureKind::AllPathsCollide;
    result.failure_detail = e.what();
    return result;
  }

  PiecewiseLinear centerline{{start.s, start.s + span}, {0.0, 0.0}};
  const DpPathResult dp =
      dp_search(lattice, result.diag.sl_regions, centerline, config_.path, world.footprint,
                candidate.road);
  if (dp.status != DpPathStatus::Ok) {
    result.failure = LaneFailureKind::AllPathsCollide;
    result.failure_detail = "all lattice paths intersect an obstacle region";
    result.diag.stage_micros["m1"] = micros_since(t_m1);
    return result;
  }
  result.diag.dp_path = dp.path;

  TunnelResult tunnel = extract_tunnel_and_decisions(dp.path, result.diag.sl_regions,
                                                     candidate.road, world.footprint,
                                                     config_.path);
  result.diag.path_tunnel = tunnel.tunnel;
  result.diag.path_decisions = tunnel.decisions;
  if (tunnel.status != TunnelStatus::Ok) {
    result.failure = LaneFailureKind::DegenerateTunnel;
    result.failure_detail = "tunnel collapsed between obstacles";
    result.diag.stage_micros["m1"] = micros_since(t_m1);
    return result;
  }

  PathQpResult path_qp = qp_path(tunnel.tunnel, dp.path, tunnel.decisions, start,
                                 world.footprint, config_.path, config_.path_qp, path_warm);
  result.diag.path_qp_iterations = path_qp.solution.iterations;
  result.diag.path_qp_solution = path_qp.solution;
  result.diag.path_msteps = 1;
  result.diag.stage_micros["m1"] = micros_since(t_m1);
  if (path_qp.status != PathQpStatus::Ok) {
    result.failure = LaneFailureKind::PathQpInfeasible;
    for (const auto tag : path_qp.violated_tags)
      result.failure_detail += to_string(tag) + " ";
    return result;
  }
  result.diag.path_profile = path_qp.profile;

  // ---- E-step 2: obstacle projection onto the station-time frame.
  auto t_e2 = Clock::now();
  std::vector<StRegion> st = project_st(world.obstacles, path_qp.profile.spline,
                                        path_qp.profile.spline.x_min(),
                                        path_qp.profile.spline.x_max(), ref, horizon,
                                        world.footprint, config_.st);
  // Speed planning works in ego-relative stations.
  for (StRegion& r : st)
    for (auto& p : r.polygon) p[1] -= start.s;
  result.diag.st_projections = 1;

  // Regulation injection.
  SpeedLimits limits = config_.limits;
  const double factor =
      path_speed_factor(path_qp.profile.spline, ref, start.s, start.s + span);
  for (const Regulation& reg : candidate.regulations) {
    if (reg.kind == RegulationKind::SpeedLimit) {
      limits.v_upper = std::min(limits.v_upper, reg.v / factor);
      limits.v_ref = std::min(limits.v_ref, limits.v_upper);
    } else if (reg.kind == RegulationKind::StopLine) {
      StRegion wall;
      wall.source_id = "__stopline";
      const double s_rel = reg.s - start.s;
      const double roof = limits.v_upper * horizon + 50.0;
      wall.polygon = {{0.0, s_rel}, {horizon, s_rel}, {horizon, roof}, {0.0, roof}};
      st.push_back(wall);
    }
  }

  // Passing-speed caps for nudged dynamic obstacles with thin clearance.
  std::vector<SpeedCap> caps;
  for (const PathDecision& dec : tunnel.decisions) {
    if (dec.kind == NudgeSide::Ignore) continue;
    double clearance = std::numeric_limits<double>::max();
    double t_first = std::numeric_limits<double>::max(), t_last = 0.0;
    bool timed = false;
    for (const SlRegion& r : result.diag.sl_regions) {
      if (r.source_id != dec.obstacle_id || !r.interaction_time) continue;
      timed = true;
      t_first = std::min(t_first, *r.interaction_time);
      t_last = std::max(t_last, *r.interaction_time);
      const Spline& f = path_qp.profile.spline;
      for (double s = std::max(r.s_min, f.x_min()); s <= std::min(r.s_max, f.x_max()) + 1e-9;
           s += 1.0) {
        const double l = f.eval(s, 0);
        const double gap = dec.kind == NudgeSide::Right
                               ? r.l_min - (l + world.footprint.half_width())
                               : (l - world.footprint.half_width()) - r.l_max;
        clearance = std::min(clearance, std::max(gap, 0.0));
      }
    }
    if (!timed || clearance >= config_.path.d_n) continue;
    SpeedCap cap;
    cap.source_id = dec.obstacle_id;
    cap.t_start = std::max(0.0, t_first - config_.passing.lead_time);
    cap.t_end = std::min(horizon, t_last + config_.passing.tail_time);
    const double ratio = config_.passing.min_ratio +
                         (1.0 - config_.passing.min_ratio) * clearance / config_.path.d_n;
    cap.v_cap = std::max(config_.passing.floor, limits.v_ref * ratio);
    caps.push_back(cap);
  }
  result.diag.caps = caps;
  result.diag.st_regions = st;
  result.diag.stage_micros["e2"] = micros_since(t_e2);

  // ---- M-step 2: DP speed profile, tunnel, spline QP refinement.
  auto t_m2 = Clock::now();
  double s_dot0, s_ddot0;
  station_derivatives(start, world.ego, ref.pose_at(start.s), s_dot0, s_ddot0);
  s_dot0 = std::clamp(s_dot0, 0.0, limits.v_upper);
  s_ddot0 = std::clamp(s_ddot0, -limits.dec_max, limits.acc_max);

  DpSpeedResult dp_speed = dp_speed_search(st, limits, config_.speed_dp, horizon, s_dot0,
                                           s_ddot0, caps);

  // KeepClear: never come to rest inside the zone; if the rough profile
  // stalls there, yield before it instead.
  for (const Regulation& reg : candidate.regulations) {
    if (reg.kind != RegulationKind::KeepClear || dp_speed.status != SpeedDpStatus::Ok) continue;
    bool stalls_inside = false;
    const auto& prof = dp_speed.profile;
    for (std::size_t i = 1; i < prof.times.size(); ++i) {
      const double s_abs = prof.stations[i] + start.s;
      const double v = (prof.stations[i] - prof.stations[i - 1]) /
                       (prof.times[i] - prof.times[i - 1]);
      const bool last = i + 1 == prof.times.size();
      if (s_abs > reg.s_min && s_abs < reg.s_max && (v < 0.5 || last)) {
        stalls_inside = stalls_inside || v < 0.5 || last;
      }
    }
    if (stalls_inside) {
      StRegion wall;
      wall.source_id = "__keepclear";
      const double s_rel = reg.s_min - start.s;
      const double roof = limits.v_upper * horizon + 50.0;
      wall.polygon = {{0.0, s_rel}, {horizon, s_rel}, {horizon, roof}, {0.0, roof}};
      st.push_back(wall);
      result.diag.st_regions = st;
      dp_speed = dp_speed_search(st, limits, config_.speed_dp, horizon, s_dot0, s_ddot0, caps);
    }
  }

  if (dp_speed.status != SpeedDpStatus::Ok) {
    result.failure = LaneFailureKind::NoFeasibleProfile;
    result.failure_detail = "speed grid fully pruned";
    result.diag.stage_micros["m2"] = micros_since(t_m2);
    return result;
  }
  result.diag.dp_speed = dp_speed.profile;
  result.diag.speed_tunnel = dp_speed.tunnel;
  result.diag.follow_buffer = dp_speed.follow_buffer;

  SpeedQpResult speed_qp = qp_speed(dp_speed.tunnel, dp_speed.profile, s_dot0, s_ddot0, limits,
                                    caps, config_.speed_qp, speed_warm);
  result.diag.speed_qp_iterations = speed_qp.solution.iterations;
  result.diag.speed_qp_solution = speed_qp.solution;
  result.diag.speed_msteps = 1;
  result.diag.stage_micros["m2"] = micros_since(t_m2);
  if (speed_qp.status != SpeedQpStatus::Ok) {
    result.failure = LaneFailureKind::SpeedQpInfeasible;
    for (const auto tag : speed_qp.violated_tags)
      result.failure_detail += to_string(tag) + " ";
    return result;
  }
  result.diag.speed_profile = speed_qp.profile;

  // ---- Composition and lane-level cost.
  result.trajectory = compose_trajectory(path_qp.profile, speed_qp.profile, ref, start.s,
                                         horizon, config_.planner.output_step);
  result.terminal_station = start.s + std::max(0.0, speed_qp.profile.spline.eval(horizon, 0));
  for (const auto& p : result.trajectory.points) result.max_speed = std::max(result.max_speed, p.v);

  TrajectoryCost& cost = result.cost;
  cost.feasible = true;
  cost.progress_term = std::max(0.0, (span - (result.terminal_station - start.s)) / span);
  cost.lane_change_penalty = candidate.is_change_lane ? config_.decider.lane_change_penalty : 0.0;
  cost.smoothness_term =
      config_.decider.w_smoothness * (path_qp.solution.objective + speed_qp.solution.objective);

  double worst_shape = 0.0;
  const double den = config_.path.d_n - config_.path.d_c;
  for (double t = 0.0; t <= horizon + 1e-9; t += 0.1) {
    const double s_rel = std::max(0.0, speed_qp.profile.spline.eval(std::min(t, horizon), 0));
    const double station = std::min(start.s + s_rel, path_qp.profile.spline.x_max());
    const double l = path_qp.profile.spline.eval(station, 0);
    const double ego_lo = station - world.footprint.rear_extent();
    const double ego_hi = station + world.footprint.front_extent();
    const double lat_lo = l - world.footprint.half_width();
    const double lat_hi = l + world.footprint.half_width();
    for (const Obstacle& obstacle : world.obstacles) {
      SlRegion box;
      box.s_min = box.l_min = std::numeric_limits<double>::max();
      box.s_max = box.l_max = std::numeric_limits<double>::lowest();
      for (const auto& c : obstacle.corners(obstacle.pose_at(t))) {
        const auto sl = ref.project_point_extended(c[0], c[1]);
        box.s_min = std::min(box.s_min, sl[0]);
        box.s_max = std::max(box.s_max, sl[0]);
        box.l_min = std::min(box.l_min, sl[1]);
        box.l_max = std::max(box.l_max, sl[1]);
      }
      const double gs = box_gap(ego_lo, ego_hi, box.s_min, box.s_max);
      const double gl = box_gap(lat_lo, lat_hi, box.l_min, box.l_max);
      const double d = std::hypot(gs, gl);
      if (d < config_.path.d_n) {
        const double q = (config_.path.d_n - std::max(d, config_.path.d_c)) / den;
        worst_shape = std::max(worst_shape, q * q);
      }
    }
  }
  cost.obstacle_proximity_term = worst_shape;
  cost.total = config_.decider.w_progress * cost.progress_term + cost.lane_change_penalty +
               cost.smoothness_term + config_.decider.w_obstacle * cost.obstacle_proximity_term;
  result.ok = true;
  return result;
}

int decide_lane(const std::vector<std::pair<std::string, LaneResult>>& lanes,
                const std::vector<LaneCandidate>& candidates, const DeciderParams& params) {
  int current = -1;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (candidates[i].is_current) current = int(i);

  // Safety rules dominate: failed lanes and regulation violators are out.
  std::vector<int> admissible;
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    const LaneResult& r = lanes[i].second;
    if (!r.ok) continue;
    bool violates = false;
    for (const Regulation& reg : candidates[i].regulations) {
      if (reg.kind == RegulationKind::StopLine && r.terminal_station > reg.s + 1e-6)
        violates = true;
      if (reg.kind == RegulationKind::SpeedLimit && r.max_speed > reg.v + 1e-6) violates = true;
    }
    if (!violates) admissible.push_back(int(i));
  }
  if (admissible.empty()) return -1;

  int best = admissible.front();
  for (int idx : admissible)
    if (lanes[idx].second.cost.total < lanes[best].second.cost.total) best = idx;

  // Hysteresis: keep the current lane unless the challenger is clearly better.
  if (current >= 0 &&
      std::find(admissible.begin(), admissible.end(), current) != admissible.end() &&
      best != current) {
    if (!(lanes[best].second.cost.total <
          params.hysteresis * lanes[current].second.cost.total)) {
      best = current;
    }
  }
  return best;
}

Trajectory EmPlanner::fallback_stop(const World& world, const Trajectory* prev) const {
  // Maximal-comfort stop along the previous path (straight ahead if none).
  Trajectory out;
  const double horizon = config_.planner.horizon;
  const double step = config_.planner.output_step;
  const double decel = config_.planner.fallback_decel;
  const double v0 = std::max(0.0, world.ego.v);

  std::vector<double> arc = {0.0};
  std::vector<TrajectoryPoint> shape;
  if (prev && prev->points.size() >= 2) {
    shape = prev->points;
    for (std::size_t i = 1; i < shape.size(); ++i)
      arc.push_back(arc[i - 1] +
                    std::hypot(shape[i].x - shape[i - 1].x, shape[i].y - shape[i - 1].y));
  } else {
    for (int i = 0; i <= 1; ++i) {
      TrajectoryPoint p;
      p.x = world.ego.x + i * 200.0 * std::cos(world.ego.heading);
      p.y = world.ego.y + i * 200.0 * std::sin(world.ego.heading);
      p.heading = world.ego.heading;
      shape.push_back(p);
    }
    arc = {0.0, 200.0};
  }

  const int n = int(std::round(horizon / step)) + 1;
  for (int i = 0; i < n; ++i) {
    const double t = i * step;
    const double v = std::max(0.0, v0 - decel * t);
    const double s = v0 * t - 0.5 * decel * t * t;
    const double dist = (v > 0.0) ? s : v0 * v0 / (2.0 * decel);
    // Interpolate the shape at arc length dist.
    std::size_t k = 1;
    while (k + 1 < arc.size() && arc[k] < dist) ++k;
    const double seg = std::max(arc[k] - arc[k - 1], 1e-9);
    const double w = std::clamp((dist - arc[k - 1]) / seg, 0.0, 1.0);
    TrajectoryPoint p;
    p.t = t;
    p.x = shape[k - 1].x + w * (shape[k].x - shape[k - 1].x);
    p.y = shape[k - 1].y + w * (shape[k].y - shape[k - 1].y);
    p.heading = shape[k - 1].heading + w * normalize_angle(shape[k].heading - shape[k - 1].heading);
    p.kappa = shape[k - 1].kappa + w * (shape[k].kappa - shape[k - 1].kappa);
    p.v = v;
    p.a = (v > 0.0) ? -decel : 0.0;
    out.points.push_back(p);
  }
  return out;
}

CycleResult EmPlanner::plan_cycle(const std::vector<LaneCandidate>& candidates,
                                  const World& world, const Trajectory* prev_trajectory) {
  CycleResult cycle;

  // Snapshot warm starts before the parallel section; the caches are written
  // back only after all lanes join.
  std::vector<const QpSolution*> path_warm(candidates.size(), nullptr);
  std::vector<const QpSolution*> speed_warm(candidates.size(), nullptr);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (auto it = path_warm_.find(candidates[i].lane_id); it != path_warm_.end())
      path_warm[i] = &it->second;
    if (auto it = speed_warm_.find(candidates[i].lane_id); it != speed_warm_.end())
      speed_warm[i] = &it->second;
  }

  std::vector<std::future<LaneResult>> futures;
  futures.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    futures.push_back(std::async(std::launch::async, [&, i] {
      return plan_lane(candidates[i], world, prev_trajectory, path_warm[i], speed_warm[i]);
    }));
  }
  for (std::size_t i = 0; i < candidates.size(); ++i)
    cycle.per_lane.emplace_back(candidates[i].lane_id, futures[i].get());

  for (const auto& [lane_id, lane] : cycle.per_lane) {
    if (lane.diag.path_qp_solution) path_warm_[lane_id] = *lane.diag.path_qp_solution;
    if (lane.diag.speed_qp_solution) speed_warm_[lane_id] = *lane.diag.speed_qp_solution;
  }

  auto t_decide = Clock::now();
  const int winner = decide_lane(cycle.per_lane, candidates, config_.decider);
  cycle.decider_micros = micros_since(t_decide);

  if (winner < 0) {
    log::warn("plan_cycle: all lanes failed, emitting fallback stop");
    cycle.fallback = true;
    cycle.best = fallback_stop(world, prev_trajectory);
    cycle.chosen_lane = "";
    return cycle;
  }
  cycle.best = cycle.per_lane[winner].second.trajectory;
  cycle.chosen_lane = cycle.per_lane[winner].first;
  return cycle;
}

}  // namespace emplan
