#include "emplan/speed_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "emplan/log.hpp"
#include "emplan/speed_grid.hpp"

namespace emplan {

double DpSpeedProfile::station_at(double t) const {
  if (times.empty()) return 0.0;
  if (t <= times.front()) return stations.front();
  if (t >= times.back()) return stations.back();
  auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t i = std::size_t(it - times.begin());
  const double w = (t - times[i - 1]) / (times[i] - times[i - 1]);
  return stations[i - 1] + w * (stations[i] - stations[i - 1]);
}

SpeedGridModel::SpeedGridModel(const std::vector<StRegion>& regions, const SpeedLimits& limits,
                               const SpeedDpParams& params, double horizon, double init_v,
                               double init_a, const std::vector<SpeedCap>& caps)
    : dt(params.dt), ds(params.ds), limits_(limits), params_(params) {
  steps = std::max(1, int(std::round(horizon / dt)));
  d_max = std::max(1, int(std::floor(limits.v_upper * dt / ds + 1e-9)));
  a_min_q = -std::max(1, int(std::floor(limits.dec_max * dt * dt / ds + 1e-9)));
  a_max_q = std::max(1, int(std::floor(limits.acc_max * dt * dt / ds + 1e-9)));
  // Jerk can only be resolved down to one grid quantum per step.
  jerk_q = std::max(1, int(std::floor(limits.jerk_max * dt * dt * dt / ds + 1e-9)));
  cells = steps * d_max + 1;

  init_d = std::clamp(int(std::round(init_v * dt / ds)), 0, d_max);
  init_a_cells = std::clamp(int(std::round(init_a * dt * dt / ds)), a_min_q, a_max_q);

  follow_buffer = std::max(params.follow_buffer_floor, params.follow_headway * init_v);

  slices.resize(steps + 1);
  mid_slices.resize(steps);
  walls.resize(steps + 1);
  for (int i = 0; i <= steps; ++i) {
    const double t = i * dt;
    for (const StRegion& r : regions) {
      if (auto s = r.slice(t)) slices[i].push_back(*s);
    }
    if (i < steps) {
      const double tm = (i + 0.5) * dt;
      for (const StRegion& r : regions) {
        if (auto s = r.slice(tm)) mid_slices[i].push_back(*s);
      }
    }
    // Static or receding lower edges are things the ego may have to stop
    // for; oncoming edges sweep past on their own and are handled by the
    // interior pruning alone.
    for (const StRegion& r : regions) {
      const auto now = r.slice(t);
      if (!now) continue;
      const auto first = r.slice(r.t_min());
      const auto last = r.slice(std::min(r.t_max(), horizon));
      if (first && last && (*last)[0] >= (*first)[0] - 1.0) walls[i].push_back((*now)[0]);
    }
  }

  // Station distance from each grid node to the nearest region edge at the
  // same time, for the proximity cost.
  proximity.assign(steps + 1, std::vector<double>(cells, 0.0));
  for (int i = 0; i <= steps; ++i) {
    for (int c = 0; c < cells; ++c) {
      const double s = c * ds;
      double dmin = std::numeric_limits<double>::max();
      for (const auto& sl : slices[i]) {
        if (s >= sl[0] && s <= sl[1]) {
          dmin = 0.0;
          break;
        }
        dmin = std::min(dmin, std::min(std::abs(s - sl[0]), std::abs(s - sl[1])));
      }
      double pen = 0.0;
      if (dmin < params.obstacle_range)
        pen += 1.0 / std::max(dmin, 0.2) - 1.0 / params.obstacle_range;
      if (dmin < follow_buffer) {
        const double q = (follow_buffer - dmin) / follow_buffer;
        pen += 8.0 * q * q;
      }
      proximity[i][c] = pen;
    }
  }

  // Per-step velocity ceiling: hard limit, cap windows and a braking-reach
  // guard so a cap can never demand an unreachable speed.
  d_cap.assign(steps, d_max);
  for (int i = 0; i < steps; ++i) {
    const double t0 = i * dt, t1 = (i + 1) * dt;
    double v_bound = limits.v_upper;
    for (const SpeedCap& cap : caps) {
      if (cap.t_end < t0 || cap.t_start > t1) continue;
      v_bound = std::min(v_bound, cap_bound(t0, cap.v_cap, init_v, limits) + params.cap_slack);
    }
    d_cap[i] = std::clamp(int(std::floor(v_bound * dt / ds + 1e-9)), 0, d_max);
  }

  vref_step.assign(steps, limits.v_ref);
  for (int i = 0; i < steps; ++i) {
    const double t0 = i * dt, t1 = (i + 1) * dt;
    for (const SpeedCap& cap : caps) {
      if (cap.t_end < t0 || cap.t_start > t1) continue;
      vref_step[i] = std::min(vref_step[i], cap.v_cap);
    }
  }

  // Stop-aware reference: approaching a wall the ego should track a comfort
  // stop curve, not the cruise speed, otherwise creeping at the wall beats
  // stopping under the below-reference penalty.
  vref_node.assign(steps + 1, std::vector<double>(cells, limits.v_ref));
  const double comfort_dec = 0.5 * limits.dec_max;
  for (int i = 0; i <= steps; ++i) {
    for (int c = 0; c < cells; ++c) {
      double ref = limits.v_ref;
      const double s = c * ds;
      for (double wall : walls[i]) {
        const double gap = wall - s - follow_buffer;
        if (gap < 0.0) {
          ref = 0.0;
        } else {
          ref = std::min(ref, std::sqrt(2.0 * comfort_dec * gap));
        }
      }
      vref_node[i][c] = ref;
    }
  }
}

bool SpeedGridModel::node_blocked(int layer, int cell) const {
  const double s = cell * ds;
  for (const auto& sl : slices[layer]) {
    if (s > sl[0] + 1e-9 && s < sl[1] - 1e-9) return true;
  }
  return false;
}

bool SpeedGridModel::mid_blocked(int gap, double s) const {
  for (const auto& sl : mid_slices[gap]) {
    if (s > sl[0] + 1e-9 && s < sl[1] - 1e-9) return true;
  }
  return false;
}

bool SpeedGridModel::can_stop_before_walls(int layer, int cell, int d) const {
  const double s = cell * ds;
  const double v = d * ds / dt;
  for (double wall : walls[layer]) {
    const double gap = wall - s;
    if (gap < -1e-9) continue;  // already past it (overtaken side)
    if (v * v > 2.0 * limits_.dec_max * gap + 1e-9) return false;
  }
  return true;
}

double SpeedGridModel::reachable_speed_floor(double t, double init_v,
                                             const SpeedLimits& limits) {
  const double ramp = limits.dec_max / std::max(limits.jerk_max, 1e-6);
  double drop;
  if (t <= ramp) {
    drop = 0.5 * limits.jerk_max * t * t;
  } else {
    drop = limits.dec_max * t - 0.5 * limits.dec_max * ramp;
  }
  return std::max(0.0, init_v - drop);
}

double SpeedGridModel::cap_bound(double t, double cap_v, double init_v,
                                 const SpeedLimits& limits) {
  const double shifted = std::max(t - 0.4, 0.0);
  return std::max(cap_v, reachable_speed_floor(shifted, init_v, limits) + 0.3);
}

bool SpeedGridModel::step_valid(int gap, int cell_from, int d_from, int a_from,
                                int d_next) const {
  if (d_next < 0 || d_next > d_cap[gap]) return false;
  const int a_next = d_next - d_from;
  if (a_next < a_min_q || a_next > a_max_q) return false;
  if (std::abs(a_next - a_from) > jerk_q) return false;
  const int cell_next = cell_from + d_next;
  if (cell_next >= cells) return false;
  if (node_blocked(gap + 1, cell_next)) return false;
  if (mid_blocked(gap, (cell_from + 0.5 * d_next) * ds)) return false;
  if (!can_stop_before_walls(gap + 1, cell_next, d_next)) return false;
  return true;
}

double SpeedGridModel::step_cost(int gap, int d_from, int a_from, int d_next,
                                 int cell_next) const {
  const int a_next = d_next - d_from;
  const double v = d_next * ds / dt;
  const double acc = a_next * ds / (dt * dt);
  const double jerk = (a_next - a_from) * ds / (dt * dt * dt);
  const double ref = std::min(vref_step[gap], vref_node[gap + 1][cell_next]);
  const double dv = v - ref;
  const double keep = (dv < 0.0) ? dv * dv : params_.above_ref_ratio * dv * dv;
  return params_.w_ref * keep * dt + params_.w_acc * acc * acc * dt +
         params_.w_jerk * jerk * jerk * dt +
         params_.w_obstacle * proximity[gap + 1][cell_next] * dt;
}

namespace {

struct StateIndexer {
  int d_span, a_span, a_min;
  int operator()(int cell, int d, int a) const {
    return (cell * d_span + d) * a_span + (a - a_min);
  }
};

}  // namespace

DpSpeedResult dp_speed_search(const std::vector<StRegion>& regions, const SpeedLimits& limits,
                              const SpeedDpParams& params, double horizon, double init_v,
                              double init_a, const std::vector<SpeedCap>& caps) {
  SpeedGridModel model(regions, limits, params, horizon, init_v, init_a, caps);
  DpSpeedResult result;
  result.follow_buffer = model.follow_buffer;

  const int layers = model.steps + 1;
  const StateIndexer idx{model.d_max + 1, model.a_max_q - model.a_min_q + 1, model.a_min_q};
  const int layer_size = model.cells * idx.d_span * idx.a_span;
  constexpr double kInf = std::numeric_limits<double>::max();

  std::vector<std::vector<double>> cost(layers, std::vector<double>(layer_size, kInf));
  std::vector<std::vector<int>> parent(layers, std::vector<int>(layer_size, -1));

  if (!model.node_blocked(0, 0)) {
    cost[0][idx(0, model.init_d, model.init_a_cells)] = 0.0;
  }

  for (int i = 0; i < model.steps; ++i) {
    if (log::threshold() <= log::Level::Debug) {
      long alive = 0;
      for (const double c : cost[i]) alive += c < kInf ? 1 : 0;
      log::debug("dp_speed layer ", i, ": ", alive, " reachable states, d_cap ",
                 model.d_cap[i]);
    }
    for (int cell = 0; cell < model.cells; ++cell) {
      for (int d = 0; d <= model.d_max; ++d) {
        for (int a = model.a_min_q; a <= model.a_max_q; ++a) {
          const int from = idx(cell, d, a);
          const double base = cost[i][from];
          if (base >= kInf) continue;
          const int lo = std::max(0, std::max(d + model.a_min_q, d + a - model.jerk_q));
          const int hi = std::min(model.d_cap[i], std::min(d + model.a_max_q, d + a + model.jerk_q));
          for (int dn = lo; dn <= hi; ++dn) {
            if (!model.step_valid(i, cell, d, a, dn)) continue;
            const int cn = cell + dn;
            const double total = base + model.step_cost(i, d, a, dn, cn);
            const int to = idx(cn, dn, dn - d);
            if (total < cost[i + 1][to]) {
              cost[i + 1][to] = total;
              parent[i + 1][to] = from;
            }
          }
        }
      }
    }
  }

  // Terminal: lowest cost, ties broken toward more progress then more speed.
  int best = -1;
  double best_cost = kInf;
  for (int cell = model.cells - 1; cell >= 0; --cell) {
    for (int d = model.d_max; d >= 0; --d) {
      for (int a = model.a_max_q; a >= model.a_min_q; --a) {
        const int id = idx(cell, d, a);
        if (cost[layers - 1][id] < best_cost) {
          best_cost = cost[layers - 1][id];
          best = id;
        }
      }
    }
  }
  if (best < 0) {
    result.status = SpeedDpStatus::NoFeasibleProfile;
    return result;
  }

  std::vector<int> chain(layers);
  chain[layers - 1] = best;
  for (int i = layers - 1; i > 0; --i) chain[i - 1] = parent[i][chain[i]];

  result.profile.times.resize(layers);
  result.profile.stations.resize(layers);
  for (int i = 0; i < layers; ++i) {
    result.profile.times[i] = i * model.dt;
    const int cell = chain[i] / (idx.d_span * idx.a_span);
    result.profile.stations[i] = cell * model.ds;
  }

  // Per-region decisions from which side the profile passed.
  const int last_d = (chain[layers - 1] / idx.a_span) % idx.d_span;
  for (int ri = 0; ri < int(regions.size()); ++ri) {
    const StRegion& r = regions[ri];
    bool any = false, below = true, above = true;
    double last_overlap_t = 0.0;
    for (int i = 0; i < layers; ++i) {
      const double t = i * model.dt;
      auto sl = r.slice(t);
      if (!sl) continue;
      any = true;
      last_overlap_t = t;
      const double s = result.profile.stations[i];
      if (s > (*sl)[0] + 1e-9) below = false;
      if (s < (*sl)[1] - 1e-9) above = false;
    }
    if (!any) continue;
    SpeedDecision dec;
    dec.source_id = r.source_id;
    dec.region_index = ri;
    if (above && !below) {
      dec.kind = SpeedDecisionKind::Overtake;
    } else {
      dec.kind = SpeedDecisionKind::Yield;
      const auto sl_end = r.slice(last_overlap_t);
      const double gap = sl_end ? (*sl_end)[0] - result.profile.station_at(last_overlap_t) : 1e9;
      const auto s0 = r.slice(r.t_min());
      const auto s1 = r.slice(r.t_max());
      const bool moving = s0 && s1 && std::abs((*s1)[0] - (*s0)[0]) > 1.0;
      const bool to_horizon = r.t_max() >= horizon - model.dt;
      if (last_d == 0 && to_horizon && !moving) {
        dec.kind = SpeedDecisionKind::Stop;
      } else if (moving && gap <= 2.0 * model.follow_buffer) {
        dec.kind = SpeedDecisionKind::Follow;
      }
    }
    result.profile.decisions.push_back(dec);
  }

  // Refined-grid tunnel from the decided sides, buffered but never cutting
  // into the DP profile itself.
  const double s_roof = limits.v_upper * horizon + 10.0;
  const int nfine = int(std::round(horizon / params.tunnel_dt)) + 1;
  result.tunnel.times.resize(nfine);
  result.tunnel.s_low.assign(nfine, 0.0);
  result.tunnel.s_high.assign(nfine, s_roof);
  for (int k = 0; k < nfine; ++k) {
    const double t = k * params.tunnel_dt;
    result.tunnel.times[k] = t;
    const double dp_s = result.profile.station_at(t);
    double lo = 0.0, hi = s_roof;
    for (int ri = 0; ri < int(regions.size()); ++ri) {
      const StRegion& r = regions[ri];
      auto sl = r.slice(t);
      if (!sl) continue;
      auto dec = std::find_if(result.profile.decisions.begin(), result.profile.decisions.end(),
                              [&](const SpeedDecision& d) { return d.region_index == ri; });
      if (dec == result.profile.decisions.end()) continue;
      if (dec->kind == SpeedDecisionKind::Overtake) {
        lo = std::max(lo, std::max((*sl)[1], std::min((*sl)[1] + model.follow_buffer, dp_s - 0.1)));
      } else {
        hi = std::min(hi, std::min((*sl)[0], std::max((*sl)[0] - model.follow_buffer, dp_s + 0.1)));
      }
    }
    if (lo > hi) {  // squeezed start: fall back to bracketing the DP profile
      lo = std::min(lo, dp_s);
      hi = std::max(hi, dp_s);
    }
    result.tunnel.s_low[k] = lo;
    result.tunnel.s_high[k] = hi;
  }
  return result;
}

SpeedQpSetup build_speed_qp(const SpeedTunnel& tunnel, const PiecewiseLinear& s_ref,
                            double init_v, double init_a, const SpeedLimits& limits,
                            const std::vector<SpeedCap>& caps, const SpeedQpParams& params,
                            bool stop_at_end) {
  SpeedQpSetup setup;
  const double t0 = tunnel.times.front(), t1 = tunnel.times.back();
  for (int k = 0; k <= params.segments; ++k)
    setup.knots.push_back(t0 + (t1 - t0) * double(k) / params.segments);

  const int degree = 5;
  QuadraticCost cost = guidance_cost(setup.knots, degree, s_ref, params.w_ref);
  cost.add(smoothness_cost(setup.knots, degree, 2, params.w_acc));
  cost.add(smoothness_cost(setup.knots, degree, 3, params.w_jerk));

  SplineConstraintSpecs specs;
  specs.joint_order = 3;
  specs.initial = {{t0, 0, 0.0}, {t0, 1, init_v}, {t0, 2, init_a}};

  for (std::size_t k = 0; k < tunnel.times.size(); ++k) {
    const double t = tunnel.times[k];
    specs.monotone_points.push_back(t);
    if (t > t0) {  // the initial conditions already pin t0
      specs.boundary.push_back({t, 0, tunnel.s_low[k], tunnel.s_high[k]});
      double v_hi = limits.v_upper;
      for (const SpeedCap& cap : caps) {
        if (t >= cap.t_start && t <= cap.t_end)
          v_hi = std::min(v_hi, SpeedGridModel::cap_bound(t, cap.v_cap, init_v, limits));
      }
      specs.boundary.push_back({t, 1, 0.0, v_hi});
      specs.boundary.push_back({t, 2, -limits.dec_max, limits.acc_max});
      specs.boundary.push_back({t, 3, -limits.jerk_max, limits.jerk_max});
    }
    setup.constraint_times.push_back(t);
  }
  if (stop_at_end) specs.boundary.push_back({t1, 1, 0.0, 0.1});

  setup.problem.cost = std::move(cost);
  setup.problem.constraints = build_constraints(setup.knots, degree, specs);
  return setup;
}

SpeedQpResult qp_speed(const SpeedTunnel& tunnel, const DpSpeedProfile& guidance, double init_v,
                       double init_a, const SpeedLimits& limits,
                       const std::vector<SpeedCap>& caps, const SpeedQpParams& params,
                       const QpSolution* warm_start) {
  PiecewiseLinear s_ref{guidance.times, guidance.stations};
  const bool stop_at_end =
      std::any_of(guidance.decisions.begin(), guidance.decisions.end(),
                  [](const SpeedDecision& d) { return d.kind == SpeedDecisionKind::Stop; }) &&
      !guidance.stations.empty() &&
      guidance.stations.back() - guidance.stations[guidance.stations.size() - 2] < 1e-9;
  SpeedQpSetup setup =
      build_speed_qp(tunnel, s_ref, init_v, init_a, limits, caps, params, stop_at_end);
  QpSolution sol = solve_qp(setup.problem, warm_start);

  SpeedQpResult result{SpeedQpStatus::Ok, {Spline(setup.knots, 5, sol.params)}, sol, {}};
  if (sol.status != QpStatus::Optimal) {
    result.status = SpeedQpStatus::Infeasible;
    result.violated_tags = sol.violated_tags;
  }
  return result;
}

}  // namespace emplan
