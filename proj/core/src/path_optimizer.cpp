#include "emplan/path_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "emplan/poly.hpp"

namespace emplan {

LatticeConfig LatticeConfig::make(double ego_speed, bool lane_change, const RoadBounds& road,
                                  const EgoFootprint& footprint) {
  LatticeConfig cfg;
  cfg.row_interval = std::max(10.0, 1.5 * ego_speed);
  if (lane_change) cfg.row_interval *= 2.0;
  cfg.total_span = std::max(200.0, 8.0 * ego_speed);
  const double lo = road.l_min + footprint.half_width();
  const double hi = road.l_max - footprint.half_width();
  for (int i = -3; i <= 3; ++i) {
    const double offset = 0.5 * i;
    if (offset >= lo - 1e-9 && offset <= hi + 1e-9) cfg.lateral_offsets.push_back(offset);
  }
  return cfg;
}

int Lattice::edge_count() const {
  int n = 0;
  for (std::size_t r = 0; r + 1 < rows.size(); ++r)
    n += int(rows[r].size() * rows[r + 1].size());
  return n;
}

Lattice sample_lattice(const LatticeConfig& config, const FrenetState& start,
                       const RoadBounds& road, double max_station) {
  Lattice lattice;
  lattice.start = start;
  lattice.rows.push_back({{start.s, start.l}});

  const double span_end = std::min(start.s + config.total_span, max_station);
  for (double s = start.s + config.row_interval; s <= span_end + 1e-9;
       s += config.row_interval) {
    std::vector<LatticeNode> row;
    for (double offset : config.lateral_offsets) {
      if (offset < road.l_min - 1e-9 || offset > road.l_max + 1e-9) continue;
      row.push_back({s, offset});
    }
    if (row.empty()) throw EmptyRow("lattice row has no offsets inside road bounds");
    lattice.rows.push_back(std::move(row));
  }
  return lattice;
}

double DpPath::eval(double s, int order) const {
  s = std::clamp(s, s_begin(), s_end());
  std::size_t k = 0;
  while (k + 1 < edge_coeffs.size() && s >= nodes[k + 1].s) ++k;
  const double u = s - nodes[k].s;
  const auto& c = edge_coeffs[k];
  double r = 0.0;
  for (int j = 5; j >= order; --j) {
    double coef = c[j];
    for (int m = 0; m < order; ++m) coef *= double(j - m);
    r = r * u + coef;
  }
  return r;
}

namespace {

struct RegionIndex {
  const std::vector<SlRegion>* regions;
  // Buckets of region indices by station cell, covering each region's span
  // plus the influence range.
  std::vector<std::vector<int>> buckets;
  double s0, cell;

  RegionIndex(const std::vector<SlRegion>& rs, double start, double end,
              const EgoFootprint& fp, double reach)
      : regions(&rs), s0(start), cell(4.0) {
    const int n = std::max(1, int((end - start) / cell) + 2);
    buckets.resize(n);
    for (int i = 0; i < int(rs.size()); ++i) {
      const double lo = rs[i].s_min - fp.front_extent() - reach;
      const double hi = rs[i].s_max + fp.rear_extent() + reach;
      int b0 = std::clamp(int((lo - s0) / cell), 0, n - 1);
      int b1 = std::clamp(int((hi - s0) / cell), 0, n - 1);
      for (int b = b0; b <= b1; ++b) buckets[b].push_back(i);
    }
  }

  const std::vector<int>& near(double s) const {
    static const std::vector<int> kNone;
    const int b = int((s - s0) / cell);
    if (b < 0 || b >= int(buckets.size())) return kNone;
    return buckets[b];
  }
};

// Obstacle + on-road cost for ego centered at (s, l); sets collided on
// sub-buffer distance.
double station_cost(double s, double l, const RegionIndex& index, const EgoFootprint& fp,
                    const PathCostParams& params, const RoadBounds& road, bool& collided) {
  double cost = 0.0;
  const double ego_lo = s - fp.rear_extent(), ego_hi = s + fp.front_extent();
  const double lat_lo = l - fp.half_width(), lat_hi = l + fp.half_width();
  for (int idx : index.near(s)) {
    const SlRegion& r = (*index.regions)[idx];
    const double gs = box_gap(ego_lo, ego_hi, r.s_min, r.s_max);
    const double gl = box_gap(lat_lo, lat_hi, r.l_min, r.l_max);
    const double d = std::hypot(gs, gl);
    if (d < params.d_c) {
      collided = true;
      cost += params.collision_cost;
    } else if (d <= params.d_n) {
      const double num = params.d_n - d;
      const double den = params.d_n - params.d_c;
      cost += params.w_obstacle * num * num / (den * den);
    }
  }
  if (lat_hi > road.l_max + 1e-9 || lat_lo < road.l_min - 1e-9) cost += params.on_road_penalty;
  return cost;
}

Poly edge_poly(const std::array<double, 6>& c) {
  return Poly(std::vector<double>(c.begin(), c.end()));
}

double smoothness_of_edge(const Poly& f, double h, const PathCostParams& p) {
  const Poly f1 = f.derivative();
  const Poly f2 = f1.derivative();
  const Poly f3 = f2.derivative();
  return p.w1 * (f1 * f1).integrate(h) + p.w2 * (f2 * f2).integrate(h) +
         p.w3 * (f3 * f3).integrate(h);
}

// Exact integral of (f - g)^2 with piecewise-linear g, split at breakpoints.
double guidance_of_edge(const Poly& f, double s_begin, double h, const PiecewiseLinear& g,
                        double weight) {
  std::vector<double> cuts = {s_begin, s_begin + h};
  for (double x : g.xs)
    if (x > s_begin + 1e-12 && x < s_begin + h - 1e-12) cuts.push_back(x);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    const double ga = g(a), gb = g(b);
    // g restricted to [a, b], expressed in the edge-local variable u = x - s_begin.
    const double slope = (gb - ga) / (b - a);
    const double ua = a - s_begin;
    const Poly gl({ga - slope * ua, slope});
    const Poly diff = f - gl;
    const Poly sq = diff * diff;
    total += sq.integrate(b - s_begin) - sq.integrate(ua);
  }
  return weight * total;
}

}  // namespace

DpPathResult dp_search(const Lattice& lattice, const std::vector<SlRegion>& regions,
                       const PiecewiseLinear& guidance, const PathCostParams& params,
                       const EgoFootprint& footprint, const RoadBounds& road) {
  const auto& rows = lattice.rows;
  DpPathResult result;
  if (rows.size() < 2) {
    result.status = DpPathStatus::AllPathsCollide;
    return result;
  }

  const double s_end = rows.back().front().s;
  RegionIndex index(regions, lattice.start.s, s_end, footprint, params.d_n + 1.0);

  struct NodeState {
    double cost = std::numeric_limits<double>::max();
    int parent = -1;
    std::array<double, 6> edge{};
  };
  std::vector<std::vector<NodeState>> state(rows.size());
  state[0].resize(1);
  state[0][0].cost = 0.0;

  for (std::size_t r = 0; r + 1 < rows.size(); ++r) {
    state[r + 1].resize(rows[r + 1].size());
    for (std::size_t j = 0; j < rows[r + 1].size(); ++j) {
      const LatticeNode& to = rows[r + 1][j];
      for (std::size_t i = 0; i < rows[r].size(); ++i) {
        const LatticeNode& from = rows[r][i];
        const double h = to.s - from.s;
        const double dl0 = (r == 0) ? lattice.start.dl : 0.0;
        const double ddl0 = (r == 0) ? lattice.start.ddl : 0.0;
        const auto coeffs = quintic_hermite(from.l, dl0, ddl0, to.l, 0.0, 0.0, h);
        const Poly f = edge_poly(coeffs);

        double cost = smoothness_of_edge(f, h, params) +
                      guidance_of_edge(f, from.s, h, guidance, params.w4);
        // Obstacle cost on the global 1 m station grid, skipping the start
        // station (the ego cannot change where it already is).
        const double step = params.obstacle_sample_ds;
        double s_first = std::ceil((from.s + 0.5) / step) * step;
        bool collided = false;
        for (double s = s_first; s <= to.s + 1e-9; s += step) {
          cost += station_cost(s, f.eval(s - from.s), index, footprint, params, road, collided);
        }
        if (collided) cost = std::max(cost, params.collision_cost);

        const double total = state[r][i].cost + cost;
        if (total < state[r + 1][j].cost - 1e-12) {
          state[r + 1][j].cost = total;
          state[r + 1][j].parent = int(i);
          state[r + 1][j].edge = coeffs;
        }
      }
    }
  }

  // Terminal pick: lowest cost, ties by |l| then leftmost.
  const auto& last = rows.back();
  int best = -1;
  for (std::size_t j = 0; j < last.size(); ++j) {
    if (best < 0) {
      best = int(j);
      continue;
    }
    const double cb = state.back()[best].cost, cj = state.back()[j].cost;
    if (cj < cb - 1e-12) {
      best = int(j);
    } else if (std::abs(cj - cb) <= 1e-12) {
      const double lb = last[best].l, lj = last[j].l;
      if (std::abs(lj) < std::abs(lb) - 1e-12 ||
          (std::abs(std::abs(lj) - std::abs(lb)) <= 1e-12 && lj > lb)) {
        best = int(j);
      }
    }
  }

  if (state.back()[best].cost >= params.collision_cost) {
    result.status = DpPathStatus::AllPathsCollide;
    return result;
  }

  result.path.total_cost = state.back()[best].cost;
  std::vector<int> chain(rows.size());
  chain[rows.size() - 1] = best;
  for (std::size_t r = rows.size() - 1; r > 0; --r)
    chain[r - 1] = state[r][chain[r]].parent;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    result.path.nodes.push_back(rows[r][chain[r]]);
    if (r > 0) result.path.edge_coeffs.push_back(state[r][chain[r]].edge);
  }
  return result;
}

std::array<double, 2> FeasibleTunnel::bounds_at(double s) const {
  if (stations.empty()) return {0.0, 0.0};
  auto it = std::lower_bound(stations.begin(), stations.end(), s - 1e-9);
  const std::size_t i = std::min(std::size_t(it - stations.begin()), stations.size() - 1);
  // Tighter of the two grid neighbours, so off-grid queries stay conservative.
  const std::size_t j = (i > 0 && stations[i] > s + 1e-9) ? i - 1 : i;
  return {std::max(l_low[i], l_low[j]), std::min(l_high[i], l_high[j])};
}

TunnelResult extract_tunnel_and_decisions(const DpPath& dp_path,
                                          const std::vector<SlRegion>& regions,
                                          const RoadBounds& road, const EgoFootprint& footprint,
                                          const PathCostParams& params) {
  TunnelResult result;
  FeasibleTunnel& tunnel = result.tunnel;
  const double s0 = dp_path.s_begin(), s1 = dp_path.s_end();
  for (double s = s0; s <= s1 + 1e-9; s += 1.0) {
    tunnel.stations.push_back(s);
    tunnel.l_low.push_back(road.l_min);
    tunnel.l_high.push_back(road.l_max);
  }

  std::map<std::string, NudgeSide> per_obstacle;
  for (const SlRegion& region : regions) {
    NudgeSide side = NudgeSide::Ignore;
    const bool in_span = region.s_max >= s0 && region.s_min <= s1;
    const bool relevant = region.l_max >= road.l_min - params.d_n &&
                          region.l_min <= road.l_max + params.d_n;
    if (in_span && relevant) {
      double lo = std::numeric_limits<double>::max();
      double hi = std::numeric_limits<double>::lowest();
      for (double s = std::max(region.s_min, s0); s <= std::min(region.s_max, s1) + 1e-9;
           s += 0.5) {
        const double l = dp_path.eval(s);
        lo = std::min(lo, l);
        hi = std::max(hi, l);
      }
      if (lo > region.l_max) {
        side = NudgeSide::Left;
      } else if (hi < region.l_min) {
        side = NudgeSide::Right;
      } else {
        // DP path grazes the region; side of the larger clearance.
        side = (region.l_max - lo < hi - region.l_min) ? NudgeSide::Left : NudgeSide::Right;
      }
    }

    if (side != NudgeSide::Ignore) {
      const double clip_lo = region.s_min - footprint.front_extent();
      const double clip_hi = region.s_max + footprint.rear_extent();
      for (std::size_t i = 0; i < tunnel.stations.size(); ++i) {
        const double s = tunnel.stations[i];
        if (s < clip_lo || s > clip_hi) continue;
        if (side == NudgeSide::Right) {
          tunnel.l_high[i] = std::min(tunnel.l_high[i], region.l_min - params.d_c);
        } else {
          tunnel.l_low[i] = std::max(tunnel.l_low[i], region.l_max + params.d_c);
        }
      }
    }

    auto it = per_obstacle.find(region.source_id);
    if (it == per_obstacle.end()) {
      per_obstacle.emplace(region.source_id, side);
    } else if (it->second == NudgeSide::Ignore) {
      it->second = side;
    }
  }

  for (const auto& [id, side] : per_obstacle) result.decisions.push_back({id, side});

  // The DP path is the feasibility certificate: keep it strictly inside the
  // tunnel even where it runs outside the nominal road corridor (a lane
  // change starts in the neighbour lane).
  const double hw = footprint.half_width();
  const double margin = params.d_c;
  for (std::size_t i = 0; i < tunnel.stations.size(); ++i) {
    const double l = dp_path.eval(tunnel.stations[i]);
    tunnel.l_low[i] = std::min(tunnel.l_low[i], l - hw - margin);
    tunnel.l_high[i] = std::max(tunnel.l_high[i], l + hw + margin);
  }

  // Degenerate when the bounds cross or leave no room for the body.
  for (std::size_t i = 0; i < tunnel.stations.size(); ++i) {
    if (tunnel.l_high[i] - tunnel.l_low[i] < footprint.width) {
      result.status = TunnelStatus::Degenerate;
      break;
    }
  }
  return result;
}

PathQpSetup build_path_qp(const FeasibleTunnel& tunnel, const PiecewiseLinear& guidance,
                          const FrenetState& start, const EgoFootprint& footprint,
                          const PathCostParams& cost, const PathQpParams& qp) {
  PathQpSetup setup;
  const double s0 = tunnel.stations.front();
  const double s1 = std::min(tunnel.stations.back(), s0 + qp.span);
  for (int k = 0; k <= qp.segments; ++k)
    setup.knots.push_back(s0 + (s1 - s0) * double(k) / qp.segments);

  const int degree = 5;
  QuadraticCost total = smoothness_cost(setup.knots, degree, 1, cost.w1);
  total.add(smoothness_cost(setup.knots, degree, 2, cost.w2));
  total.add(smoothness_cost(setup.knots, degree, 3, cost.w3));
  total.add(guidance_cost(setup.knots, degree, guidance, cost.w4));

  SplineConstraintSpecs specs;
  specs.joint_order = 3;
  specs.initial = {{s0, 0, start.l}, {s0, 1, start.dl}, {s0, 2, start.ddl}};

  const double hw = footprint.half_width();
  for (double s = s0; s <= s1 + 1e-9; s += qp.constraint_ds) {
    setup.constraint_stations.push_back(s);
    const auto [lo, hi] = tunnel.bounds_at(s);
    // All four body corners inside the tunnel (linearized heading terms).
    specs.heading.push_back({s, footprint.l_f, lo + hw, hi - hw});
    specs.heading.push_back({s, -footprint.l_r_geom, lo + hw, hi - hw});
    specs.boundary.push_back({s, 2, -qp.max_ddl, qp.max_ddl});
    specs.boundary.push_back({s, 3, -qp.max_dddl, qp.max_dddl});
  }

  setup.problem.cost = std::move(total);
  setup.problem.constraints = build_constraints(setup.knots, degree, specs);
  return setup;
}

PathQpResult qp_path(const FeasibleTunnel& tunnel, const DpPath& dp_path,
                     const std::vector<PathDecision>& decisions, const FrenetState& start,
                     const EgoFootprint& footprint, const PathCostParams& cost,
                     const PathQpParams& qp, const QpSolution* warm_start) {
  // DP result sampled as the guidance line.
  PiecewiseLinear guidance;
  for (double s = dp_path.s_begin(); s <= dp_path.s_end() + 1e-9; s += 1.0) {
    guidance.xs.push_back(s);
    guidance.ys.push_back(dp_path.eval(s));
  }

  PathQpSetup setup;
  try {
    setup = build_path_qp(tunnel, guidance, start, footprint, cost, qp);
  } catch (const InfeasibleBox&) {
    // Tunnel too narrow for the body at some station.
    return {PathQpStatus::Infeasible,
            {Spline({0.0, 1.0}, 5, Eigen::VectorXd::Zero(6)), decisions},
            {},
            {ConstraintTag::Boundary}};
  }
  QpSolution sol = solve_qp(setup.problem, warm_start);

  PathQpResult result{PathQpStatus::Ok,
                      {Spline(setup.knots, 5, sol.params), decisions},
                      sol,
                      {}};
  if (sol.status != QpStatus::Optimal) {
    result.status = PathQpStatus::Infeasible;
    result.violated_tags = sol.violated_tags;
  }
  return result;
}

}  // namespace emplan
