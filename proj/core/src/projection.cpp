#include "emplan/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "emplan/poly.hpp"

namespace emplan {

ObstaclePose Obstacle::pose_at(double t) const {
  if (trajectory.empty()) return {};
  if (trajectory.size() == 1 || t <= trajectory.front().t) {
    ObstaclePose p = trajectory.front();
    p.t = t;
    return p;
  }
  if (t >= trajectory.back().t) {
    ObstaclePose p = trajectory.back();
    p.t = t;
    return p;
  }
  auto it = std::upper_bound(trajectory.begin(), trajectory.end(), t,
                             [](double v, const ObstaclePose& p) { return v < p.t; });
  const ObstaclePose& b = *it;
  const ObstaclePose& a = *(it - 1);
  const double w = (t - a.t) / (b.t - a.t);
  ObstaclePose p;
  p.t = t;
  p.x = a.x + w * (b.x - a.x);
  p.y = a.y + w * (b.y - a.y);
  p.heading = a.heading + w * normalize_angle(b.heading - a.heading);
  return p;
}

std::array<std::array<double, 2>, 4> Obstacle::corners(const ObstaclePose& pose) const {
  const double ch = std::cos(pose.heading), sh = std::sin(pose.heading);
  const double hl = 0.5 * length, hw = 0.5 * width;
  std::array<std::array<double, 2>, 4> out;
  const std::array<std::array<double, 2>, 4> local = {{{hl, hw}, {hl, -hw}, {-hl, -hw}, {-hl, hw}}};
  for (int i = 0; i < 4; ++i) {
    out[i][0] = pose.x + local[i][0] * ch - local[i][1] * sh;
    out[i][1] = pose.y + local[i][0] * sh + local[i][1] * ch;
  }
  return out;
}

std::array<std::array<double, 2>, 4> EgoFootprint::corners(double x, double y,
                                                           double heading) const {
  const double ch = std::cos(heading), sh = std::sin(heading);
  const double fwd = front_extent(), back = -rear_extent(), hw = half_width();
  const std::array<std::array<double, 2>, 4> local = {{{fwd, hw}, {fwd, -hw}, {back, -hw}, {back, hw}}};
  std::array<std::array<double, 2>, 4> out;
  for (int i = 0; i < 4; ++i) {
    out[i][0] = x + local[i][0] * ch - local[i][1] * sh;
    out[i][1] = y + local[i][0] * sh + local[i][1] * ch;
  }
  return out;
}

double StRegion::t_min() const {
  double m = std::numeric_limits<double>::max();
  for (const auto& p : polygon) m = std::min(m, p[0]);
  return m;
}

double StRegion::t_max() const {
  double m = std::numeric_limits<double>::lowest();
  for (const auto& p : polygon) m = std::max(m, p[0]);
  return m;
}

std::optional<std::array<double, 2>> StRegion::slice(double t) const {
  if (polygon.size() < 3 || t < t_min() - 1e-12 || t > t_max() + 1e-12) return std::nullopt;
  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = polygon[i];
    const auto& b = polygon[(i + 1) % n];
    if (std::abs(a[0] - t) < 1e-12) {
      lo = std::min(lo, a[1]);
      hi = std::max(hi, a[1]);
    }
    const double t0 = a[0], t1 = b[0];
    if ((t0 < t && t1 > t) || (t1 < t && t0 > t)) {
      const double w = (t - t0) / (t1 - t0);
      const double s = a[1] + w * (b[1] - a[1]);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  if (lo > hi) return std::nullopt;
  return std::array<double, 2>{lo, hi};
}

double box_gap(double a_lo, double a_hi, double b_lo, double b_hi) {
  return std::max({b_lo - a_hi, a_lo - b_hi, 0.0});
}

namespace {

void project_axes(const std::array<std::array<double, 2>, 4>& pts, double ax, double ay,
                  double& lo, double& hi) {
  lo = std::numeric_limits<double>::max();
  hi = std::numeric_limits<double>::lowest();
  for (const auto& p : pts) {
    const double d = p[0] * ax + p[1] * ay;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
}

bool separated_on(const std::array<std::array<double, 2>, 4>& a,
                  const std::array<std::array<double, 2>, 4>& b, double ax, double ay) {
  double alo, ahi, blo, bhi;
  project_axes(a, ax, ay, alo, ahi);
  project_axes(b, ax, ay, blo, bhi);
  return ahi < blo || bhi < alo;
}

}  // namespace

bool obb_overlap(const std::array<std::array<double, 2>, 4>& a,
                 const std::array<std::array<double, 2>, 4>& b) {
  for (int i = 0; i < 2; ++i) {
    const auto& box = (i == 0) ? a : b;
    for (int e = 0; e < 2; ++e) {
      const double ex = box[e + 1][0] - box[e][0];
      const double ey = box[e + 1][1] - box[e][1];
      if (separated_on(a, b, -ey, ex)) return false;
    }
  }
  return true;
}

// Only the station-vs-time profile is taken from the previous cycle; the box
// used for interaction tests rides the lane center at that station. Keying
// the lateral position to the old evasive path would hide interactions the
// moment a nudge succeeds and make decisions flip-flop between cycles.
EgoMotionEstimate ego_motion_from_trajectory(const Trajectory& prev, const ReferenceLine& ref,
                                             double dt, double horizon) {
  EgoMotionEstimate est;
  const int n = int(std::round(horizon / dt)) + 1;
  est.times.reserve(n);
  est.poses.reserve(n);
  est.stations.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    double s, v;
    if (t <= prev.duration()) {
      const CartesianState st = prev.state_at(t);
      s = ref.project_point_extended(st.x, st.y)[0];
      v = st.v;
    } else {
      const CartesianState last = prev.state_at(prev.duration());
      const double s_last = ref.project_point_extended(last.x, last.y)[0];
      s = s_last + last.v * (t - prev.duration());
      v = last.v;
    }
    s = std::clamp(s, 0.0, ref.length());
    est.times.push_back(t);
    est.stations.push_back(s);
    est.poses.push_back(ref.to_cartesian({s, 0.0}, v, 0.0));
  }
  return est;
}

EgoMotionEstimate ego_motion_synthesized(const ReferenceLine& ref, double start_s, double speed,
                                         double dt, double horizon) {
  EgoMotionEstimate est;
  const int n = int(std::round(horizon / dt)) + 1;
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    const double s = std::min(start_s + speed * t, ref.length());
    est.times.push_back(t);
    est.stations.push_back(s);
    est.poses.push_back(ref.to_cartesian({s, 0.0}, speed, 0.0));
  }
  return est;
}

namespace {

SlRegion frenet_bbox(const Obstacle& obstacle, const ObstaclePose& pose,
                     const ReferenceLine& ref) {
  SlRegion r;
  r.source_id = obstacle.id;
  r.s_min = r.l_min = std::numeric_limits<double>::max();
  r.s_max = r.l_max = std::numeric_limits<double>::lowest();
  for (const auto& c : obstacle.corners(pose)) {
    const auto sl = ref.project_point_extended(c[0], c[1]);
    r.s_min = std::min(r.s_min, sl[0]);
    r.s_max = std::max(r.s_max, sl[0]);
    r.l_min = std::min(r.l_min, sl[1]);
    r.l_max = std::max(r.l_max, sl[1]);
  }
  return r;
}

bool is_oncoming(const Obstacle& obstacle, double t, const ReferenceLine& ref) {
  const double dt = 0.05;
  const ObstaclePose p0 = obstacle.pose_at(t);
  const ObstaclePose p1 = obstacle.pose_at(t + dt);
  const double vx = (p1.x - p0.x) / dt, vy = (p1.y - p0.y) / dt;
  const auto sl = ref.project_point_extended(p0.x, p0.y);
  const RefSample r = ref.pose_at(std::clamp(sl[0], 0.0, ref.length()));
  return vx * std::cos(r.heading) + vy * std::sin(r.heading) < 0.0;
}

}  // namespace

std::vector<SlRegion> project_sl(const std::vector<Obstacle>& obstacles,
                                 const ReferenceLine& ref, const EgoMotionEstimate& ego_motion,
                                 double ego_speed, const EgoFootprint& footprint,
                                 const SlProjectionParams& params) {
  std::vector<SlRegion> out;
  const double low_speed =
      std::max(params.low_speed_abs, params.low_speed_ratio * ego_speed);

  // Stable output order: obstacles in input order, samples in time order.
  for (const Obstacle& obstacle : obstacles) {
    if (obstacle.kind == Obstacle::Kind::Static) {
      out.push_back(frenet_bbox(obstacle, obstacle.trajectory.front(), ref));
      continue;
    }

    // Find overlap samples against the previous-cycle motion estimate.
    std::vector<double> hits;
    for (std::size_t i = 0; i < ego_motion.times.size(); ++i) {
      const double t = ego_motion.times[i];
      if (t > params.horizon + 1e-9) break;
      const CartesianState& ego = ego_motion.poses[i];
      const auto ego_box = footprint.corners(ego.x, ego.y, ego.heading);
      const auto obs_box = obstacle.corners(obstacle.pose_at(t));
      if (obb_overlap(ego_box, obs_box)) hits.push_back(t);
    }
    if (hits.empty()) continue;

    const bool slow = obstacle.speed < low_speed;
    if (!slow && !is_oncoming(obstacle, hits.front(), ref)) continue;  // lane change covers it

    for (double t : hits) {
      SlRegion r = frenet_bbox(obstacle, obstacle.pose_at(t), ref);
      r.interaction_time = t;
      out.push_back(r);
    }
  }
  return out;
}

std::vector<StRegion> project_st(const std::vector<Obstacle>& obstacles, const Spline& path,
                                 double path_s0, double path_s1, const ReferenceLine& ref,
                                 double horizon, const EgoFootprint& footprint,
                                 const StProjectionParams& params) {
  std::vector<StRegion> out;
  const double ds = params.station_step;
  const double hw = footprint.half_width();

  auto lateral_at = [&](double s) { return path.eval(std::clamp(s, path_s0, path_s1), 0); };

  // Blocked ego-center stations against one SL box.
  auto blocked_intervals = [&](const SlRegion& box) {
    std::vector<std::array<double, 2>> runs;
    const double lo = std::max(path_s0, box.s_min - footprint.front_extent());
    const double hi = std::min(path_s1, box.s_max + footprint.rear_extent());
    bool open = false;
    double run_start = 0.0;
    for (double s = lo; s <= hi + 1e-9; s += ds) {
      const double l = lateral_at(s);
      const bool blocked = box_gap(l - hw, l + hw, box.l_min, box.l_max) <= 0.0;
      if (blocked && !open) {
        open = true;
        run_start = s;
      } else if (!blocked && open) {
        open = false;
        runs.push_back({run_start, s - ds});
      }
    }
    if (open) runs.push_back({run_start, hi});
    return runs;
  };

  struct Chain {
    std::vector<std::array<double, 3>> entries;  // (t, lo, hi)
    bool done = false;
  };

  for (const Obstacle& obstacle : obstacles) {
    if (obstacle.kind == Obstacle::Kind::Static) {
      for (const auto& run : blocked_intervals(
               frenet_bbox(obstacle, obstacle.trajectory.front(), ref))) {
        StRegion r;
        r.source_id = obstacle.id;
        r.polygon = {{0.0, run[0]}, {horizon, run[0]}, {horizon, run[1]}, {0.0, run[1]}};
        out.push_back(r);
      }
      continue;
    }

    std::vector<Chain> chains;
    const int nt = int(std::round(horizon / params.dt)) + 1;
    for (int i = 0; i < nt; ++i) {
      const double t = i * params.dt;
      const auto runs = blocked_intervals(frenet_bbox(obstacle, obstacle.pose_at(t), ref));
      std::vector<bool> used(runs.size(), false);
      for (auto& chain : chains) {
        if (chain.done) continue;
        if (chain.entries.back()[0] < t - params.dt - 1e-9) {
          chain.done = true;
          continue;
        }
        bool extended = false;
        for (std::size_t k = 0; k < runs.size(); ++k) {
          if (used[k]) continue;
          const auto& prev = chain.entries.back();
          if (runs[k][0] <= prev[2] + params.chain_gap && runs[k][1] >= prev[1] - params.chain_gap) {
            chain.entries.push_back({t, runs[k][0], runs[k][1]});
            used[k] = true;
            extended = true;
            break;
          }
        }
        if (!extended) chain.done = true;
      }
      for (std::size_t k = 0; k < runs.size(); ++k) {
        if (!used[k]) chains.push_back({{{t, runs[k][0], runs[k][1]}}, false});
      }
    }

    for (const auto& chain : chains) {
      // Convex hull of the interval endpoints; degenerate chains get padded.
      std::vector<std::array<double, 2>> pts;
      for (const auto& e : chain.entries) {
        pts.push_back({e[0], e[1]});
        pts.push_back({e[0], e[2]});
      }
      if (chain.entries.size() == 1) {
        const auto& e = chain.entries.front();
        const double t0 = std::max(0.0, e[0] - 0.5 * params.dt);
        const double t1 = std::min(horizon, e[0] + 0.5 * params.dt);
        pts = {{t0, e[1]}, {t1, e[1]}, {t1, e[2]}, {t0, e[2]}};
      }
      // Andrew monotone chain.
      std::sort(pts.begin(), pts.end());
      pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
      auto cross = [](const std::array<double, 2>& o, const std::array<double, 2>& a,
                      const std::array<double, 2>& b) {
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
      };
      std::vector<std::array<double, 2>> hull;
      if (pts.size() >= 3) {
        std::vector<std::array<double, 2>> h(2 * pts.size());
        std::size_t k = 0;
        for (const auto& p : pts) {
          while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0) --k;
          h[k++] = p;
        }
        const std::size_t lower = k + 1;
        for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
          while (k >= lower && cross(h[k - 2], h[k - 1], *it) <= 0) --k;
          h[k++] = *it;
        }
        h.resize(k - 1);
        hull = std::move(h);
      }
      if (hull.size() < 3) continue;
      StRegion r;
      r.source_id = obstacle.id;
      r.polygon = std::move(hull);
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace emplan
