#include "emplan/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "emplan/poly.hpp"

namespace emplan {

namespace {

double poly_eval(const std::array<double, 6>& c, double u, int order) {
  switch (order) {
    case 0:
      return ((((c[5] * u + c[4]) * u + c[3]) * u + c[2]) * u + c[1]) * u + c[0];
    case 1:
      return (((5.0 * c[5] * u + 4.0 * c[4]) * u + 3.0 * c[3]) * u + 2.0 * c[2]) * u + c[1];
    case 2:
      return ((20.0 * c[5] * u + 12.0 * c[4]) * u + 6.0 * c[3]) * u + 2.0 * c[2];
    default:
      return (60.0 * c[5] * u + 24.0 * c[4]) * u + 6.0 * c[3];
  }
}

}  // namespace

ReferenceLine::ReferenceLine(std::vector<RefSample> samples) : samples_(std::move(samples)) {
  segments_.reserve(samples_.size() - 1);
  for (std::size_t i = 0; i + 1 < samples_.size(); ++i) {
    const RefSample& a = samples_[i];
    const RefSample& b = samples_[i + 1];
    const double h = b.s - a.s;
    // Unit-speed curve model: r' = (cos h, sin h), r'' = kappa * (-sin h, cos h).
    Segment seg;
    seg.h = h;
    seg.cx = quintic_hermite(a.x, std::cos(a.heading), -a.kappa * std::sin(a.heading),
                             b.x, std::cos(b.heading), -b.kappa * std::sin(b.heading), h);
    seg.cy = quintic_hermite(a.y, std::sin(a.heading), a.kappa * std::cos(a.heading),
                             b.y, std::sin(b.heading), b.kappa * std::cos(b.heading), h);
    segments_.push_back(seg);
  }
}

ReferenceLine ReferenceLine::from_samples(std::vector<RefSample> samples) {
  if (samples.size() < 2) throw ValidationError("reference line needs at least 2 samples");
  if (std::abs(samples.front().s) > 1e-9)
    throw ValidationError("reference line must start at s = 0");
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    const double ds = samples[i + 1].s - samples[i].s;
    if (ds <= 0.0) throw ValidationError("reference stations must be strictly increasing");
    if (ds > 1.0 + 1e-9) {
      std::ostringstream os;
      os << "reference sample spacing " << ds << " exceeds 1 m at s=" << samples[i].s;
      throw ValidationError(os.str());
    }
    const double chord = std::atan2(samples[i + 1].y - samples[i].y,
                                    samples[i + 1].x - samples[i].x);
    if (std::abs(normalize_angle(samples[i].heading - chord)) > 1e-2 + 0.5 * std::abs(samples[i].kappa) * ds) {
      std::ostringstream os;
      os << "heading inconsistent with geometry at s=" << samples[i].s;
      throw ValidationError(os.str());
    }
  }
  return ReferenceLine(std::move(samples));
}

ReferenceLine ReferenceLine::from_polyline(std::span<const std::array<double, 2>> pts) {
  if (pts.size() < 3) throw ValidationError("polyline needs at least 3 points");
  const std::size_t n = pts.size();
  std::vector<RefSample> samples(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) s += std::hypot(pts[i][0] - pts[i - 1][0], pts[i][1] - pts[i - 1][1]);
    samples[i].s = s;
    samples[i].x = pts[i][0];
    samples[i].y = pts[i][1];
  }
  // Headings: central differences inside, one-sided chords at the ends.
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j0 = (i == 0) ? 0 : i - 1;
    std::size_t j1 = (i + 1 == n) ? i : i + 1;
    samples[i].heading = std::atan2(pts[j1][1] - pts[j0][1], pts[j1][0] - pts[j0][0]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j0 = (i == 0) ? 0 : i - 1;
    std::size_t j1 = (i + 1 == n) ? i : i + 1;
    const double ds = samples[j1].s - samples[j0].s;
    samples[i].kappa = normalize_angle(samples[j1].heading - samples[j0].heading) / ds;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j0 = (i == 0) ? 0 : i - 1;
    std::size_t j1 = (i + 1 == n) ? i : i + 1;
    const double ds = samples[j1].s - samples[j0].s;
    samples[i].dkappa = (samples[j1].kappa - samples[j0].kappa) / ds;
  }
  return from_samples(std::move(samples));
}

std::pair<int, double> ReferenceLine::locate(double s) const {
  const double clamped = std::clamp(s, 0.0, length());
  auto it = std::upper_bound(samples_.begin(), samples_.end(), clamped,
                             [](double v, const RefSample& r) { return v < r.s; });
  int idx = int(it - samples_.begin()) - 1;
  idx = std::clamp(idx, 0, int(segments_.size()) - 1);
  return {idx, clamped - samples_[idx].s};
}

RefSample ReferenceLine::pose_at(double s) const {
  if (s < -1e-9 || s > length() + 1e-9) throw OutOfRange("station outside reference line");
  auto [idx, u] = locate(s);
  const Segment& seg = segments_[idx];
  const double xp = poly_eval(seg.cx, u, 1), yp = poly_eval(seg.cy, u, 1);
  const double xpp = poly_eval(seg.cx, u, 2), ypp = poly_eval(seg.cy, u, 2);
  const double xppp = poly_eval(seg.cx, u, 3), yppp = poly_eval(seg.cy, u, 3);
  const double d = xp * xp + yp * yp;
  const double cross = xp * ypp - yp * xpp;
  RefSample out;
  out.s = std::clamp(s, 0.0, length());
  out.x = poly_eval(seg.cx, u, 0);
  out.y = poly_eval(seg.cy, u, 0);
  out.heading = std::atan2(yp, xp);
  out.kappa = cross / (d * std::sqrt(d));
  const double cross_p = xp * yppp - yp * xppp;
  const double dp = 2.0 * (xp * xpp + yp * ypp);
  out.dkappa = (cross_p * d - 1.5 * cross * dp) / (d * d * std::sqrt(d));
  return out;
}

double ReferenceLine::nearest_station(double x, double y) const {
  // Coarse scan over samples.
  double best = std::numeric_limits<double>::max();
  double second = std::numeric_limits<double>::max();
  int best_idx = 0, second_idx = -1;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const double dx = samples_[i].x - x, dy = samples_[i].y - y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best) {
      if (best_idx != int(i)) {
        second = best;
        second_idx = best_idx;
      }
      best = d2;
      best_idx = int(i);
    } else if (d2 < second && int(i) != best_idx) {
      second = d2;
      second_idx = int(i);
    }
  }
  if (second_idx >= 0 && std::abs(best_idx - second_idx) > 1 &&
      std::abs(std::sqrt(best) - std::sqrt(second)) < 1e-6) {
    throw AmbiguousProjection("two non-adjacent reference samples tie for nearest point");
  }

  // Newton refinement on D(u) = |P(u) - q|^2 around the best sample.
  double s = samples_[best_idx].s;
  for (int iter = 0; iter < 10; ++iter) {
    auto [idx, u] = locate(s);
    const Segment& seg = segments_[idx];
    const double px = poly_eval(seg.cx, u, 0) - x, py = poly_eval(seg.cy, u, 0) - y;
    const double xp = poly_eval(seg.cx, u, 1), yp = poly_eval(seg.cy, u, 1);
    const double xpp = poly_eval(seg.cx, u, 2), ypp = poly_eval(seg.cy, u, 2);
    const double g = 2.0 * (px * xp + py * yp);
    const double h = 2.0 * (xp * xp + yp * yp + px * xpp + py * ypp);
    if (std::abs(h) < 1e-12) break;
    double step = -g / h;
    step = std::clamp(step, -1.0, 1.0);  // trust region of one sample spacing
    const double next = std::clamp(s + step, 0.0, length());
    if (std::abs(next - s) < 1e-6) {
      s = next;
      break;
    }
    s = next;
  }

  // Endpoint clamp check: nearest point beyond the line ends is out of range.
  if (s <= 1e-12) {
    const RefSample& r0 = samples_.front();
    const double proj = (x - r0.x) * std::cos(r0.heading) + (y - r0.y) * std::sin(r0.heading);
    if (proj < -1e-9) throw OutOfRange("projection falls before the reference line start");
  } else if (s >= length() - 1e-12) {
    const RefSample& r1 = samples_.back();
    const double proj = (x - r1.x) * std::cos(r1.heading) + (y - r1.y) * std::sin(r1.heading);
    if (proj > 1e-9) throw OutOfRange("projection falls past the reference line end");
  }
  return s;
}

std::array<double, 2> ReferenceLine::project_point(double x, double y) const {
  const double s = nearest_station(x, y);
  const RefSample r = pose_at(s);
  const double nx = -std::sin(r.heading), ny = std::cos(r.heading);
  const double l = (x - r.x) * nx + (y - r.y) * ny;
  return {s, l};
}

std::array<double, 2> ReferenceLine::project_point_extended(double x, double y) const {
  try {
    return project_point(x, y);
  } catch (const OutOfRange&) {
    // Fall through to the tangent extension at the nearer endpoint.
  } catch (const AmbiguousProjection&) {
    // Keep the nearest-sample answer for ties; rare and only used for
    // conservative obstacle boxes.
  }
  const RefSample& r0 = samples_.front();
  const RefSample& r1 = samples_.back();
  const double d0 = std::hypot(x - r0.x, y - r0.y);
  const double d1 = std::hypot(x - r1.x, y - r1.y);
  const RefSample& r = d0 <= d1 ? r0 : r1;
  const double along = (x - r.x) * std::cos(r.heading) + (y - r.y) * std::sin(r.heading);
  const double l = (x - r.x) * -std::sin(r.heading) + (y - r.y) * std::cos(r.heading);
  return {r.s + along, l};
}

FrenetState ReferenceLine::project(const CartesianState& state) const {
  const double s = nearest_station(state.x, state.y);
  const RefSample r = pose_at(s);
  const double nx = -std::sin(r.heading), ny = std::cos(r.heading);

  FrenetState fs;
  fs.s = s;
  fs.l = (state.x - r.x) * nx + (state.y - r.y) * ny;

  const double dtheta = normalize_angle(state.heading - r.heading);
  const double one_minus = 1.0 - r.kappa * fs.l;
  const double tan_d = std::tan(dtheta);
  const double cos_d = std::cos(dtheta);
  fs.dl = one_minus * tan_d;
  const double kr_l_prime = r.dkappa * fs.l + r.kappa * fs.dl;
  fs.ddl = -kr_l_prime * tan_d +
           one_minus / (cos_d * cos_d) * (state.kappa * one_minus / cos_d - r.kappa);
  fs.dddl = 0.0;  // needs dkappa of the subject state, unavailable here
  return fs;
}

CartesianState ReferenceLine::to_cartesian(const FrenetState& fs) const {
  return to_cartesian(fs, 0.0, 0.0);
}

CartesianState ReferenceLine::to_cartesian(const FrenetState& fs, double s_dot,
                                           double s_ddot) const {
  if (fs.s < -1e-9 || fs.s > length() + 1e-9)
    throw OutOfRange("frenet station outside reference line");
  const RefSample r = pose_at(fs.s);
  const double one_minus = 1.0 - r.kappa * fs.l;
  if (one_minus <= 1e-9)
    throw CurvatureSingularity("lateral offset reaches the curvature center");

  CartesianState out;
  out.x = r.x - fs.l * std::sin(r.heading);
  out.y = r.y + fs.l * std::cos(r.heading);
  const double dtheta = std::atan2(fs.dl, one_minus);
  out.heading = normalize_angle(r.heading + dtheta);

  const double cos_d = std::cos(dtheta);
  const double tan_d = fs.dl / one_minus;
  const double kr_l_prime = r.dkappa * fs.l + r.kappa * fs.dl;
  out.kappa = (((fs.ddl + kr_l_prime * tan_d) * cos_d * cos_d) / one_minus + r.kappa) *
              cos_d / one_minus;

  out.v = s_dot * std::sqrt(one_minus * one_minus + fs.dl * fs.dl);
  const double dtheta_prime = one_minus / cos_d * out.kappa - r.kappa;
  out.a = s_ddot * one_minus / cos_d +
          s_dot * s_dot / cos_d * (fs.dl * dtheta_prime - kr_l_prime);
  return out;
}

}  // namespace emplan
