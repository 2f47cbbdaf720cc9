#pragma once

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "emplan/geometry.hpp"

namespace emplan::test {

// Straight reference along +x, sampled every 0.5 m.
inline ReferenceLine straight_ref(double length = 100.0) {
  std::vector<RefSample> samples;
  for (double s = 0.0; s <= length + 1e-9; s += 0.5)
    samples.push_back({s, s, 0.0, 0.0, 0.0, 0.0});
  return ReferenceLine::from_samples(std::move(samples));
}

// Left-turning circle of radius R starting at the origin, exact arc length.
inline ReferenceLine circle_ref(double radius = 50.0, double length = 120.0) {
  std::vector<RefSample> samples;
  for (double s = 0.0; s <= length + 1e-9; s += 0.5) {
    const double th = s / radius;
    samples.push_back({s, radius * std::sin(th), radius * (1.0 - std::cos(th)), th,
                       1.0 / radius, 0.0});
  }
  return ReferenceLine::from_samples(std::move(samples));
}

// Linearly growing curvature kappa = c * s, integrated at a fine step.
inline ReferenceLine clothoid_ref(double c = 4e-4, double length = 100.0) {
  std::vector<RefSample> samples;
  const double fine = 1e-3;
  double x = 0.0, y = 0.0;
  double next_sample = 0.0;
  for (double s = 0.0; s <= length + 1e-9; s += fine) {
    const double th = 0.5 * c * s * s;
    if (s + 1e-12 >= next_sample) {
      samples.push_back({next_sample, x, y, th, c * s, c});
      next_sample += 0.5;
    }
    const double th_mid = 0.5 * c * (s + 0.5 * fine) * (s + 0.5 * fine);
    x += fine * std::cos(th_mid);
    y += fine * std::sin(th_mid);
  }
  return ReferenceLine::from_samples(std::move(samples));
}

// Brute-force nearest point over a 1 mm resampling of the reference line.
inline std::array<double, 2> dense_nearest(const ReferenceLine& ref, double x, double y) {
  double best_d2 = 1e18, best_s = 0.0;
  for (double s = 0.0; s <= ref.length() + 1e-12; s += 1e-3) {
    const RefSample r = ref.pose_at(s);
    const double d2 = (r.x - x) * (r.x - x) + (r.y - y) * (r.y - y);
    if (d2 < best_d2) {
      best_d2 = d2;
      best_s = s;
    }
  }
  const RefSample r = ref.pose_at(best_s);
  const double l = (x - r.x) * -std::sin(r.heading) + (y - r.y) * std::cos(r.heading);
  return {best_s, l};
}

}  // namespace emplan::test
