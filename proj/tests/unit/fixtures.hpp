#ifndef UNVEILER_TESTS_FIXTURES_HPP_
#define UNVEILER_TESTS_FIXTURES_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <vector>

#include "unveiler/scene.hpp"

namespace fixtures {

using unveiler::ObjectInstance;
using unveiler::Scene;
using unveiler::Vec2;

struct Disc {
  double x, y, r, h;
  int layer = 0;
};

// ids are 0..n-1 in the listed order
inline Scene make_scene(std::initializer_list<Disc> discs, int target_id,
                        std::uint64_t seed = 1) {
  Scene s;
  int id = 0;
  for (const Disc& d : discs) {
    s.objects.push_back(ObjectInstance{id++, {d.x, d.y}, d.r, d.h, d.layer});
  }
  s.target_id = target_id;
  s.seed = seed;
  s.rng_state = seed;
  return s;
}

// lens area of two discs, the independent reference for grid counts
inline double overlap_area(double r1, double r2, double d) {
  if (d >= r1 + r2) return 0.0;
  if (d <= std::abs(r1 - r2)) return std::numbers::pi * std::pow(std::min(r1, r2), 2);
  const double a = r1 * r1 * std::acos((d * d + r1 * r1 - r2 * r2) / (2 * d * r1));
  const double b = r2 * r2 * std::acos((d * d + r2 * r2 - r1 * r1) / (2 * d * r2));
  const double c = 0.5 * std::sqrt((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2));
  return a + b - c;
}

// brute-force cell count: cell centers strictly inside the disc
inline int grid_count(const unveiler::Workspace& ws, Vec2 c, double r) {
  int n = 0;
  for (int row = 0; row < ws.grid_resolution; ++row) {
    for (int col = 0; col < ws.grid_resolution; ++col) {
      const Vec2 p = ws.cell_center(row, col);
      if (std::hypot(p.x - c.x, p.y - c.y) < r) ++n;
    }
  }
  return n;
}

}  // namespace fixtures

#endif  // UNVEILER_TESTS_FIXTURES_HPP_
