#ifndef UNVEILER_TESTS_ORACLES_HPP_
#define UNVEILER_TESTS_ORACLES_HPP_

// Independent reference computations shared by the unit and acceptance
// suites. None of these call into the code under test beyond plain data
// types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "unveiler/heuristics.hpp"
#include "unveiler/rng.hpp"
#include "unveiler/scene.hpp"
#include "unveiler/selector.hpp"

namespace oracles {

using namespace unveiler;

// Removal order recomputed from scratch: periphery plus target proximity,
// each min-max scaled over the obstacles, smallest first, ids break ties.
inline std::vector<int> removal_order(const std::vector<SegmentMask>& masks, int target_id,
                                      Vec2 target_pos, double side) {
  bool target_seen = false;
  for (const auto& m : masks) target_seen = target_seen || m.object_id == target_id;
  if (target_seen && masks.size() <= 3) return {target_id};

  struct Row {
    int id;
    double edge, tgt, score;
  };
  std::vector<Row> rows;
  for (const auto& m : masks) {
    if (m.object_id == target_id) continue;
    const Vec2 c = m.centroid;
    const double edge = std::min({c.x, c.y, side - c.x, side - c.y});
    const double tgt = std::sqrt((c.x - target_pos.x) * (c.x - target_pos.x) +
                                 (c.y - target_pos.y) * (c.y - target_pos.y));
    rows.push_back({*m.object_id, edge, tgt, 0.0});
  }
  if (rows.empty()) return {};
  auto scale = [&](double Row::*f) {
    double lo = rows[0].*f, hi = rows[0].*f;
    for (const auto& r : rows) {
      lo = std::min(lo, r.*f);
      hi = std::max(hi, r.*f);
    }
    // spreads at rounding level are treated as all-equal
    for (auto& r : rows) r.score += hi - lo > 1e-9 * side ? (r.*f - lo) / (hi - lo) : 0.0;
  };
  scale(&Row::edge);
  scale(&Row::tgt);
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (std::abs(a.score - b.score) > 1e-12) return a.score < b.score;
    return a.id < b.id;
  });
  std::vector<int> out;
  for (const auto& r : rows) out.push_back(r.id);
  return out;
}

// Random mask set with centroids on a coarse lattice so ties are common.
// Returns the masks and the target position; the target mask is present
// unless hidden is set.
struct MaskSet {
  std::vector<SegmentMask> masks;
  int target_id = 0;
  Vec2 target_pos;
  bool hidden = false;
};

inline MaskSet random_mask_set(Rng& rng, double side = 0.5) {
  MaskSet s;
  const int n = rng.uniform_int(1, 12);
  s.hidden = n > 1 && rng.uniform() < 0.3;
  const bool lattice = rng.uniform() < 0.5;
  auto coord = [&] {
    return lattice ? side * (1 + static_cast<int>(rng.index(9))) / 10.0
                   : rng.uniform(0.02 * side, 0.98 * side);
  };
  s.target_id = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
  for (int id = 0; id < n; ++id) {
    const Vec2 c{coord(), coord()};
    if (id == s.target_id) {
      s.target_pos = c;
      if (s.hidden) continue;
    }
    SegmentMask m;
    m.object_id = id;
    m.cells = {id};
    m.centroid = c;
    s.masks.push_back(m);
  }
  return s;
}

inline MaskSet scaled(const MaskSet& s, double c) {
  MaskSet out = s;
  out.target_pos = s.target_pos * c;
  for (auto& m : out.masks) m.centroid = m.centroid * c;
  return out;
}

inline TargetRef target_ref_of(const MaskSet& s) {
  TargetRef t;
  t.id = s.target_id;
  t.position = s.target_pos;
  for (std::size_t i = 0; i < s.masks.size(); ++i) {
    if (s.masks[i].object_id == s.target_id) t.mask_index = i;
  }
  return t;
}

// Random observation with n tokens, the last `invalid` of them masked out.
inline Observation random_observation(Rng& rng, int n, int invalid = 0) {
  Observation obs;
  auto fill = [&](ObjectToken& t) {
    for (double& v : t) v = rng.uniform(-1.0, 1.0);
  };
  for (int i = 0; i < n; ++i) {
    ObjectToken t;
    fill(t);
    obs.tokens.push_back(t);
    obs.valid.push_back(i < n - invalid ? 1 : 0);
  }
  fill(obs.target);
  for (double& v : obs.scene) v = rng.uniform(0.0, 1.0);
  return obs;
}

inline SelectorParameters perturbed(const SelectorParameters& p, Rng& rng, double scale) {
  SelectorParameters q = p;
  for (double& v : q.values) v += rng.uniform(-scale, scale);
  return q;
}

struct FdReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Central differences of batch_loss against grad() on the given
// coordinates (every coordinate when `coords` is empty). The relative error
// uses max(|a|, |n|, floor) in the denominator so exact zeros compare sanely.
inline FdReport finite_difference(const SelectorParameters& params,
                                  const std::vector<TrainingSample>& batch,
                                  std::vector<std::size_t> coords, double h = 1e-5,
                                  double floor = 1e-6) {
  const SelectorParameters g = grad(params, batch).gradient;
  if (coords.empty()) {
    coords.resize(params.values.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  }
  FdReport rep;
  SelectorParameters p = params;
  for (std::size_t i : coords) {
    const double v = p.values[i];
    p.values[i] = v + h;
    const double up = batch_loss(p, batch).loss;
    p.values[i] = v - h;
    const double down = batch_loss(p, batch).loss;
    p.values[i] = v;
    const double num = (up - down) / (2 * h);
    const double ana = g.values[i];
    const double denom = std::max({std::abs(num), std::abs(ana), floor});
    const double rel = std::abs(num - ana) / denom;
    if (rel > rep.max_rel_error) {
      rep.max_rel_error = rel;
      rep.worst_index = i;
    }
    ++rep.checked;
  }
  return rep;
}

}  // namespace oracles

#endif  // UNVEILER_TESTS_ORACLES_HPP_
