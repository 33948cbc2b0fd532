#include "unveiler/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "unveiler/rng.hpp"

namespace unveiler {

TargetRef make_target_ref(const Scene& scene, std::span<const SegmentMask> masks) {
  TargetRef ref;
  ref.id = scene.target_id;
  ref.position = scene.target().center;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (masks[i].object_id == scene.target_id) {
      ref.mask_index = i;
      ref.position = masks[i].centroid;
    }
  }
  return ref;
}

NormalizedDistances normalized_distances(std::span<const SegmentMask> masks,
                                         const TargetRef& target, const Workspace& ws) {
  const std::size_t n = masks.size();
  NormalizedDistances out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  std::vector<double> edge(n);
  std::vector<double> to_target(n);
  double edge_lo = std::numeric_limits<double>::infinity();
  double edge_hi = -edge_lo;
  double tgt_lo = edge_lo;
  double tgt_hi = -edge_lo;
  for (std::size_t i = 0; i < n; ++i) {
    edge[i] = ws.boundary_distance(masks[i].centroid);
    to_target[i] = distance(masks[i].centroid, target.position);
    if (target.mask_index == i) continue;
    edge_lo = std::min(edge_lo, edge[i]);
    edge_hi = std::max(edge_hi, edge[i]);
    tgt_lo = std::min(tgt_lo, to_target[i]);
    tgt_hi = std::max(tgt_hi, to_target[i]);
  }
  // a spread at rounding level means the distances are equal
  const double spread = kDegenerateSpread * ws.side_length;
  if (edge_hi - edge_lo <= spread) edge_hi = edge_lo;
  if (tgt_hi - tgt_lo <= spread) tgt_hi = tgt_lo;
  auto normalize = [](double v, double lo, double hi) {
    return hi - lo > 0.0 ? (v - lo) / (hi - lo) : 0.0;
  };
  if (edge_lo <= edge_hi) {
    out.edge_lo = edge_lo;
    out.edge_hi = edge_hi;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.edge[i] = normalize(edge[i], edge_lo, edge_hi);
    out.target[i] = normalize(to_target[i], tgt_lo, tgt_hi);
    if (target.mask_index == i) {
      out.edge[i] = std::clamp(out.edge[i], 0.0, 1.0);
      out.target[i] = std::clamp(out.target[i], 0.0, 1.0);
    }
  }
  return out;
}

double NormalizedDistances::normalize_edge(double boundary_distance) const {
  if (edge_hi - edge_lo <= 0.0) return 0.0;
  return std::clamp((boundary_distance - edge_lo) / (edge_hi - edge_lo), 0.0, 1.0);
}

namespace {

int mask_id(const SegmentMask& m) {
  if (!m.object_id) throw std::invalid_argument("mask without object id");
  return *m.object_id;
}

// mask indices of the removal order
std::vector<std::size_t> removal_indices(std::span<const SegmentMask> masks,
                                         const TargetRef& target, const Workspace& ws) {
  if (target.mask_index && masks.size() <= kShortcutMaskCount) return {*target.mask_index};
  const NormalizedDistances nd = normalized_distances(masks, target, ws);
  std::vector<std::size_t> idx;
  std::vector<double> score(masks.size(), 0.0);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (target.mask_index == i) continue;
    idx.push_back(i);
    score[i] = nd.edge[i] + nd.target[i];
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (std::abs(score[a] - score[b]) > kScoreTieTolerance) return score[a] < score[b];
    return mask_id(masks[a]) < mask_id(masks[b]);
  });
  return idx;
}

}  // namespace

RemovalOrder select_obstacle_heuristic(std::span<const SegmentMask> masks,
                                       const TargetRef& target, const Workspace& ws) {
  if (target.mask_index && *target.mask_index >= masks.size()) {
    throw std::invalid_argument("target mask index out of range");
  }
  RemovalOrder order;
  if (masks.empty()) return order;
  for (std::size_t i : removal_indices(masks, target, ws)) order.push_back(mask_id(masks[i]));
  return order;
}

std::optional<std::size_t> heuristic_choice(std::span<const SegmentMask> masks,
                                            const TargetRef& target, const Workspace& ws) {
  if (masks.empty()) return std::nullopt;
  return removal_indices(masks, target, ws).front();
}

int orientation_bin(Vec2 p1, Vec2 p2) {
  const double theta = -std::atan2(p2.y - p1.y, p2.x - p1.x);
  const long bin = std::lround(theta / kOrientationStep);
  return static_cast<int>(((bin % kOrientations) + kOrientations) % kOrientations);
}

std::optional<GraspSample> sample_grasp_pose(const Heightmap& heightmap, const SegmentMask& mask,
                                             const GraspHeuristicConfig& config,
                                             std::uint64_t seed) {
  if (mask.cells.empty()) throw std::invalid_argument("empty mask");
  const Workspace& ws = heightmap.workspace;
  const int res = ws.grid_resolution;

  std::vector<int> valid;
  for (int c = 0; c < ws.cell_count(); ++c) {
    const double h = heightmap.grid[c];
    if (h >= config.d_min && h <= config.d_max) valid.push_back(c);
  }
  if (valid.empty()) return std::nullopt;

  std::vector<char> in_mask(static_cast<std::size_t>(ws.cell_count()), 0);
  for (int c : mask.cells) in_mask[c] = 1;
  std::vector<int> contour;
  for (int c : mask.cells) {
    const int row = c / res;
    const int col = c % res;
    const bool edge = row == 0 || col == 0 || row == res - 1 || col == res - 1 ||
                      !in_mask[c - 1] || !in_mask[c + 1] || !in_mask[c - res] || !in_mask[c + res];
    if (edge) contour.push_back(c);
  }

  const double push_cells = config.d_push / ws.cell_size();
  Rng rng(seed);
  std::vector<int> nearby;
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    const int p1 = valid[rng.index(valid.size())];
    const int r1 = p1 / res;
    const int c1 = p1 % res;
    nearby.clear();
    for (int c : contour) {
      const int cheb = std::max(std::abs(c / res - r1), std::abs(c % res - c1));
      if (cheb < push_cells) nearby.push_back(c);
    }
    if (nearby.empty()) continue;
    const int p2 = nearby[rng.index(nearby.size())];
    GraspSample s;
    s.p1 = {static_cast<double>(c1), static_cast<double>(r1)};
    s.p2 = {static_cast<double>(p2 % res), static_cast<double>(p2 / res)};
    s.action.theta_bin = orientation_bin(s.p1, s.p2);
    s.action.aperture = rng.uniform(kMinAperture, kMaxAperture);
    const Vec2 pos = ws.from_grid(s.p1 * config.center_scale);
    s.action.position = {std::clamp(pos.x, 0.0, ws.side_length),
                         std::clamp(pos.y, 0.0, ws.side_length)};
    return s;
  }
  return std::nullopt;
}

PushGraspAction grasp_pose_heuristic(const Heightmap& heightmap, const SegmentMask& mask,
                                     const GraspHeuristicConfig& config, std::uint64_t seed) {
  const auto s = sample_grasp_pose(heightmap, mask, config, seed);
  return s ? s->action : PushGraspAction::zero();
}

}  // namespace unveiler
