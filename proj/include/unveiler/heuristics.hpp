#ifndef UNVEILER_HEURISTICS_HPP_
#define UNVEILER_HEURISTICS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "unveiler/action.hpp"
#include "unveiler/scene.hpp"

namespace unveiler {

// Object ids, highest removal priority first.
using RemovalOrder = std::vector<int>;

inline constexpr std::size_t kShortcutMaskCount = 3;
inline constexpr double kScoreTieTolerance = 1e-12;
// distance ranges below this fraction of the workspace side count as zero
inline constexpr double kDegenerateSpread = 1e-9;

// The target as the selector sees it: its mask when detected, otherwise
// only the task-given position.
struct TargetRef {
  int id = -1;
  std::optional<std::size_t> mask_index;
  Vec2 position;
};

TargetRef make_target_ref(const Scene& scene, std::span<const SegmentMask> masks);

// Min-max normalized boundary and target distances of each mask centroid.
// Normalization runs over the non-target masks; a constant vector maps to
// zeros. The target's own entries are normalized with the same range and
// clamped to [0, 1].
struct NormalizedDistances {
  std::vector<double> edge;
  std::vector<double> target;
  double edge_lo = 0.0;  // raw boundary-distance range over obstacles
  double edge_hi = 0.0;

  // boundary distance mapped through the same range, clamped to [0, 1]
  double normalize_edge(double boundary_distance) const;
};

NormalizedDistances normalized_distances(std::span<const SegmentMask> masks,
                                         const TargetRef& target, const Workspace& ws);

// Obstacle selection by periphery + target proximity, smallest score first,
// ties by ascending id. With the target detected and at most three masks
// the target itself is returned. An undetected target cannot be picked, so
// its masks are always scored against the task-given target position.
RemovalOrder select_obstacle_heuristic(std::span<const SegmentMask> masks,
                                       const TargetRef& target, const Workspace& ws);

// index into masks of the heuristic's first choice; nullopt when masks is empty
std::optional<std::size_t> heuristic_choice(std::span<const SegmentMask> masks,
                                            const TargetRef& target, const Workspace& ws);

struct GraspHeuristicConfig {
  double d_min = 0.01;
  double d_max = 0.30;
  double d_push = 0.04;
  double center_scale = 1.05;
  int max_attempts = 200;
};

// What the sampler drew, in fractional grid coordinates (col, row).
struct GraspSample {
  PushGraspAction action;
  Vec2 p1;
  Vec2 p2;
};

// Sampled push-grasp pose around the mask boundary. Returns nullopt when no
// valid pixel exists or max_attempts draws found no boundary point nearby.
std::optional<GraspSample> sample_grasp_pose(const Heightmap& heightmap, const SegmentMask& mask,
                                             const GraspHeuristicConfig& config,
                                             std::uint64_t seed);

// sample_grasp_pose() with the all-zero action for the failure cases
PushGraspAction grasp_pose_heuristic(const Heightmap& heightmap, const SegmentMask& mask,
                                     const GraspHeuristicConfig& config, std::uint64_t seed);

// orientation bin of the grid displacement from p1 to p2
int orientation_bin(Vec2 p1, Vec2 p2);

}  // namespace unveiler

#endif  // UNVEILER_HEURISTICS_HPP_
