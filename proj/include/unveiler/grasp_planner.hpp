#ifndef UNVEILER_GRASP_PLANNER_HPP_
#define UNVEILER_GRASP_PLANNER_HPP_

#include <array>
#include <optional>
#include <vector>

#include "unveiler/action.hpp"
#include "unveiler/scene.hpp"

namespace unveiler {

// heightmap cells above this count as clutter the fingers collide with
inline constexpr double kObstacleHeight = 0.005;
inline constexpr double kDefaultGraspThreshold = 0.5;
inline constexpr int kMaskDilation = 2;

// Per-orientation grasp quality over the heightmap for one selected object.
// maps[k][cell] scores a grasp closing at that cell with orientation k.
struct GraspQualityMaps {
  Workspace workspace;
  std::array<std::vector<double>, kOrientations> maps;
  double aperture = kMinAperture;      // 2 * estimated radius + margin
  double estimated_radius = 0.0;
  Vec2 mask_centroid;
};

// Analytic stand-in for the learned action decoder. A placement scores
//   (1 - blocked fraction of the swept finger path) * centering
// where centering falls linearly from 1 at the mask centroid to 0 at the
// dilated mask edge. Placements whose closing fingers land on clutter or
// whose fingers leave the workspace score 0, as do cells outside the mask
// dilated by two cells.
GraspQualityMaps grasp_quality_maps(const Heightmap& heightmap, const SegmentMask& mask);

// Global argmax; ties go to the lowest orientation, then row-major order.
std::optional<PushGraspAction> best_grasp(const GraspQualityMaps& maps,
                                           double threshold = kDefaultGraspThreshold);

}  // namespace unveiler

#endif  // UNVEILER_GRASP_PLANNER_HPP_
