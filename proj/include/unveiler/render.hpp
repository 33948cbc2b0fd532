#ifndef UNVEILER_RENDER_HPP_
#define UNVEILER_RENDER_HPP_

#include <map>
#include <optional>
#include <string>

#include "unveiler/grasp_planner.hpp"
#include "unveiler/scene.hpp"

namespace unveiler {

struct SceneOverlay {
  std::map<int, double> probabilities;  // object id -> label, printed to 3 decimals
  std::optional<int> selected_id;       // outlined in green
  std::string caption;
};

// Top-down SVG: workspace square, discs shaded darker with each layer, the
// target outlined in red. Works on scenes without objects.
std::string scene_svg(const Scene& scene, const SceneOverlay& overlay = {});
void render_scene(const Scene& scene, const std::string& path, const SceneOverlay& overlay = {});

// binary PGM of a [0, 1] grid, row 0 at the top
std::string grid_pgm(const std::vector<double>& grid, int resolution, double max_value = 1.0);

// one PGM per orientation: <prefix>_k00.pgm .. <prefix>_k15.pgm
void write_grasp_maps(const GraspQualityMaps& maps, const std::string& prefix);

}  // namespace unveiler

#endif  // UNVEILER_RENDER_HPP_
