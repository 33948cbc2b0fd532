#ifndef UNVEILER_PERSISTENCE_HPP_
#define UNVEILER_PERSISTENCE_HPP_

#include <stdexcept>
#include <string>
#include <vector>

#include "unveiler/evalharness.hpp"
#include "unveiler/scene.hpp"
#include "unveiler/selector.hpp"
#include "unveiler/training.hpp"

// File formats. Every record file is JSON lines: one JSON object per line.
//
//   scenes    {"seed", "rng_state", "workspace": {"side_length", "grid_resolution"},
//              "target_id", "objects": [{"id", "x", "y", "radius", "height", "layer"}]}
//   demos     first line {"kind": "demo-header", ...}, then one
//             {"kind": "pair", "episode", "label", "tokens", "target", "scene", "valid"}
//   episodes  {"policy", "seed", "draw", "success", "scene": <scene>, "steps": [...]}
//   checkpoint a single JSON document {"format": "unveiler-selector", "version": 1,
//              "blocks": [{"name", "rows", "cols", "data": [row-major]}]}
//
// Doubles are written with 17 significant digits, so round trips are exact.

namespace unveiler {

class PersistenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointVersion = 1;

std::string scene_to_line(const Scene& scene);
Scene scene_from_line(const std::string& line);

void write_scenes(const std::string& path, const std::vector<Scene>& scenes);
std::vector<Scene> read_scenes(const std::string& path);

void write_demos(const std::string& path, const DemoDataset& data);
DemoDataset read_demos(const std::string& path);

void write_episodes(const std::string& path, const std::vector<EpisodeRecord>& episodes);
std::vector<EpisodeRecord> read_episodes(const std::string& path);

std::string bound_report_to_line(const BoundReport& report);
void write_bound_reports(const std::string& path, const std::vector<BoundReport>& reports);

void save_checkpoint(const std::string& path, const SelectorParameters& params);
// rejects unknown versions, missing or reordered blocks and shape mismatches
SelectorParameters load_checkpoint(const std::string& path);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace unveiler

#endif  // UNVEILER_PERSISTENCE_HPP_
