#ifndef UNVEILER_SCENE_HPP_
#define UNVEILER_SCENE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace unveiler {

class Rng;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2&) const = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

// Square tabletop workspace [0, side] x [0, side] in meters, observed as a
// grid_resolution x grid_resolution top-down grid.
//
// Grid convention is image-like: row 0 is the top edge (y = side) and rows
// grow towards y = 0; column 0 is at x = 0. With this convention the angle
// -atan2(d_row, d_col) of a grid displacement equals its world angle.
struct Workspace {
  double side_length = 0.5;
  int grid_resolution = 100;

  double cell_size() const { return side_length / grid_resolution; }
  int cell_count() const { return grid_resolution * grid_resolution; }
  bool contains(Vec2 p) const {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= side_length && p.y <= side_length;
  }
  // distance from p to the nearest workspace edge
  double boundary_distance(Vec2 p) const {
    return std::min(std::min(p.x, p.y),
                    std::min(side_length - p.x, side_length - p.y));
  }
  Vec2 cell_center(int row, int col) const {
    const double h = cell_size();
    return {(col + 0.5) * h, side_length - (row + 0.5) * h};
  }
  Vec2 cell_center(int cell) const {
    return cell_center(cell / grid_resolution, cell % grid_resolution);
  }
  // fractional grid coordinates (col, row) of a world point
  Vec2 to_grid(Vec2 p) const {
    const double h = cell_size();
    return {p.x / h - 0.5, (side_length - p.y) / h - 0.5};
  }
  Vec2 from_grid(Vec2 g) const {
    const double h = cell_size();
    return {(g.x + 0.5) * h, side_length - (g.y + 0.5) * h};
  }
  // cell containing p, or -1 outside the grid
  int cell_at(Vec2 p) const;

  bool operator==(const Workspace&) const = default;
};

inline constexpr double kMinRadius = 0.02;
inline constexpr double kMaxRadius = 0.045;
inline constexpr double kMinHeight = 0.02;
inline constexpr double kMaxHeight = 0.06;
inline constexpr double kDetectionThreshold = 0.03;
inline constexpr double kPartialVisibleMax = 0.6;
inline constexpr int kMinSceneObjects = 2;
inline constexpr int kMaxSceneObjects = 12;

struct ObjectInstance {
  int id = 0;
  Vec2 center;
  double radius = 0.0;
  double height = 0.0;
  int layer = 0;  // 0 = resting on the table

  bool operator==(const ObjectInstance&) const = default;
};

enum class Occlusion { kPartial, kFull };

// Object size families. Seen and unseen sets use disjoint radius/height
// sub-ranges so evaluation objects never appear during training.
enum class ObjectSet { kAll, kSeen, kUnseen };

struct Scene {
  Workspace workspace;
  std::vector<ObjectInstance> objects;  // kept sorted by ascending id
  int target_id = -1;
  std::uint64_t seed = 0;
  std::uint64_t rng_state = 0;

  const ObjectInstance* find(int id) const;
  const ObjectInstance& object(int id) const;  // throws on unknown id
  const ObjectInstance& target() const { return object(target_id); }
  // position of id in `objects`, throws on unknown id
  std::size_t index_of(int id) const;

  bool operator==(const Scene&) const = default;
};

// Top-down max-height grid (I_g). Stored row-major.
struct Heightmap {
  Workspace workspace;
  std::vector<double> grid;

  double cell_size() const { return workspace.cell_size(); }
  int resolution() const { return workspace.grid_resolution; }
  double at(int row, int col) const {
    return grid[static_cast<std::size_t>(row) * resolution() + col];
  }
  bool operator==(const Heightmap&) const = default;
};

struct GridRect {
  int row_min = 0;
  int col_min = 0;
  int row_max = -1;
  int col_max = -1;
};

struct SegmentMask {
  std::optional<int> object_id;  // absent for merged/unknown segments
  std::vector<int> cells;        // linear cell indices, ascending
  Vec2 centroid;                 // meters
  GridRect bbox;
};

struct OcclusionEdge {
  int above = 0;
  int below = 0;
  double cover_fraction = 0.0;  // covered area of `below` / area of `below`
};

struct OcclusionGraph {
  std::vector<int> nodes;
  std::vector<OcclusionEdge> edges;

  bool has_edge(int above, int below) const;
  // every object with a directed path into `id`
  std::vector<int> ancestors(int id) const;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool discs_overlap(const ObjectInstance& a, const ObjectInstance& b);

// Cells whose centers lie inside the disc, ascending.
std::vector<int> disc_cells(const Workspace& ws, Vec2 center, double radius);

// Per-scene rasterization shared by the observation operations. Owner of a
// cell is the highest-layer disc covering it.
class SceneRaster {
 public:
  explicit SceneRaster(const Scene& scene);

  const std::vector<int>& cells(std::size_t object_index) const {
    return cells_[object_index];
  }
  int owner(int cell) const { return owner_[cell]; }  // object index or -1
  double top_height(std::size_t object_index) const { return top_[object_index]; }
  double visible_fraction(std::size_t object_index) const;
  std::vector<int> visible_cells(std::size_t object_index) const;

 private:
  std::vector<std::vector<int>> cells_;
  std::vector<int> owner_;
  std::vector<double> top_;
};

// Generates a scene of n_objects discs whose target satisfies the occlusion
// condition. Throws std::invalid_argument for n outside [2, 12] and
// GenerationError after 1000 rejected attempts.
Scene generate_scene(int n_objects, Occlusion occlusion, std::uint64_t seed,
                     ObjectSet set = ObjectSet::kAll);

// A scene holding only the target, away from the workspace edges.
Scene isolated_target_scene(std::uint64_t seed, ObjectSet set = ObjectSet::kAll);

Heightmap render_heightmap(const Scene& scene);
double visible_fraction(const Scene& scene, int object_id);
std::vector<SegmentMask> segment(const Scene& scene,
                                 double detection_threshold = kDetectionThreshold);
OcclusionGraph occlusion_graph(const Scene& scene);

SegmentMask make_mask(const Workspace& ws, std::optional<int> object_id, std::vector<int> cells);
// mask over the object's visible cells, regardless of the detection threshold
SegmentMask object_mask(const Scene& scene, int object_id);

// no higher-layer disc overlaps the object
bool is_free(const Scene& scene, int object_id);

bool occlusion_holds(double target_visible, Occlusion occlusion);

// Removes one object without moving anything else.
Scene remove_object(const Scene& scene, int object_id);

// Recomputes layers bottom-up, preserving the existing vertical order:
// each object lands one layer above the highest object it overlaps.
void relayer(Scene& scene);

// relayer() plus a lateral jitter (at most max_jitter meters, drawn from
// rng) on every object that dropped.
void settle(Scene& scene, Rng& rng, double max_jitter);

// checks every Scene and ObjectInstance invariant, returns a reason or empty
std::string validate(const Scene& scene);

const char* to_string(Occlusion occlusion);
Occlusion occlusion_from_string(const std::string& s);
const char* to_string(ObjectSet set);
ObjectSet object_set_from_string(const std::string& s);

}  // namespace unveiler

#endif  // UNVEILER_SCENE_HPP_
