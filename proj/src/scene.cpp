#include "unveiler/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "unveiler/rng.hpp"

namespace unveiler {

namespace {

constexpr int kMaxGenerationAttempts = 1000;
constexpr double kOverlapTolerance = 1e-9;

// spread of the clutter pile around the target
constexpr double kClutterSpread = 0.16;

struct SizeSample {
  double radius;
  double height;
};

// Radius and height ranges are each split into four equal bands; the seen
// set uses bands {0, 2} and the unseen set bands {1, 3}.
double sample_banded(Rng& rng, double lo, double hi, ObjectSet set) {
  if (set == ObjectSet::kAll) return rng.uniform(lo, hi);
  const double width = (hi - lo) / 4.0;
  const int band = 2 * static_cast<int>(rng.index(2)) + (set == ObjectSet::kUnseen ? 1 : 0);
  return rng.uniform(lo + band * width, lo + (band + 1) * width);
}

SizeSample sample_size(Rng& rng, ObjectSet set) {
  const double r = sample_banded(rng, kMinRadius, kMaxRadius, set);
  const double h = sample_banded(rng, kMinHeight, kMaxHeight, set);
  return {r, h};
}

Vec2 clamp_inside(const Workspace& ws, Vec2 c, double r) {
  return {std::clamp(c.x, r, ws.side_length - r), std::clamp(c.y, r, ws.side_length - r)};
}

Vec2 random_direction(Rng& rng) {
  const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return {std::cos(a), std::sin(a)};
}

// layer for a disc dropped onto the already placed objects
int drop_layer(const std::vector<ObjectInstance>& placed, const ObjectInstance& o) {
  int layer = 0;
  for (const auto& p : placed) {
    if (discs_overlap(p, o)) layer = std::max(layer, p.layer + 1);
  }
  return layer;
}

}  // namespace

int Workspace::cell_at(Vec2 p) const {
  if (!contains(p)) return -1;
  const double h = cell_size();
  const int col = std::min(static_cast<int>(std::floor(p.x / h)), grid_resolution - 1);
  const int row =
      std::min(static_cast<int>(std::floor((side_length - p.y) / h)), grid_resolution - 1);
  return row * grid_resolution + col;
}

const ObjectInstance* Scene::find(int id) const {
  auto it = std::lower_bound(objects.begin(), objects.end(), id,
                             [](const ObjectInstance& o, int v) { return o.id < v; });
  if (it == objects.end() || it->id != id) return nullptr;
  return &*it;
}

const ObjectInstance& Scene::object(int id) const {
  const ObjectInstance* o = find(id);
  if (o == nullptr) throw std::invalid_argument("unknown object id " + std::to_string(id));
  return *o;
}

std::size_t Scene::index_of(int id) const {
  return static_cast<std::size_t>(&object(id) - objects.data());
}

bool OcclusionGraph::has_edge(int above, int below) const {
  return std::any_of(edges.begin(), edges.end(), [&](const OcclusionEdge& e) {
    return e.above == above && e.below == below;
  });
}

std::vector<int> OcclusionGraph::ancestors(int id) const {
  std::vector<int> out;
  std::vector<int> frontier{id};
  while (!frontier.empty()) {
    const int cur = frontier.back();
    frontier.pop_back();
    for (const auto& e : edges) {
      if (e.below == cur && std::find(out.begin(), out.end(), e.above) == out.end()) {
        out.push_back(e.above);
        frontier.push_back(e.above);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool discs_overlap(const ObjectInstance& a, const ObjectInstance& b) {
  return distance(a.center, b.center) < a.radius + b.radius - kOverlapTolerance;
}

std::vector<int> disc_cells(const Workspace& ws, Vec2 center, double radius) {
  std::vector<int> out;
  const Vec2 g = ws.to_grid(center);
  const double rg = radius / ws.cell_size();
  const int res = ws.grid_resolution;
  const int r0 = std::max(0, static_cast<int>(std::floor(g.y - rg)));
  const int r1 = std::min(res - 1, static_cast<int>(std::ceil(g.y + rg)));
  const int c0 = std::max(0, static_cast<int>(std::floor(g.x - rg)));
  const int c1 = std::min(res - 1, static_cast<int>(std::ceil(g.x + rg)));
  const double r2 = radius * radius;
  for (int row = r0; row <= r1; ++row) {
    for (int col = c0; col <= c1; ++col) {
      const Vec2 d = ws.cell_center(row, col) - center;
      if (dot(d, d) <= r2) out.push_back(row * res + col);
    }
  }
  return out;
}

SceneRaster::SceneRaster(const Scene& scene)
    : cells_(scene.objects.size()),
      owner_(static_cast<std::size_t>(scene.workspace.cell_count()), -1),
      top_(scene.objects.size(), 0.0) {
  const auto& objs = scene.objects;
  std::vector<std::size_t> order(objs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return objs[a].layer < objs[b].layer; });
  // stack heights bottom-up along the support chain
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    double base = 0.0;
    for (std::size_t m = 0; m < k; ++m) {
      const std::size_t j = order[m];
      if (objs[j].layer < objs[i].layer && discs_overlap(objs[i], objs[j])) {
        base = std::max(base, top_[j]);
      }
    }
    top_[i] = base + objs[i].height;
    cells_[i] = disc_cells(scene.workspace, objs[i].center, objs[i].radius);
    for (int c : cells_[i]) owner_[c] = static_cast<int>(i);
  }
}

double SceneRaster::visible_fraction(std::size_t object_index) const {
  const auto& cells = cells_[object_index];
  if (cells.empty()) return 0.0;
  const auto visible = std::count_if(cells.begin(), cells.end(), [&](int c) {
    return owner_[c] == static_cast<int>(object_index);
  });
  return static_cast<double>(visible) / static_cast<double>(cells.size());
}

std::vector<int> SceneRaster::visible_cells(std::size_t object_index) const {
  std::vector<int> out;
  for (int c : cells_[object_index]) {
    if (owner_[c] == static_cast<int>(object_index)) out.push_back(c);
  }
  return out;
}

bool occlusion_holds(double target_visible, Occlusion occlusion) {
  if (occlusion == Occlusion::kFull) return target_visible == 0.0;
  return target_visible > 0.0 && target_visible <= kPartialVisibleMax;
}

Scene generate_scene(int n_objects, Occlusion occlusion, std::uint64_t seed, ObjectSet set) {
  if (n_objects < kMinSceneObjects || n_objects > kMaxSceneObjects) {
    throw std::invalid_argument("n_objects must be in [2, 12], got " +
                                std::to_string(n_objects));
  }
  const std::uint64_t stream =
      derive_seed(derive_seed(seed, "scene"),
                  static_cast<std::uint64_t>(n_objects) * 16 +
                      (occlusion == Occlusion::kFull ? 1 : 0) * 4 + static_cast<int>(set));
  Rng rng(stream);
  const Workspace ws;

  for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
    std::vector<SizeSample> sizes(static_cast<std::size_t>(n_objects));
    for (auto& s : sizes) s = sample_size(rng, set);
    if (occlusion == Occlusion::kFull) {
      // the smallest disc is the easiest to bury
      auto smallest = std::min_element(sizes.begin(), sizes.end(),
                                       [](auto& a, auto& b) { return a.radius < b.radius; });
      std::iter_swap(sizes.begin(), smallest);
    }

    std::vector<ObjectInstance> placed;
    ObjectInstance target{0, {rng.uniform(0.13, 0.37), rng.uniform(0.13, 0.37)},
                          sizes[0].radius, sizes[0].height, 0};
    placed.push_back(target);

    const int max_cover = occlusion == Occlusion::kFull ? 3 : 2;
    const int n_cover = rng.uniform_int(1, std::min(max_cover, n_objects - 1));
    std::vector<int> order(static_cast<std::size_t>(n_objects - 1));
    std::iota(order.begin(), order.end(), 1);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.index(i)]);
    }

    for (int idx : order) {
      const SizeSample& s = sizes[static_cast<std::size_t>(idx)];
      Vec2 c;
      if (idx <= n_cover) {
        double reach;
        if (occlusion == Occlusion::kFull) {
          reach = std::max(0.0, s.radius - target.radius) + (n_cover > 1 ? 0.6 * target.radius : 0.0);
        } else {
          reach = s.radius + target.radius;
        }
        c = target.center + random_direction(rng) * rng.uniform(0.0, reach);
      } else {
        c = target.center + random_direction(rng) * (kClutterSpread * std::sqrt(rng.uniform()));
      }
      ObjectInstance o{idx, clamp_inside(ws, c, s.radius), s.radius, s.height, 0};
      o.layer = drop_layer(placed, o);
      placed.push_back(o);
    }

    // random ids so the target is not always first
    std::vector<int> ids(static_cast<std::size_t>(n_objects));
    std::iota(ids.begin(), ids.end(), 0);
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.index(i)]);

    Scene scene;
    scene.workspace = ws;
    scene.seed = seed;
    scene.rng_state = derive_seed(stream, "physics");
    for (auto& o : placed) o.id = ids[static_cast<std::size_t>(o.id)];
    scene.target_id = placed.front().id;
    std::sort(placed.begin(), placed.end(), [](auto& a, auto& b) { return a.id < b.id; });
    scene.objects = std::move(placed);

    const double vis = visible_fraction(scene, scene.target_id);
    // partial scenes also keep the target detectable
    const bool ok = occlusion == Occlusion::kFull
                        ? occlusion_holds(vis, occlusion)
                        : occlusion_holds(vis, occlusion) && vis >= kDetectionThreshold;
    if (ok) return scene;
  }
  std::ostringstream msg;
  msg << "could not generate a " << to_string(occlusion) << " scene with " << n_objects
      << " objects after " << kMaxGenerationAttempts << " attempts";
  throw GenerationError(msg.str());
}

Scene isolated_target_scene(std::uint64_t seed, ObjectSet set) {
  Rng rng(derive_seed(derive_seed(seed, "isolated"), static_cast<std::uint64_t>(set)));
  const SizeSample s = sample_size(rng, set);
  Scene scene;
  scene.seed = seed;
  scene.rng_state = derive_seed(seed, "physics");
  scene.target_id = 0;
  scene.objects.push_back({0, {rng.uniform(0.1, 0.4), rng.uniform(0.1, 0.4)}, s.radius, s.height, 0});
  return scene;
}

Heightmap render_heightmap(const Scene& scene) {
  const SceneRaster raster(scene);
  Heightmap hm;
  hm.workspace = scene.workspace;
  hm.grid.assign(static_cast<std::size_t>(scene.workspace.cell_count()), 0.0);
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const double top = raster.top_height(i);
    for (int c : raster.cells(i)) hm.grid[c] = std::max(hm.grid[c], top);
  }
  return hm;
}

double visible_fraction(const Scene& scene, int object_id) {
  const std::size_t idx = scene.index_of(object_id);
  return SceneRaster(scene).visible_fraction(idx);
}

SegmentMask make_mask(const Workspace& ws, std::optional<int> object_id, std::vector<int> cells) {
  SegmentMask m;
  m.object_id = object_id;
  m.cells = std::move(cells);
  if (m.cells.empty()) return m;
  Vec2 sum;
  m.bbox = {ws.grid_resolution, ws.grid_resolution, -1, -1};
  for (int c : m.cells) {
    sum = sum + ws.cell_center(c);
    const int row = c / ws.grid_resolution;
    const int col = c % ws.grid_resolution;
    m.bbox.row_min = std::min(m.bbox.row_min, row);
    m.bbox.col_min = std::min(m.bbox.col_min, col);
    m.bbox.row_max = std::max(m.bbox.row_max, row);
    m.bbox.col_max = std::max(m.bbox.col_max, col);
  }
  m.centroid = sum * (1.0 / static_cast<double>(m.cells.size()));
  return m;
}

SegmentMask object_mask(const Scene& scene, int object_id) {
  const std::size_t idx = scene.index_of(object_id);
  return make_mask(scene.workspace, object_id, SceneRaster(scene).visible_cells(idx));
}

std::vector<SegmentMask> segment(const Scene& scene, double detection_threshold) {
  const SceneRaster raster(scene);
  std::vector<SegmentMask> masks;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    if (raster.visible_fraction(i) < detection_threshold) continue;
    SegmentMask m = make_mask(scene.workspace, scene.objects[i].id, raster.visible_cells(i));
    if (!m.cells.empty()) masks.push_back(std::move(m));
  }
  return masks;
}

OcclusionGraph occlusion_graph(const Scene& scene) {
  const SceneRaster raster(scene);
  const auto& objs = scene.objects;
  OcclusionGraph g;
  std::vector<char> mark(static_cast<std::size_t>(scene.workspace.cell_count()), 0);
  for (std::size_t a = 0; a < objs.size(); ++a) {
    g.nodes.push_back(objs[a].id);
    for (int c : raster.cells(a)) mark[c] = 1;
    for (std::size_t b = 0; b < objs.size(); ++b) {
      if (objs[a].layer <= objs[b].layer || !discs_overlap(objs[a], objs[b])) continue;
      const auto& below = raster.cells(b);
      if (below.empty()) continue;
      const auto covered = std::count_if(below.begin(), below.end(), [&](int c) { return mark[c] != 0; });
      if (covered == 0) continue;
      g.edges.push_back({objs[a].id, objs[b].id,
                         static_cast<double>(covered) / static_cast<double>(below.size())});
    }
    for (int c : raster.cells(a)) mark[c] = 0;
  }
  return g;
}

bool is_free(const Scene& scene, int object_id) {
  const ObjectInstance& o = scene.object(object_id);
  return std::none_of(scene.objects.begin(), scene.objects.end(), [&](const ObjectInstance& p) {
    return p.layer > o.layer && discs_overlap(p, o);
  });
}

Scene remove_object(const Scene& scene, int object_id) {
  const std::size_t idx = scene.index_of(object_id);
  Scene out = scene;
  out.objects.erase(out.objects.begin() + static_cast<std::ptrdiff_t>(idx));
  return out;
}

void relayer(Scene& scene) {
  auto& objs = scene.objects;
  std::vector<std::size_t> order(objs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return objs[a].layer < objs[b].layer; });
  std::vector<int> new_layer(objs.size(), 0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    int layer = 0;
    for (std::size_t m = 0; m < k; ++m) {
      const std::size_t j = order[m];
      if (discs_overlap(objs[i], objs[j])) layer = std::max(layer, new_layer[j] + 1);
    }
    new_layer[i] = layer;
  }
  for (std::size_t i = 0; i < objs.size(); ++i) objs[i].layer = new_layer[i];
}

void settle(Scene& scene, Rng& rng, double max_jitter) {
  std::vector<int> before;
  before.reserve(scene.objects.size());
  for (const auto& o : scene.objects) before.push_back(o.layer);
  relayer(scene);
  bool moved = false;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    auto& o = scene.objects[i];
    if (o.layer >= before[i]) continue;
    const Vec2 jitter = random_direction(rng) * rng.uniform(0.0, max_jitter);
    o.center = clamp_inside(scene.workspace, o.center + jitter, o.radius);
    moved = true;
  }
  if (moved) relayer(scene);
}

std::string validate(const Scene& scene) {
  const Workspace& ws = scene.workspace;
  if (ws.side_length != 0.5) return "workspace side must be 0.5 m";
  if (ws.grid_resolution < 32) return "grid resolution must be >= 32";
  if (scene.find(scene.target_id) == nullptr) return "target id does not exist";
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& o = scene.objects[i];
    if (i > 0 && scene.objects[i - 1].id >= o.id) return "object ids must be unique and sorted";
    if (o.radius < kMinRadius - 1e-12 || o.radius > kMaxRadius + 1e-12) return "radius out of range";
    if (o.height < kMinHeight - 1e-12 || o.height > kMaxHeight + 1e-12) return "height out of range";
    if (o.layer < 0) return "negative layer";
    const double r = o.radius - 1e-12;
    if (o.center.x < r || o.center.y < r || o.center.x > ws.side_length - r ||
        o.center.y > ws.side_length - r) {
      return "object " + std::to_string(o.id) + " leaves the workspace";
    }
    bool supported = o.layer == 0;
    for (const auto& p : scene.objects) {
      if (&p == &o || !discs_overlap(p, o)) continue;
      if (p.layer == o.layer) return "overlapping objects share a layer";
      if (p.layer == o.layer - 1) supported = true;
    }
    if (!supported) return "object " + std::to_string(o.id) + " has no support";
  }
  return {};
}

const char* to_string(Occlusion occlusion) {
  return occlusion == Occlusion::kFull ? "full" : "partial";
}

Occlusion occlusion_from_string(const std::string& s) {
  if (s == "full") return Occlusion::kFull;
  if (s == "partial") return Occlusion::kPartial;
  throw std::invalid_argument("occlusion must be 'partial' or 'full', got '" + s + "'");
}

const char* to_string(ObjectSet set) {
  switch (set) {
    case ObjectSet::kSeen: return "seen";
    case ObjectSet::kUnseen: return "unseen";
    default: return "all";
  }
}

ObjectSet object_set_from_string(const std::string& s) {
  if (s == "all") return ObjectSet::kAll;
  if (s == "seen") return ObjectSet::kSeen;
  if (s == "unseen") return ObjectSet::kUnseen;
  throw std::invalid_argument("object set must be all, seen or unseen, got '" + s + "'");
}

}  // namespace unveiler
