#include "unveiler/render.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "unveiler/persistence.hpp"

namespace unveiler {

namespace {

constexpr double kPixelsPerMeter = 1600.0;
constexpr double kMargin = 20.0;

std::string fmt(const char* f, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string scene_svg(const Scene& scene, const SceneOverlay& overlay) {
  const double side = scene.workspace.side_length * kPixelsPerMeter;
  const double size = side + 2 * kMargin + (overlay.caption.empty() ? 0.0 : 24.0);
  auto px = [&](double x) { return kMargin + x * kPixelsPerMeter; };
  auto py = [&](double y) { return kMargin + (scene.workspace.side_length - y) * kPixelsPerMeter; };

  int top_layer = 0;
  for (const auto& o : scene.objects) top_layer = std::max(top_layer, o.layer);

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt("%.0f", side + 2 * kMargin)
     << "\" height=\"" << fmt("%.0f", size) << "\">\n";
  os << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << fmt("%.1f", side)
     << "\" height=\"" << fmt("%.1f", side) << "\" fill=\"white\" stroke=\"black\"/>\n";

  // lower layers first so covering discs paint over what they hide
  std::vector<const ObjectInstance*> order;
  for (const auto& o : scene.objects) order.push_back(&o);
  std::stable_sort(order.begin(), order.end(),
                   [](const ObjectInstance* a, const ObjectInstance* b) { return a->layer < b->layer; });
  for (const auto* o : order) {
    const int shade = 200 - (top_layer > 0 ? 120 * o->layer / top_layer : 0);
    std::string stroke = "#444444";
    std::string width = "1";
    if (o->id == scene.target_id) {
      stroke = "red";
      width = "3";
    } else if (overlay.selected_id == o->id) {
      stroke = "green";
      width = "3";
    }
    os << "<circle id=\"obj" << o->id << "\" cx=\"" << fmt("%.2f", px(o->center.x)) << "\" cy=\""
       << fmt("%.2f", py(o->center.y)) << "\" r=\"" << fmt("%.2f", o->radius * kPixelsPerMeter)
       << "\" fill=\"rgb(" << shade << ',' << shade << ',' << shade << ")\" fill-opacity=\"0.85\""
       << " stroke=\"" << stroke << "\" stroke-width=\"" << width << "\"/>\n";
  }
  for (const auto& [id, p] : overlay.probabilities) {
    const ObjectInstance* o = scene.find(id);
    if (o == nullptr) continue;
    os << "<text class=\"prob\" x=\"" << fmt("%.2f", px(o->center.x)) << "\" y=\""
       << fmt("%.2f", py(o->center.y) + 4) << "\" font-size=\"12\" text-anchor=\"middle\">"
       << fmt("%.3f", p) << "</text>\n";
  }
  if (!overlay.caption.empty()) {
    os << "<text x=\"" << kMargin << "\" y=\"" << fmt("%.1f", size - 8) << "\" font-size=\"14\">"
       << overlay.caption << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void render_scene(const Scene& scene, const std::string& path, const SceneOverlay& overlay) {
  write_text(path, scene_svg(scene, overlay));
}

std::string grid_pgm(const std::vector<double>& grid, int resolution, double max_value) {
  std::string out = "P5\n" + std::to_string(resolution) + " " + std::to_string(resolution) + "\n255\n";
  for (double v : grid) {
    const double t = max_value > 0 ? std::clamp(v / max_value, 0.0, 1.0) : 0.0;
    out.push_back(static_cast<char>(static_cast<unsigned char>(t * 255.0 + 0.5)));
  }
  return out;
}

void write_grasp_maps(const GraspQualityMaps& maps, const std::string& prefix) {
  for (int k = 0; k < kOrientations; ++k) {
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "_k%02d.pgm", k);
    write_text(prefix + suffix, grid_pgm(maps.maps[k], maps.workspace.grid_resolution));
  }
}

}  // namespace unveiler
