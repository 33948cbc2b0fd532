#include "unveiler/grasp_planner.hpp"

#include <cmath>
#include <numbers>

namespace unveiler {

namespace {

// sample spacing along finger segments, in cells
constexpr double kSamplesPerCell = 2.0;
constexpr double kApertureMargin = 0.01;

struct CellOffset {
  int drow;
  int dcol;
};

struct OrientationStencil {
  std::vector<CellOffset> closing;  // both fingers at their closing position
  std::vector<CellOffset> sweep;    // both fingers over the whole push
};

// Grasp centers sit on cell centers, so a world offset maps to a fixed
// cell offset regardless of which cell the grasp is centered on.
CellOffset to_cell_offset(Vec2 off, double h) {
  return {static_cast<int>(std::floor(0.5 - off.y / h)),
          static_cast<int>(std::floor(0.5 + off.x / h))};
}

void sample_segment(Vec2 lateral, Vec2 d, double t0, double t1, double h,
                    std::vector<CellOffset>& out) {
  const int n = static_cast<int>(std::ceil((t1 - t0) / h * kSamplesPerCell)) + 1;
  for (int i = 0; i < n; ++i) {
    const double t = t0 + (t1 - t0) * i / (n - 1);
    out.push_back(to_cell_offset(lateral + d * t, h));
  }
}

OrientationStencil make_stencil(int k, double aperture, double h) {
  OrientationStencil s;
  const Vec2 d = push_direction(k);
  const Vec2 n = closing_direction(k);
  for (double side : {0.5, -0.5}) {
    const Vec2 lateral = n * (side * aperture);
    sample_segment(lateral, d, -0.5 * kFingerLength, 0.5 * kFingerLength, h, s.closing);
    sample_segment(lateral, d, -0.5 * kFingerLength - kSweepLength, 0.5 * kFingerLength, h,
                   s.sweep);
  }
  return s;
}

}  // namespace

GraspQualityMaps grasp_quality_maps(const Heightmap& heightmap, const SegmentMask& mask) {
  const Workspace& ws = heightmap.workspace;
  const int res = ws.grid_resolution;
  const double h = ws.cell_size();

  GraspQualityMaps out;
  out.workspace = ws;
  for (auto& m : out.maps) m.assign(static_cast<std::size_t>(ws.cell_count()), 0.0);
  if (mask.cells.empty()) return out;

  std::vector<char> own(static_cast<std::size_t>(ws.cell_count()), 0);
  for (int c : mask.cells) own[c] = 1;
  std::vector<char> obstacle(own.size(), 0);
  for (std::size_t c = 0; c < own.size(); ++c) {
    obstacle[c] = !own[c] && heightmap.grid[c] > kObstacleHeight;
  }

  out.estimated_radius = std::sqrt(static_cast<double>(mask.cells.size()) * h * h / std::numbers::pi);
  out.aperture = std::clamp(2.0 * out.estimated_radius + kApertureMargin, kMinAperture, kMaxAperture);
  out.mask_centroid = mask.centroid;
  const double falloff = out.estimated_radius + kMaskDilation * h;

  std::array<OrientationStencil, kOrientations> stencils;
  for (int k = 0; k < kOrientations; ++k) stencils[k] = make_stencil(k, out.aperture, h);

  std::vector<char> region(own.size(), 0);
  for (int c : mask.cells) {
    const int row = c / res;
    const int col = c % res;
    for (int dr = -kMaskDilation; dr <= kMaskDilation; ++dr) {
      for (int dc = -kMaskDilation; dc <= kMaskDilation; ++dc) {
        const int r2 = row + dr;
        const int c2 = col + dc;
        if (r2 >= 0 && r2 < res && c2 >= 0 && c2 < res) region[r2 * res + c2] = 1;
      }
    }
  }

  auto lookup = [&](int row, int col, CellOffset o, bool& outside) -> bool {
    const int r = row + o.drow;
    const int c = col + o.dcol;
    if (r < 0 || r >= res || c < 0 || c >= res) {
      outside = true;
      return false;
    }
    return obstacle[r * res + c] != 0;
  };

  for (int cell = 0; cell < ws.cell_count(); ++cell) {
    if (!region[cell]) continue;
    const int row = cell / res;
    const int col = cell % res;
    const double centering =
        std::max(0.0, 1.0 - distance(ws.cell_center(cell), mask.centroid) / falloff);
    if (centering <= 0.0) continue;
    for (int k = 0; k < kOrientations; ++k) {
      const auto& st = stencils[k];
      bool outside = false;
      bool blocked = false;
      for (const auto& o : st.closing) {
        if (lookup(row, col, o, outside) || outside) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      int hits = 0;
      for (const auto& o : st.sweep) {
        hits += lookup(row, col, o, outside) ? 1 : 0;
        if (outside) break;
      }
      if (outside) continue;
      const double blocked_fraction = static_cast<double>(hits) / static_cast<double>(st.sweep.size());
      out.maps[k][cell] = (1.0 - blocked_fraction) * centering;
    }
  }
  return out;
}

std::optional<PushGraspAction> best_grasp(const GraspQualityMaps& maps, double threshold) {
  double best = -1.0;
  int best_k = -1;
  int best_cell = -1;
  for (int k = 0; k < kOrientations; ++k) {
    const auto& m = maps.maps[k];
    for (std::size_t c = 0; c < m.size(); ++c) {
      if (m[c] > best) {
        best = m[c];
        best_k = k;
        best_cell = static_cast<int>(c);
      }
    }
  }
  if (best_k < 0 || best < threshold || best <= 0.0) return std::nullopt;
  return PushGraspAction{maps.workspace.cell_center(best_cell), best_k, maps.aperture};
}

}  // namespace unveiler
