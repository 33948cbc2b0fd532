#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "unveiler/heuristics.hpp"
#include "unveiler/rng.hpp"

using namespace unveiler;

namespace {

SegmentMask point_mask(int id, Vec2 c) {
  SegmentMask m;
  m.object_id = id;
  m.cells = {id};
  m.centroid = c;
  return m;
}

}  // namespace

TEST_CASE("three or fewer masks pick the target") {
  const Workspace ws;
  std::vector<SegmentMask> masks{point_mask(0, {0.1, 0.1}), point_mask(1, {0.2, 0.2}),
                                 point_mask(2, {0.3, 0.3})};
  const TargetRef t{1, 1, {0.2, 0.2}};
  CHECK(select_obstacle_heuristic(masks, t, ws) == RemovalOrder{1});
  CHECK(heuristic_choice(masks, t, ws) == std::optional<std::size_t>(1));

  std::vector<SegmentMask> alone{point_mask(4, {0.25, 0.25})};
  CHECK(select_obstacle_heuristic(alone, TargetRef{4, 0, {0.25, 0.25}}, ws) == RemovalOrder{4});
  CHECK_FALSE(heuristic_choice(std::vector<SegmentMask>{}, TargetRef{4, {}, {0.2, 0.2}}, ws));
}

TEST_CASE("four-mask layout against hand computation") {
  const Workspace ws;
  // target (0.25,0.25), A (0.05,0.25), B (0.25,0.05), C (0.45,0.45)
  std::vector<SegmentMask> masks{point_mask(0, {0.25, 0.25}), point_mask(1, {0.05, 0.25}),
                                 point_mask(2, {0.25, 0.05}), point_mask(3, {0.45, 0.45})};
  const TargetRef t{0, 0, {0.25, 0.25}};
  // edge: A .05, B .05, C .05 -> all zero; target distance: A .2, B .2,
  // C .2828 -> A 0, B 0, C 1. Scores A 0, B 0, C 1; A before B by id.
  CHECK(select_obstacle_heuristic(masks, t, ws) == RemovalOrder{1, 2, 3});
  CHECK(oracles::removal_order(masks, 0, {0.25, 0.25}, 0.5) == RemovalOrder{1, 2, 3});
}

TEST_CASE("hidden target is scored against its position") {
  const Workspace ws;
  std::vector<SegmentMask> masks{point_mask(1, {0.30, 0.25}), point_mask(2, {0.45, 0.25})};
  const TargetRef t{0, {}, {0.25, 0.25}};
  CHECK(select_obstacle_heuristic(masks, t, ws) == RemovalOrder{1, 2});
}

TEST_CASE("removal order matches the brute-force oracle and scaling") {
  Rng rng(2024);
  for (int k = 0; k < 300; ++k) {
    const oracles::MaskSet s = oracles::random_mask_set(rng);
    const Workspace ws;
    const RemovalOrder got = select_obstacle_heuristic(s.masks, oracles::target_ref_of(s), ws);
    CHECK(got == oracles::removal_order(s.masks, s.target_id, s.target_pos, 0.5));
    if (!(s.masks.size() <= 3 && !s.hidden)) {
      CHECK(std::find(got.begin(), got.end(), s.target_id) == got.end());
    }
    for (double c : {0.5, 2.0, 10.0}) {
      const oracles::MaskSet sc = oracles::scaled(s, c);
      Workspace wsc;
      wsc.side_length = 0.5 * c;
      CAPTURE(k);
      CAPTURE(c);
      CHECK(select_obstacle_heuristic(sc.masks, oracles::target_ref_of(sc), wsc) == got);
    }
  }
}

TEST_CASE("grasp sampler") {
  const Scene s = fixtures::make_scene({{0.25, 0.25, 0.035, 0.03}}, 0);
  const Heightmap hm = render_heightmap(s);
  const auto masks = segment(s);
  const GraspHeuristicConfig cfg;

  SUBCASE("empty height band returns the zero action") {
    Heightmap flat = hm;
    std::fill(flat.grid.begin(), flat.grid.end(), 0.0);
    CHECK(grasp_pose_heuristic(flat, masks[0], cfg, 1).is_zero());
  }
  SUBCASE("orientation bins") {
    CHECK(orientation_bin({10, 10}, {15, 10}) == 0);
    CHECK(orientation_bin({10, 10}, {10, 5}) == 4);  // up in the image is +y
    CHECK(orientation_bin({10, 10}, {5, 10}) == 8);
  }
  SUBCASE("isolated disc, fixed seed") {
    const PushGraspAction a = grasp_pose_heuristic(hm, masks[0], cfg, 11);
    CHECK(a == grasp_pose_heuristic(hm, masks[0], cfg, 11));
    CHECK(a.theta_bin >= 0);
    CHECK(a.theta_bin <= 15);
    CHECK(a.aperture >= 0.03);
    CHECK(a.aperture <= 0.11);
    const auto sample = sample_grasp_pose(hm, masks[0], cfg, 11);
    REQUIRE(sample);
    // p1 lies on the disc (inside the height band)
    const int p1 = static_cast<int>(sample->p1.y) * 100 + static_cast<int>(sample->p1.x);
    CHECK(hm.grid[p1] >= cfg.d_min);
  }
  SUBCASE("reconstructed angle within half a bin") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const auto sample = sample_grasp_pose(hm, masks[0], cfg, seed);
      REQUIRE(sample);
      const Vec2 d = sample->p2 - sample->p1;
      if (d.x == 0.0 && d.y == 0.0) continue;
      const double exact = -std::atan2(d.y, d.x);
      double diff = std::remainder(exact - sample->action.theta_bin * kOrientationStep,
                                   2 * std::numbers::pi);
      CHECK(std::abs(diff) <= kOrientationStep / 2 + 1e-12);
    }
  }
}
