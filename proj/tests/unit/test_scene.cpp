#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "unveiler/rng.hpp"
#include "unveiler/scene.hpp"

using namespace unveiler;
using fixtures::make_scene;

TEST_CASE("generated scenes honor count and occlusion") {
  const Scene a = generate_scene(2, Occlusion::kPartial, 7);
  CHECK(a.objects.size() == 2);
  const double va = visible_fraction(a, a.target_id);
  CHECK(va > 0.0);
  CHECK(va <= 0.6);

  const Scene b = generate_scene(6, Occlusion::kFull, 1);
  CHECK(b.objects.size() == 6);
  CHECK(visible_fraction(b, b.target_id) == 0.0);

  CHECK(generate_scene(9, Occlusion::kPartial, 3) == generate_scene(9, Occlusion::kPartial, 3));
  CHECK(validate(b).empty());
}

TEST_CASE("generation rejects object counts outside the range") {
  CHECK_THROWS_AS(generate_scene(1, Occlusion::kPartial, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_scene(13, Occlusion::kFull, 1), std::invalid_argument);
}

TEST_CASE("heightmap of a single disc") {
  const Scene s = make_scene({{0.25, 0.25, 0.04, 0.03}}, 0);
  const Heightmap hm = render_heightmap(s);
  const double mx = *std::max_element(hm.grid.begin(), hm.grid.end());
  CHECK(mx == doctest::Approx(0.03).epsilon(1e-12));
  const auto covered = std::count_if(hm.grid.begin(), hm.grid.end(), [](double v) { return v > 0; });
  const double expected = std::numbers::pi * std::pow(0.04 / 0.005, 2);
  CHECK(std::abs(covered - expected) <= 0.08 * expected);
  // empty region
  CHECK(hm.at(0, 0) == 0.0);
  CHECK(render_heightmap(s) == hm);
}

TEST_CASE("stacked disc reads the summed height") {
  const Scene s = make_scene({{0.25, 0.25, 0.045, 0.02}, {0.25, 0.25, 0.02, 0.03, 1}}, 0);
  const Heightmap hm = render_heightmap(s);
  for (int cell : disc_cells(s.workspace, {0.25, 0.25}, 0.02)) {
    CHECK(hm.grid[cell] == doctest::Approx(0.05).epsilon(1e-12));
  }
  const int rim = s.workspace.cell_at({0.25 + 0.035, 0.25});
  CHECK(hm.grid[rim] == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("visible fraction against the lens-area oracle") {
  SUBCASE("uncovered") {
    const Scene s = make_scene({{0.1, 0.1, 0.03, 0.03}, {0.4, 0.4, 0.03, 0.03}}, 0);
    CHECK(visible_fraction(s, 0) == 1.0);
  }
  SUBCASE("fully under a larger disc") {
    const Scene s = make_scene({{0.25, 0.25, 0.02, 0.03}, {0.25, 0.25, 0.045, 0.02, 1}}, 0);
    CHECK(visible_fraction(s, 0) == 0.0);
  }
  SUBCASE("half covered") {
    const double r = 0.04;
    // bisect the offset at which the lens is half of the disc
    double lo = 0.0, hi = 2 * r;
    for (int i = 0; i < 100; ++i) {
      const double mid = 0.5 * (lo + hi);
      (fixtures::overlap_area(r, r, mid) > 0.5 * std::numbers::pi * r * r ? lo : hi) = mid;
    }
    const Scene s = make_scene({{0.25, 0.25, r, 0.03}, {0.25 + lo, 0.25, r, 0.03, 1}}, 0);
    CHECK(visible_fraction(s, 0) == doctest::Approx(0.5).epsilon(0.1));
    CHECK(std::abs(visible_fraction(s, 0) - 0.5) <= 0.05);
  }
}

TEST_CASE("segmentation") {
  SUBCASE("three separate objects give their footprints") {
    const Scene s = make_scene(
        {{0.1, 0.1, 0.03, 0.03}, {0.25, 0.25, 0.03, 0.03}, {0.4, 0.4, 0.03, 0.03}}, 1);
    const auto masks = segment(s);
    REQUIRE(masks.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(masks[i].object_id == static_cast<int>(i));
      CHECK(masks[i].cells == disc_cells(s.workspace, s.objects[i].center, s.objects[i].radius));
    }
  }
  SUBCASE("hidden target has no mask") {
    const Scene s = make_scene({{0.25, 0.25, 0.02, 0.03}, {0.25, 0.25, 0.045, 0.02, 1}}, 0);
    const auto masks = segment(s);
    REQUIRE(masks.size() == 1);
    CHECK(masks[0].object_id == 1);
  }
  SUBCASE("object under the detection threshold is dropped") {
    // a sliver of 2% stays visible
    const double r = 0.04;
    double lo = 0.0, hi = 2 * r;
    for (int i = 0; i < 100; ++i) {
      const double mid = 0.5 * (lo + hi);
      (fixtures::overlap_area(r, 0.045, mid) > 0.98 * std::numbers::pi * r * r ? lo : hi) = mid;
    }
    const Scene s = make_scene({{0.25, 0.25, r, 0.03}, {0.25 + lo, 0.25, 0.045, 0.03, 1}}, 0);
    const double v = visible_fraction(s, 0);
    REQUIRE(v > 0.0);
    REQUIRE(v < kDetectionThreshold);
    const auto masks = segment(s);
    REQUIRE(masks.size() == 1);
    CHECK(masks[0].object_id == 1);
  }
}

TEST_CASE("occlusion graph") {
  SUBCASE("no overlaps") {
    const Scene s = make_scene({{0.1, 0.1, 0.03, 0.03}, {0.4, 0.4, 0.03, 0.03}}, 0);
    CHECK(occlusion_graph(s).edges.empty());
  }
  SUBCASE("chain") {
    const Scene s = make_scene(
        {{0.25, 0.25, 0.03, 0.03}, {0.29, 0.25, 0.03, 0.03, 1}, {0.33, 0.25, 0.03, 0.03, 2}}, 0);
    const OcclusionGraph g = occlusion_graph(s);
    CHECK(g.has_edge(2, 1));
    CHECK(g.has_edge(1, 0));
    CHECK_FALSE(g.has_edge(0, 1));
    auto anc = g.ancestors(0);
    std::sort(anc.begin(), anc.end());
    CHECK(anc == std::vector<int>{1, 2});
  }
  SUBCASE("full cover") {
    const Scene s = make_scene({{0.25, 0.25, 0.02, 0.03}, {0.25, 0.25, 0.045, 0.02, 1}}, 0);
    const OcclusionGraph g = occlusion_graph(s);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0].cover_fraction == 1.0);
  }
}

TEST_CASE("relayer drops unsupported objects") {
  Scene s = make_scene({{0.1, 0.1, 0.03, 0.03}, {0.4, 0.4, 0.03, 0.03, 1}}, 0);
  relayer(s);
  CHECK(s.object(1).layer == 0);
  CHECK(validate(s).empty());
}

TEST_CASE("observation properties over random scenes") {
  Rng rng(99);
  for (int k = 0; k < 120; ++k) {
    const int n = rng.uniform_int(2, 12);
    const Occlusion occ = rng.uniform() < 0.5 ? Occlusion::kPartial : Occlusion::kFull;
    const Scene s = generate_scene(n, occ, rng.next_u64());
    REQUIRE(validate(s).empty());
    CHECK(occlusion_holds(visible_fraction(s, s.target_id), occ));

    const auto masks = segment(s);
    CHECK(masks.size() <= s.objects.size());
    bool all_visible = true;
    for (const auto& o : s.objects) {
      const double v = visible_fraction(s, o.id);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      all_visible = all_visible && v >= kDetectionThreshold;
    }
    if (all_visible) CHECK(masks.size() == s.objects.size());

    for (const auto& e : occlusion_graph(s).edges) {
      CHECK(s.object(e.above).layer > s.object(e.below).layer);
      CHECK(e.cover_fraction > 0.0);
      CHECK(e.cover_fraction <= 1.0);
    }

    const int gone = s.objects[rng.index(s.objects.size())].id;
    if (gone == s.target_id) continue;
    const Scene t = remove_object(s, gone);
    for (const auto& o : t.objects) {
      CHECK(visible_fraction(t, o.id) >= visible_fraction(s, o.id));
    }
  }
}
