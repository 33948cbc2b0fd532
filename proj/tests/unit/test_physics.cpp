#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "unveiler/grasp_planner.hpp"
#include "unveiler/physics.hpp"
#include "unveiler/rng.hpp"

using namespace unveiler;
using fixtures::make_scene;

namespace {

bool segment_hits_disc(const Segment& s, const ObjectInstance& o) {
  return distance(closest_point(s, o.center), o.center) < o.radius;
}

}  // namespace

TEST_CASE("clear grasp on an isolated disc") {
  const Scene s = make_scene({{0.25, 0.25, 0.03, 0.03}}, 0);
  const PushGraspAction a{{0.25, 0.25}, 3, 2 * 0.03 + 0.01};
  const ExecutionOutcome out = execute_push_grasp(s, a, 0);
  CHECK(out.grasped_ids == std::vector<int>{0});
  CHECK(out.stable);
  CHECK(grasp_success(out, 0));
  CHECK(out.new_scene.objects.empty());
  // determinism
  const ExecutionOutcome again = execute_push_grasp(s, a, 0);
  CHECK(again.new_scene == out.new_scene);
  CHECK(again.grasped_ids == out.grasped_ids);
}

TEST_CASE("two discs between the fingers fail") {
  const Scene s = make_scene({{0.25, 0.229, 0.02, 0.03}, {0.25, 0.271, 0.02, 0.03}}, 0);
  // push along +x, fingers close along y
  const PushGraspAction a{{0.25, 0.25}, 0, 0.11};
  const ExecutionOutcome out = execute_push_grasp(s, a, 0);
  CHECK(out.grasped_ids.size() == 2);
  CHECK_FALSE(grasp_success(out, 0));
  CHECK(out.new_scene.objects.size() == 2);
}

TEST_CASE("pinned object cannot be grasped") {
  const Scene s = make_scene({{0.25, 0.25, 0.03, 0.03}, {0.28, 0.25, 0.03, 0.03, 1}}, 0);
  const PushGraspAction a{{0.25, 0.25}, 4, 0.07};
  const ExecutionOutcome out = execute_push_grasp(s, a, 0);
  CHECK(std::find(out.grasped_ids.begin(), out.grasped_ids.end(), 0) == out.grasped_ids.end());
  CHECK_FALSE(grasp_success(out, 0));
}

TEST_CASE("grasp success criteria") {
  ExecutionOutcome o;
  o.grasped_ids = {4};
  o.stable = true;
  CHECK(grasp_success(o, 4));
  CHECK_FALSE(grasp_success(o, 5));
  o.stable = false;
  CHECK_FALSE(grasp_success(o, 4));
}

TEST_CASE("invalid actions are rejected") {
  const Scene s = make_scene({{0.25, 0.25, 0.03, 0.03}}, 0);
  CHECK_THROWS_AS(execute_push_grasp(s, {{0.25, 0.25}, 16, 0.05}, 0), std::invalid_argument);
  CHECK_THROWS_AS(execute_push_grasp(s, {{0.25, 0.25}, 0, 0.2}, 0), std::invalid_argument);
  CHECK_THROWS_AS(execute_push_grasp(s, {{0.25, 0.25}, 0, 0.05}, 9), std::invalid_argument);
}

TEST_CASE("accessibility") {
  CHECK(accessible(make_scene({{0.25, 0.25, 0.03, 0.03}}, 0), 0));
  CHECK_FALSE(accessible(make_scene({{0.25, 0.25, 0.02, 0.03}, {0.25, 0.25, 0.045, 0.02, 1}}, 0), 0));

  SUBCASE("ringed by six touching neighbours") {
    const double r = 0.03;
    Scene s = make_scene({{0.25, 0.25, r, 0.04}}, 0);
    for (int k = 0; k < 6; ++k) {
      const double a = k * std::numbers::pi / 3.0;
      s.objects.push_back(
          {k + 1, {0.25 + 2.02 * r * std::cos(a), 0.25 + 2.02 * r * std::sin(a)}, r, 0.04, 0});
    }
    REQUIRE(validate(s).empty());
    // exhaustive: every orientation, closing point on a fine lattice over the
    // disc, aperture of the planner; some finger sweep always meets a neighbour
    const double aperture = 2 * r + 0.01;
    bool any_clear = false;
    for (int k = 0; k < kOrientations && !any_clear; ++k) {
      for (double dx = -r; dx <= r && !any_clear; dx += 0.0025) {
        for (double dy = -r; dy <= r && !any_clear; dy += 0.0025) {
          const PushGraspAction act{{0.25 + dx, 0.25 + dy}, k, aperture};
          bool hit = false;
          for (const auto& sweep : finger_sweeps(act)) {
            for (std::size_t i = 1; i < s.objects.size(); ++i) {
              hit = hit || segment_hits_disc(sweep, s.objects[i]);
            }
          }
          any_clear = !hit;
        }
      }
    }
    CHECK_FALSE(any_clear);
    CHECK(is_free(s, 0));
    CHECK_FALSE(accessible(s, 0));
  }
}

TEST_CASE("execution invariants over random grasps") {
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    const Scene s = generate_scene(rng.uniform_int(2, 12), Occlusion::kPartial, rng.next_u64());
    const auto& o = s.objects[rng.index(s.objects.size())];
    const PushGraspAction a{o.center + Vec2{rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)},
                            static_cast<int>(rng.index(kOrientations)),
                            rng.uniform(kMinAperture, kMaxAperture)};
    if (!a.valid(s.workspace)) continue;
    const ExecutionOutcome out = execute_push_grasp(s, a, o.id);
    const bool ok = grasp_success(out, o.id);
    if (ok) CHECK(out.grasped_ids.size() == 1);
    if (!is_free(s, o.id)) CHECK_FALSE(ok);
    CHECK(out.new_scene.objects.size() == s.objects.size() - (ok ? 1 : 0));
    for (int id : out.grasped_ids) CHECK(s.find(id) != nullptr);
    for (const auto& m : out.new_scene.objects) {
      CHECK(s.workspace.contains(m.center));
    }
    CHECK(validate(out.new_scene).empty());
  }
}

TEST_CASE("planner grasps on isolated objects always succeed") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scene s = isolated_target_scene(seed);
    const auto masks = segment(s);
    REQUIRE(masks.size() == 1);
    const auto act = best_grasp(grasp_quality_maps(render_heightmap(s), masks[0]));
    REQUIRE(act.has_value());
    CHECK(grasp_success(execute_push_grasp(s, *act, s.target_id), s.target_id));
  }
}
