#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "unveiler/evalharness.hpp"

using namespace unveiler;
using fixtures::make_scene;

namespace {

EpisodeRecord fake_episode(bool success, int steps) {
  EpisodeRecord e;
  e.success = success;
  e.steps.resize(steps);
  return e;
}

const std::vector<PolicyKind> kAllKinds{
    PolicyKind::kRandomValid, PolicyKind::kNearestToTarget, PolicyKind::kHeuristic,
    PolicyKind::kIl,          PolicyKind::kPpo,             PolicyKind::kMultiShot,
    PolicyKind::kImpoverished, PolicyKind::kOracle};

}  // namespace

TEST_CASE("metrics arithmetic") {
  std::vector<EpisodeRecord> eps;
  for (int i = 0; i < 30; ++i) eps.push_back(fake_episode(i < 27, i < 27 ? 2 : 15));
  const MetricsRow row = summarize(eps, "6-9", Occlusion::kFull, "heuristic");
  CHECK(row.completion_pct == doctest::Approx(90.0));
  CHECK(row.mean_steps == doctest::Approx((27 * 2 + 3 * 15) / 30.0));
  CHECK(row.episodes == 30);

  const MetricsRow none = summarize({}, "2-6", Occlusion::kPartial, "heuristic");
  CHECK(none.episodes == 0);
  CHECK(none.completion_pct == 0.0);
  CHECK(none.mean_steps == 0.0);

  EvalGrid g = parse_grid("2-6");
  g.episodes = 0;
  g.occlusions = {Occlusion::kPartial};
  const EvalResult r = evaluate(Policy{PolicyKind::kHeuristic}, g, EnvConfig{}, 1);
  REQUIRE(r.table.rows.size() == 1);
  CHECK(r.table.rows[0].episodes == 0);
  CHECK(r.table.to_csv().starts_with(kMetricsHeader));
}

TEST_CASE("grid parsing") {
  CHECK(parse_grid("default").bins.size() == 3);
  const EvalGrid g = parse_grid("2-6,9-12");
  REQUIRE(g.bins.size() == 2);
  CHECK(g.bins[1].label() == "9-12");
  CHECK_THROWS(parse_grid("1-6"));
  CHECK_THROWS(parse_grid("6"));
  CHECK_THROWS(parse_grid("9-6"));
}

TEST_CASE("policy names round trip") {
  for (PolicyKind k : kAllKinds) CHECK(policy_from_string(to_string(k)) == k);
  CHECK_THROWS(policy_from_string("greedy"));
}

TEST_CASE("isolated target takes one step under every policy") {
  const SelectorParameters params = init_params(1);
  for (PolicyKind k : kAllKinds) {
    const Policy pol{k, &params};
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const EpisodeRecord e = run_episode(pol, isolated_target_scene(seed), EnvConfig{}, seed);
      CHECK(e.success);
      CHECK(e.step_count() == 1);
    }
  }
}

TEST_CASE("heuristic acts on the target when three masks show") {
  const Scene s = make_scene(
      {{0.25, 0.25, 0.03, 0.03}, {0.1, 0.1, 0.03, 0.03}, {0.4, 0.4, 0.03, 0.03}}, 0);
  const EpisodeRecord e = run_episode(Policy{PolicyKind::kHeuristic}, s, EnvConfig{}, 2);
  REQUIRE(!e.steps.empty());
  CHECK(e.steps[0].selected_id == 0);
  CHECK(e.success);
}

TEST_CASE("episodes are reproducible and bounded") {
  const SelectorParameters params = init_params(4);
  for (PolicyKind k : {PolicyKind::kRandomValid, PolicyKind::kHeuristic, PolicyKind::kPpo,
                       PolicyKind::kMultiShot}) {
    const Policy pol{k, &params};
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      const Scene s = generate_scene(8, Occlusion::kFull, seed);
      const EpisodeRecord a = run_episode(pol, s, EnvConfig{}, seed);
      const EpisodeRecord b = run_episode(pol, s, EnvConfig{}, seed);
      REQUIRE(a.steps.size() == b.steps.size());
      for (std::size_t i = 0; i < a.steps.size(); ++i) {
        CHECK(a.steps[i].selected_id == b.steps[i].selected_id);
        CHECK(a.steps[i].action == b.steps[i].action);
        CHECK(a.steps[i].reward == b.steps[i].reward);
      }
      CHECK(a.step_count() <= 15);
      if (a.success) {
        CHECK(a.steps.back().selected_id == s.target_id);
        CHECK(a.steps.back().success);
      }
    }
  }
  CHECK_THROWS_AS(run_episode(Policy{PolicyKind::kIl}, generate_scene(3, Occlusion::kFull, 1),
                              EnvConfig{}, 1),
                  std::invalid_argument);
}

TEST_CASE("metrics recompute from the records") {
  EvalGrid g = parse_grid("2-6");
  g.episodes = 6;
  const EvalResult r = evaluate(Policy{PolicyKind::kRandomValid}, g, EnvConfig{}, 3);
  REQUIRE(r.episodes.size() == 12);
  for (const auto& row : r.table.rows) {
    std::vector<EpisodeRecord> cell;
    for (const auto& e : r.episodes) {
      if (e.draw.occlusion == row.occlusion) cell.push_back(e);
    }
    const MetricsRow again = summarize(cell, row.density_bin, row.occlusion, row.policy);
    CHECK(again.completion_pct == row.completion_pct);
    CHECK(again.mean_steps == row.mean_steps);
  }
}

TEST_CASE("oracle on hand-built scenes") {
  const RewardConfig rc;
  SUBCASE("unoccluded target") {
    const Oracle o(make_scene({{0.25, 0.25, 0.03, 0.03}, {0.1, 0.1, 0.03, 0.03}}, 0), rc);
    CHECK(o.min_steps() == 1);
    CHECK(o.optimal_sequence() == std::vector<int>{0});
    CHECK(o.optimal_actions(0) == std::vector<int>{0});
  }
  SUBCASE("one occluder") {
    const Oracle o(make_scene({{0.25, 0.25, 0.03, 0.03}, {0.27, 0.25, 0.03, 0.03, 1}}, 0), rc);
    CHECK(o.min_steps() == 2);
    CHECK(o.optimal_sequence() == std::vector<int>{1, 0});
  }
  SUBCASE("chain of occluders") {
    // ids: target 0, B 1 on the target, A 2 on B
    const Scene s = make_scene({{0.25, 0.25, 0.03, 0.03},
                                {0.28, 0.25, 0.03, 0.03, 1},
                                {0.33, 0.25, 0.03, 0.03, 2}},
                               0);
    REQUIRE(validate(s).empty());
    const Oracle o(s, rc);
    CHECK(o.min_steps() == 3);
    CHECK(o.optimal_sequence() == std::vector<int>{2, 1, 0});
    CHECK(o.max_regret() > 0.0);
    const OracleSummary sum = optimal_removal_bruteforce(s, rc);
    CHECK(sum.min_steps == 3);
    CHECK(sum.value == doctest::Approx(o.value()));
  }
  SUBCASE("longer chains need one step per link") {
    for (int len = 1; len <= 5; ++len) {
      Scene s = make_scene({{0.1, 0.25, 0.03, 0.03}}, 0);
      for (int k = 1; k <= len; ++k) {
        s.objects.push_back({k, {0.1 + 0.035 * k, 0.25}, 0.03, 0.03, k});
      }
      REQUIRE(validate(s).empty());
      CHECK(Oracle(s, rc).min_steps() == len + 1);
    }
  }
  SUBCASE("too many objects") {
    CHECK_THROWS_AS(Oracle(generate_scene(7, Occlusion::kPartial, 1), rc), OracleError);
  }
}

TEST_CASE("bound check") {
  BoundConfig cfg;
  cfg.scenes = 12;
  SUBCASE("oracle with idealized execution has no gap") {
    cfg.env.execution = ExecutionMode::kIdealized;
    const BoundReport r = bound_check(Policy{PolicyKind::kOracle}, cfg, 5);
    CHECK(r.epsilon_sre == 0.0);
    CHECK(r.gap == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.holds);
  }
  SUBCASE("oracle choices with real execution stay under the execution term") {
    const BoundReport r = bound_check(Policy{PolicyKind::kOracle}, cfg, 5);
    CHECK(r.epsilon_sre == 0.0);
    CHECK(r.gap <= r.epsilon_exec + 1e-9);
  }
  SUBCASE("heuristic and random policies") {
    for (PolicyKind k : {PolicyKind::kHeuristic, PolicyKind::kRandomValid}) {
      const BoundReport r = bound_check(Policy{k}, cfg, 6);
      CHECK(r.scenes == 12);
      for (double v : {r.epsilon_sre, r.epsilon_exec}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      CHECK(r.delta >= 0.0);
      CHECK(r.holds == (r.gap <= r.bound + 1e-9));
      CHECK(r.holds);
    }
  }
  SUBCASE("multi-shot is rejected") {
    const SelectorParameters p = init_params(1);
    CHECK_THROWS(bound_check(Policy{PolicyKind::kMultiShot, &p}, cfg, 1));
  }
}
