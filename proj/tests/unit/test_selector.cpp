#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "unveiler/rng.hpp"
#include "unveiler/selector.hpp"

using namespace unveiler;

namespace {

#include "golden_logits.inc"

Observation golden_observation() {
  Rng rng(123);
  return oracles::random_observation(rng, 5, 1);
}

}  // namespace

TEST_CASE("tokens of a hand-built scene") {
  // target A, obstacles B and C, all separate
  const Scene s = fixtures::make_scene(
      {{0.2, 0.25, 0.03, 0.04}, {0.4, 0.25, 0.02, 0.03}, {0.3, 0.07, 0.02, 0.03}}, 0);
  const auto masks = segment(s);
  REQUIRE(masks.size() == 3);
  const Observation obs = featurize(s, masks, 3, 15);
  const double dc = std::hypot(0.1, 0.18);
  const std::vector<ObjectToken> want{
      {0.4, 0.5, 0.03 / 0.045, 0.04 / 0.06, 0, 1, 1, 0, 0, 0, 1, 1},
      {0.8, 0.5, 0.02 / 0.045, 0.5, 0, 1, 1, (0.2 - 0.2) / (dc - 0.2), 0, 0, 1, 0},
      {0.6, 0.14, 0.02 / 0.045, 0.5, 0, 1, 0, 1, 0, 0, 1, 0},
  };
  for (std::size_t i = 0; i < 3; ++i) {
    for (int f = 0; f < kTokenFeatures; ++f) {
      INFO("token " << i << " feature " << f);
      CHECK(std::abs(obs.tokens[i][f] - want[i][f]) <= 1e-9);
    }
  }
  const ObjectToken t{0.4, 0.5, 0.03 / 0.045, 0.04 / 0.06, 0, 1, 1, 0, 0, 0, 1, 1};
  for (int f = 0; f < kTokenFeatures; ++f) CHECK(std::abs(obs.target[f] - t[f]) <= 1e-9);
  const SceneToken sc{3.0 / 12, 1, 1, 0.2};
  for (int f = 0; f < kSceneFeatures; ++f) CHECK(std::abs(obs.scene[f] - sc[f]) <= 1e-12);
  CHECK(obs.valid == std::vector<std::uint8_t>{1, 1, 1});
}

TEST_CASE("token edge cases") {
  SUBCASE("hidden target") {
    const Scene s = fixtures::make_scene(
        {{0.25, 0.25, 0.02, 0.03}, {0.25, 0.25, 0.045, 0.02, 1}, {0.05, 0.4, 0.03, 0.03}}, 0);
    const auto masks = segment(s);
    const Observation obs = featurize(s, masks, 0, 15);
    CHECK(obs.tokens.size() == 2);
    CHECK(obs.target[5] == 0.0);
    CHECK(obs.tokens[0][9] == 1.0);
    CHECK(obs.tokens[0][8] == 1.0);
  }
  SUBCASE("object touching the boundary") {
    const Scene s = fixtures::make_scene(
        {{0.25, 0.25, 0.03, 0.03}, {0.03, 0.3, 0.03, 0.03}, {0.35, 0.35, 0.03, 0.03}}, 0);
    const Observation obs = featurize(s, segment(s), 0, 15);
    CHECK(obs.tokens[1][6] == doctest::Approx(0.0));
  }
  SUBCASE("features stay in range on random scenes") {
    Rng rng(8);
    for (int k = 0; k < 60; ++k) {
      const Scene s = generate_scene(rng.uniform_int(2, 12), Occlusion::kFull, rng.next_u64());
      for (FeatureMode mode : {FeatureMode::kFull, FeatureMode::kImpoverished}) {
        const Observation obs = featurize(s, segment(s), 2, 15, mode);
        for (const auto& tok : obs.tokens) {
          for (int f = 0; f < kTokenFeatures; ++f) {
            CHECK(std::isfinite(tok[f]));
            CHECK(tok[f] >= 0.0);
            // layer / 3 grows past 1 on deep stacks
            if (f != 4) CHECK(tok[f] <= 1.0);
          }
          for (int f : {9, 10, 11}) CHECK((tok[f] == 0.0 || tok[f] == 1.0));
        }
        for (double v : obs.scene) {
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
        }
      }
    }
  }
}

TEST_CASE("impoverished tokens keep centroid, occupancy and the target flag") {
  Rng rng(3);
  Observation obs = oracles::random_observation(rng, 3);
  const Observation poor = impoverish(obs);
  for (std::size_t i = 0; i < 3; ++i) {
    for (int f = 0; f < kTokenFeatures; ++f) {
      const bool kept = f == 0 || f == 1 || f == 5 || f == 11;
      CHECK(poor.tokens[i][f] == (kept ? obs.tokens[i][f] : 0.0));
    }
  }
}

TEST_CASE("initialization") {
  const SelectorParameters a = init_params(5);
  CHECK(a == init_params(5));
  CHECK_FALSE(a == init_params(6));
  for (const auto& e : parameter_layout()) {
    const auto blk = a.block(e.name);
    const bool bias = e.name.ends_with(".b") || e.name.ends_with(".bias");
    const bool gain = e.name.ends_with(".gain");
    const double limit = std::sqrt(6.0 / (e.rows + e.cols));
    for (double v : blk) {
      if (bias) CHECK(v == 0.0);
      else if (gain) CHECK(v == 1.0);
      else CHECK(std::abs(v) <= limit);
    }
  }
  Rng rng(1);
  for (int k = 0; k < 20; ++k) {
    const SelectorOutput out = forward(a, oracles::random_observation(rng, 1 + k % 12));
    for (double v : out.logits) CHECK(std::isfinite(v));
    CHECK(std::isfinite(out.value));
  }
}

TEST_CASE("masked softmax") {
  const SelectorParameters p = init_params(2);
  Rng rng(4);
  SUBCASE("one valid index") {
    Observation obs = oracles::random_observation(rng, 4, 3);
    const SelectorOutput out = forward(p, obs);
    CHECK(out.probabilities[0] == 1.0);
    for (int i = 1; i < 4; ++i) {
      CHECK(out.probabilities[i] == 0.0);
      CHECK(std::isinf(out.logits[i]));
    }
  }
  SUBCASE("no valid index") {
    Observation obs = oracles::random_observation(rng, 3, 3);
    CHECK_THROWS_AS(forward(p, obs), std::invalid_argument);
  }
  SUBCASE("sums to one") {
    for (int k = 0; k < 50; ++k) {
      const int n = rng.uniform_int(2, 12);
      Observation obs = oracles::random_observation(rng, n, rng.uniform_int(0, n - 1));
      const SelectorOutput out = forward(oracles::perturbed(p, rng, 0.3), obs);
      double sum = 0.0;
      for (std::size_t i = 0; i < out.probabilities.size(); ++i) {
        if (!obs.valid[i]) CHECK(out.probabilities[i] == 0.0);
        sum += out.probabilities[i];
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("permutation equivariance") {
  Rng rng(6);
  const SelectorParameters p = oracles::perturbed(init_params(9), rng, 0.2);
  for (int k = 0; k < 30; ++k) {
    const int n = rng.uniform_int(2, 12);
    const Observation obs = oracles::random_observation(rng, n);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
    Observation shuffled = obs;
    for (int i = 0; i < n; ++i) shuffled.tokens[i] = obs.tokens[perm[i]];
    const SelectorOutput a = forward(p, obs);
    const SelectorOutput b = forward(p, shuffled);
    for (int i = 0; i < n; ++i) CHECK(std::abs(b.logits[i] - a.logits[perm[i]]) <= 1e-9);
    CHECK(std::abs(a.value - b.value) <= 1e-9);
  }
}

TEST_CASE("golden logits") {
  const SelectorOutput out = forward(init_params(7), golden_observation());
  REQUIRE(out.logits.size() == std::size(kGoldenLogits));
  for (std::size_t i = 0; i < out.logits.size(); ++i) {
    if (std::isinf(kGoldenLogits[i])) {
      CHECK(std::isinf(out.logits[i]));
    } else {
      CHECK(std::abs(out.logits[i] - kGoldenLogits[i]) <= 1e-9);
    }
  }
  CHECK(std::abs(out.value - kGoldenValue) <= 1e-9);
}

TEST_CASE("selection") {
  SelectorOutput o;
  o.probabilities = {0.1, 0.7, 0.2};
  CHECK(select(o, SelectMode::kArgmax, 0) == 1);
  o.probabilities = {0.5, 0.5};
  CHECK(select(o, SelectMode::kArgmax, 0) == 0);
  CHECK(select(o, SelectMode::kSample, 42) == select(o, SelectMode::kSample, 42));
  int ones = 0;
  for (std::uint64_t s = 0; s < 2000; ++s) ones += select(o, SelectMode::kSample, s) == 1;
  CHECK(ones > 900);
  CHECK(ones < 1100);
  o.probabilities = {0.0, 1.0, 0.0};
  for (std::uint64_t s = 0; s < 50; ++s) CHECK(select(o, SelectMode::kSample, s) == 1);
}

TEST_CASE("cross-entropy gradient with a silent policy head") {
  SelectorParameters p = init_params(3);
  for (const char* name : {"policy_out.w", "policy_out.b"}) {
    auto blk = p.block(name);
    std::fill(blk.begin(), blk.end(), 0.0);
  }
  Rng rng(10);
  const Observation obs = oracles::random_observation(rng, 4);
  const SelectorOutput out = forward(p, obs);
  for (double v : out.probabilities) CHECK(v == doctest::Approx(0.25));
  const std::vector<TrainingSample> batch{{&obs, CrossEntropyLoss{2}}};
  const GradientResult g = grad(p, batch);
  CHECK(g.mean.loss == doctest::Approx(std::log(4.0)));
  // the shared bias sees sum(p - onehot) = 0
  CHECK(std::abs(g.gradient.block("policy_out.b")[0]) <= 1e-12);
}

TEST_CASE("finite differences on a parameter sample") {
  Rng rng(11);
  const SelectorParameters p = oracles::perturbed(init_params(12), rng, 0.2);
  const Observation a = oracles::random_observation(rng, 5, 1);
  const Observation b = oracles::random_observation(rng, 3);
  const SelectorOutput oa = forward(p, a);
  const SelectorOutput ob = forward(p, b);
  PpoLoss ppo{1, log_prob(ob, 1) + 0.05, -0.7, 0.3};
  const std::vector<TrainingSample> batch{{&a, CrossEntropyLoss{3}}, {&b, ppo}};
  std::vector<std::size_t> coords;
  for (int k = 0; k < 400; ++k) coords.push_back(rng.index(p.values.size()));
  const auto rep = oracles::finite_difference(p, batch, coords);
  CHECK(rep.max_rel_error < 1e-4);
  (void)oa;
}

TEST_CASE("duplicated batch keeps the mean gradient") {
  Rng rng(12);
  const SelectorParameters p = init_params(1);
  const Observation a = oracles::random_observation(rng, 4);
  const Observation b = oracles::random_observation(rng, 6, 2);
  const std::vector<TrainingSample> once{{&a, CrossEntropyLoss{1}}, {&b, CrossEntropyLoss{0}}};
  std::vector<TrainingSample> twice = once;
  twice.insert(twice.end(), once.begin(), once.end());
  const auto g1 = grad(p, once);
  const auto g2 = grad(p, twice);
  CHECK(g1.mean.loss == doctest::Approx(g2.mean.loss).epsilon(1e-14));
  for (std::size_t i = 0; i < g1.gradient.values.size(); ++i) {
    CHECK(std::abs(g1.gradient.values[i] - g2.gradient.values[i]) <= 1e-12);
  }
}

TEST_CASE("non-finite inputs are reported") {
  Rng rng(13);
  Observation obs = oracles::random_observation(rng, 3);
  obs.tokens[0][0] = std::nan("");
  const std::vector<TrainingSample> batch{{&obs, CrossEntropyLoss{0}}};
  CHECK_THROWS_AS(grad(init_params(1), batch), NumericError);
}

TEST_CASE("optimizer helpers") {
  SelectorParameters g;
  std::fill(g.values.begin(), g.values.end(), 0.0);
  g.values[0] = 3.0;
  g.values[1] = 4.0;
  CHECK(global_norm(g) == doctest::Approx(5.0));
  CHECK(clip_global_norm(g, 1.0) == doctest::Approx(5.0));
  CHECK(global_norm(g) == doctest::Approx(1.0));
  CHECK(clip_global_norm(g, 2.0) == doctest::Approx(1.0));
  CHECK(g.values[0] == doctest::Approx(0.6));

  // the first Adam step moves every touched coordinate by lr against the gradient sign
  SelectorParameters p;
  Adam adam(AdamConfig{0.01});
  adam.step(p, g);
  CHECK(p.values[0] == doctest::Approx(-0.01));
  CHECK(p.values[1] == doctest::Approx(-0.01));
  CHECK(p.values[2] == 0.0);
  CHECK(adam.steps() == 1);
}
