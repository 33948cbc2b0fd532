#include "unveiler/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "unveiler/rng.hpp"

namespace unveiler {

namespace {

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
  return idx;
}

}  // namespace

SceneDraw draw_scene_params(const SceneGridConfig& grid, std::uint64_t seed) {
  if (grid.occlusions.empty()) throw std::invalid_argument("scene grid has no occlusion level");
  Rng rng(seed);
  SceneDraw d;
  d.n_objects = rng.uniform_int(grid.min_objects, grid.max_objects);
  d.occlusion = grid.occlusions[rng.index(grid.occlusions.size())];
  d.scene_seed = rng.next_u64();
  return d;
}

// ---------------------------------------------------------------------------

DemoDataset collect_demonstrations(const DemoConfig& config, std::uint64_t seed) {
  DemoDataset data;
  data.requested = config.episodes;
  for (int e = 0; e < config.episodes; ++e) {
    const std::uint64_t es = derive_seed(seed, static_cast<std::uint64_t>(e));
    const SceneDraw draw = draw_scene_params(config.grid, derive_seed(es, "draw"));
    Scene scene;
    try {
      scene = generate_scene(draw.n_objects, draw.occlusion, draw.scene_seed,
                             config.grid.object_set);
    } catch (const GenerationError&) {
      ++data.generation_failures;
      continue;
    }
    Environment env(std::move(scene), config.env, derive_seed(es, "env"));
    std::vector<DemoPair> pairs;
    while (!env.done()) {
      const auto choice =
          heuristic_choice(env.masks(), env.target_ref(), env.scene().workspace);
      if (!choice) break;
      pairs.push_back({env.observation(), *choice, 0});
      env.step(*choice);
    }
    if (!env.succeeded() && !config.keep_failed) continue;
    const int index = static_cast<int>(data.episodes.size());
    data.episodes.push_back({draw, env.succeeded(), env.steps()});
    for (auto& p : pairs) {
      p.episode = index;
      data.pairs.push_back(std::move(p));
    }
  }
  return data;
}

// ---------------------------------------------------------------------------

IlResult train_il(const DemoDataset& data, const IlConfig& config, std::uint64_t seed) {
  return train_il(init_params(derive_seed(seed, "init")), data, config, seed);
}

IlResult train_il(const SelectorParameters& init, const DemoDataset& data, const IlConfig& config,
                  std::uint64_t seed) {
  if (data.pairs.empty()) throw std::invalid_argument("empty demonstration dataset");
  if (config.batch < 1 || config.epochs < 0) throw std::invalid_argument("bad IL config");
  IlResult out{init, {}};
  Adam adam(AdamConfig{config.lr});
  Rng rng(derive_seed(seed, "il-shuffle"));

  std::vector<TrainingSample> all;
  all.reserve(data.pairs.size());
  for (const auto& p : data.pairs) all.push_back({&p.observation, CrossEntropyLoss{p.label}});

  std::vector<TrainingSample> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled(all.size(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t end = std::min(order.size(), start + config.batch);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(all[order[i]]);
      const GradientResult g = grad(out.params, batch);
      adam.step(out.params, g.gradient);
    }
    out.epoch_loss.push_back(batch_loss(out.params, all).loss);
  }
  return out;
}

double agreement(const SelectorParameters& params, const DemoDataset& data) {
  if (data.pairs.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& p : data.pairs) {
    if (select(forward(params, p.observation), SelectMode::kArgmax, 0) == p.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.pairs.size());
}

// ---------------------------------------------------------------------------

AdvantageEstimate gae(std::span<const double> rewards, std::span<const double> values,
                      double bootstrap, double gamma, double lambda) {
  if (rewards.size() != values.size()) throw std::invalid_argument("gae length mismatch");
  const std::size_t n = rewards.size();
  AdvantageEstimate out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double acc = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double next = i + 1 < n ? values[i + 1] : bootstrap;
    const double delta = rewards[i] + gamma * next - values[i];
    acc = delta + gamma * lambda * acc;
    out.advantages[i] = acc;
    out.returns[i] = acc + values[i];
  }
  return out;
}

std::vector<double> normalize_advantages(std::span<const double> adv, double eps) {
  std::vector<double> out(adv.begin(), adv.end());
  if (out.empty()) return out;
  const double n = static_cast<double>(out.size());
  const double mean = std::accumulate(out.begin(), out.end(), 0.0) / n;
  double var = 0.0;
  for (double a : out) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  for (double& a : out) a = (a - mean) / (sd + eps);
  return out;
}

std::vector<TrainingSample> ppo_samples(const PpoBatch& batch, const PpoConfig& config) {
  const std::size_t n = batch.actions.size();
  if (batch.observations.size() != n || batch.old_log_probs.size() != n ||
      batch.advantages.size() != n || batch.returns.size() != n) {
    throw std::invalid_argument("ppo batch fields differ in length");
  }
  const auto adv = normalize_advantages(batch.advantages);
  std::vector<TrainingSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({batch.observations[i],
                   PpoLoss{batch.actions[i], batch.old_log_probs[i], adv[i], batch.returns[i],
                           config.clip, config.value_coef, config.entropy_coef}});
  }
  return out;
}

PpoUpdateStats ppo_update(SelectorParameters& params, Adam& optimizer, const PpoBatch& batch,
                          const PpoConfig& config, std::uint64_t seed) {
  PpoUpdateStats stats;
  const auto samples = ppo_samples(batch, config);
  if (samples.empty()) return stats;
  optimizer.set_lr(config.lr);
  Rng rng(seed);
  const std::size_t mb = static_cast<std::size_t>(std::max(1, config.minibatch));
  std::vector<TrainingSample> chunk;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled(samples.size(), rng);
    for (std::size_t start = 0; start < order.size(); start += mb) {
      const std::size_t end = std::min(order.size(), start + mb);
      chunk.clear();
      for (std::size_t i = start; i < end; ++i) chunk.push_back(samples[order[i]]);
      GradientResult g = grad(params, chunk);
      stats.grad_norm = clip_global_norm(g.gradient, config.max_grad_norm);
      optimizer.step(params, g.gradient);
      stats.mean.loss += g.mean.loss;
      stats.mean.policy += g.mean.policy;
      stats.mean.value += g.mean.value;
      stats.mean.entropy += g.mean.entropy;
      ++stats.minibatches;
    }
  }
  const double inv = 1.0 / stats.minibatches;
  stats.mean.loss *= inv;
  stats.mean.policy *= inv;
  stats.mean.value *= inv;
  stats.mean.entropy *= inv;
  return stats;
}

PpoResult train_ppo(const SelectorParameters& init, const PpoTrainConfig& config,
                    std::uint64_t seed, const WaveCallback& on_wave) {
  PpoResult out{init, {}};
  if (config.total_steps <= 0) return out;
  Adam adam(AdamConfig{config.ppo.lr});
  long collected = 0;
  std::uint64_t episode = 0;
  int wave = 0;
  while (collected < config.total_steps) {
    const long wave_target = std::min<long>(config.wave_size, config.total_steps - collected);
    std::vector<Transition> rollout;
    PpoBatch batch;
    double return_sum = 0.0;
    int episodes = 0;
    int retrieved = 0;
    while (static_cast<long>(rollout.size()) < wave_target) {
      const std::uint64_t es = derive_seed(derive_seed(seed, "rollout"), episode++);
      const SceneDraw draw = draw_scene_params(config.grid, derive_seed(es, "draw"));
      Scene scene;
      try {
        scene = generate_scene(draw.n_objects, draw.occlusion, draw.scene_seed,
                               config.grid.object_set);
      } catch (const GenerationError&) {
        continue;
      }
      Environment env(std::move(scene), config.env, derive_seed(es, "env"));
      const std::size_t first = rollout.size();
      while (!env.done()) {
        Transition t;
        t.observation = env.observation();
        const SelectorOutput o = forward(out.params, t.observation);
        t.action = select(o, SelectMode::kSample, derive_seed(es, static_cast<std::uint64_t>(env.steps())));
        t.log_prob = log_prob(o, t.action);
        t.value = o.value;
        const StepResult r = env.step(t.action);
        t.reward = r.reward;
        t.done = r.done;
        rollout.push_back(std::move(t));
      }
      if (rollout.size() == first) continue;
      std::vector<double> rewards;
      std::vector<double> values;
      for (std::size_t i = first; i < rollout.size(); ++i) {
        rewards.push_back(rollout[i].reward);
        values.push_back(rollout[i].value);
      }
      // every episode ends in a terminal state; the step budget is part of the observation
      const AdvantageEstimate est = gae(rewards, values, 0.0, config.env.reward.gamma,
                                        config.ppo.gae_lambda);
      batch.advantages.insert(batch.advantages.end(), est.advantages.begin(), est.advantages.end());
      batch.returns.insert(batch.returns.end(), est.returns.begin(), est.returns.end());
      return_sum += std::accumulate(rewards.begin(), rewards.end(), 0.0);
      ++episodes;
      retrieved += env.succeeded() ? 1 : 0;
    }
    for (const auto& t : rollout) {
      batch.observations.push_back(&t.observation);
      batch.actions.push_back(t.action);
      batch.old_log_probs.push_back(t.log_prob);
    }
    const PpoUpdateStats stats =
        ppo_update(out.params, adam, batch, config.ppo,
                   derive_seed(derive_seed(seed, "ppo-update"), static_cast<std::uint64_t>(wave)));
    collected += static_cast<long>(rollout.size());
    WaveMetrics m;
    m.steps = collected;
    m.loss = stats.mean.loss;
    m.entropy = stats.mean.entropy;
    m.episodes = episodes;
    m.mean_return = episodes > 0 ? return_sum / episodes : 0.0;
    m.completion = episodes > 0 ? static_cast<double>(retrieved) / episodes : 0.0;
    out.waves.push_back(m);
    if (on_wave) on_wave(m, out.params);
    ++wave;
  }
  return out;
}

}  // namespace unveiler
