#ifndef UNVEILER_TRAINING_HPP_
#define UNVEILER_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "unveiler/environment.hpp"
#include "unveiler/reward.hpp"
#include "unveiler/scene.hpp"
#include "unveiler/selector.hpp"

namespace unveiler {

// Where training and demonstration scenes come from.
struct SceneGridConfig {
  int min_objects = 2;
  int max_objects = 12;
  std::vector<Occlusion> occlusions{Occlusion::kPartial, Occlusion::kFull};
  ObjectSet object_set = ObjectSet::kSeen;
};

struct SceneDraw {
  int n_objects = 0;
  Occlusion occlusion = Occlusion::kPartial;
  std::uint64_t scene_seed = 0;
};

// N uniform over the grid range, occlusion uniform over the listed ones
SceneDraw draw_scene_params(const SceneGridConfig& grid, std::uint64_t seed);

// ---------------------------------------------------------------------------
// demonstrations

struct DemoPair {
  Observation observation;
  std::size_t label = 0;  // expert mask index
  int episode = 0;        // index into DemoDataset::episodes
};

struct DemoEpisode {
  SceneDraw draw;
  bool success = false;
  int steps = 0;
};

struct DemoDataset {
  std::vector<DemoPair> pairs;
  std::vector<DemoEpisode> episodes;  // kept episodes only
  int requested = 0;
  int generation_failures = 0;
};

struct DemoConfig {
  int episodes = 100;
  SceneGridConfig grid{2, 9};
  EnvConfig env;
  bool keep_failed = false;
};

// Runs the heuristic policy (the obstacle heuristic picks, the environment plans and
// executes, re-observing after each step) and records one
// (observation, expert index) pair per step of every kept episode.
DemoDataset collect_demonstrations(const DemoConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// imitation

struct IlConfig {
  double lr = 1e-3;
  int batch = 64;
  int epochs = 20;
};

struct IlResult {
  SelectorParameters params;
  std::vector<double> epoch_loss;  // full training-set loss after each epoch
};

// Behavior cloning with masked cross-entropy and Adam. Throws
// std::invalid_argument on an empty dataset and NumericError on blow-up.
IlResult train_il(const DemoDataset& data, const IlConfig& config, std::uint64_t seed);
IlResult train_il(const SelectorParameters& init, const DemoDataset& data, const IlConfig& config,
                  std::uint64_t seed);

// fraction of pairs whose argmax equals the label
double agreement(const SelectorParameters& params, const DemoDataset& data);

// ---------------------------------------------------------------------------
// reinforcement

struct AdvantageEstimate {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// One trajectory: delta_t = r_t + gamma v_{t+1} - v_t with v_T = bootstrap,
// A_t = sum_k (gamma lambda)^k delta_{t+k}, returns = A + v.
AdvantageEstimate gae(std::span<const double> rewards, std::span<const double> values,
                      double bootstrap, double gamma, double lambda);

// mean 0, standard deviation 1 (population), eps in the denominator
std::vector<double> normalize_advantages(std::span<const double> advantages, double eps = 1e-8);

struct Transition {
  Observation observation;
  std::size_t action = 0;
  double reward = 0.0;
  double value = 0.0;
  double log_prob = 0.0;
  bool done = false;
};

struct PpoConfig {
  double clip = 0.2;
  double lr = 3e-4;
  int epochs = 4;
  int minibatch = 256;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double max_grad_norm = 0.5;
  double gae_lambda = 0.95;
};

struct PpoBatch {
  std::vector<const Observation*> observations;
  std::vector<std::size_t> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;  // raw, normalized inside ppo_update
  std::vector<double> returns;
};

struct PpoUpdateStats {
  LossTerms mean;  // averaged over minibatches
  double grad_norm = 0.0;
  int minibatches = 0;
};

// Clipped-surrogate epochs over shuffled minibatches with global grad-norm
// clipping. Mutates params and the optimizer state.
PpoUpdateStats ppo_update(SelectorParameters& params, Adam& optimizer, const PpoBatch& batch,
                          const PpoConfig& config, std::uint64_t seed);

// per-sample PPO loss terms of a batch, after advantage normalization
std::vector<TrainingSample> ppo_samples(const PpoBatch& batch, const PpoConfig& config);

struct PpoTrainConfig {
  long total_steps = 100000;
  int wave_size = 2048;
  SceneGridConfig grid{2, 12};
  EnvConfig env;
  PpoConfig ppo;
};

struct WaveMetrics {
  long steps = 0;  // cumulative transitions
  double loss = 0.0;
  double mean_return = 0.0;
  double entropy = 0.0;
  double completion = 0.0;  // fraction of finished episodes that retrieved the target
  int episodes = 0;
};

struct PpoResult {
  SelectorParameters params;
  std::vector<WaveMetrics> waves;
};

using WaveCallback = std::function<void(const WaveMetrics&, const SelectorParameters&)>;

// Waves of at least wave_size transitions (episodes always run to their end)
// alternating with ppo_update, until total_steps transitions were collected.
PpoResult train_ppo(const SelectorParameters& init, const PpoTrainConfig& config,
                    std::uint64_t seed, const WaveCallback& on_wave = {});

}  // namespace unveiler

#endif  // UNVEILER_TRAINING_HPP_
