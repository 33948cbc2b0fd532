#ifndef UNVEILER_SELECTOR_HPP_
#define UNVEILER_SELECTOR_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "unveiler/scene.hpp"

namespace unveiler {

inline constexpr int kTokenFeatures = 12;
inline constexpr int kSceneFeatures = 4;
inline constexpr int kModelWidth = 32;
inline constexpr int kHeads = 4;
inline constexpr int kHeadWidth = kModelWidth / kHeads;
inline constexpr int kFeedForwardWidth = 64;
inline constexpr int kBlocks = 2;
inline constexpr double kLayerNormEps = 1e-5;

// Per-object geometric token. Feature order:
//  0,1  mask centroid x, y / workspace side
//  2    radius / 0.045
//  3    height / 0.06
//  4    layer / 3
//  5    visible fraction
//  6    normalized boundary distance (min-max over obstacles)
//  7    normalized distance to the target (min-max over obstacles)
//  8    fraction of the target this object covers
//  9    covers-target flag
//  10   free flag
//  11   is-target flag
using ObjectToken = std::array<double, kTokenFeatures>;
// detected count / 12, target visible fraction, mean free flag, step / horizon
using SceneToken = std::array<double, kSceneFeatures>;

enum class FeatureMode {
  kFull,
  // centroid, mask occupancy and the target flag only
  kImpoverished,
};

struct Observation {
  std::vector<ObjectToken> tokens;  // one per mask, in mask order
  ObjectToken target{};
  SceneToken scene{};
  std::vector<std::uint8_t> valid;  // 1 for selectable indices

  std::size_t valid_count() const;
};

Observation featurize(const Scene& scene, std::span<const SegmentMask> masks, int step,
                      int horizon, FeatureMode mode = FeatureMode::kFull);

// Drops everything but the features the impoverished variant keeps.
Observation impoverish(const Observation& obs);

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParamEntry {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

// Named row-major parameter blocks of the selector, in storage order.
const std::vector<ParamEntry>& parameter_layout();
std::size_t parameter_count();

// All weights in one flat row-major buffer laid out by parameter_layout().
// Gradients use the same type.
struct SelectorParameters {
  std::vector<double> values;

  SelectorParameters() : values(parameter_count(), 0.0) {}
  std::span<double> block(const std::string& name);
  std::span<const double> block(const std::string& name) const;
  bool operator==(const SelectorParameters&) const = default;
};

// Xavier-uniform weights, zero biases, unit layer-norm gains.
SelectorParameters init_params(std::uint64_t seed);

struct SelectorOutput {
  std::vector<double> logits;         // -inf at invalid indices
  std::vector<double> probabilities;  // exactly 0 at invalid indices
  double value = 0.0;
};

// Target-as-query cross-attention over the object tokens plus a scene slot,
// broadcast back onto every object token, then kBlocks post-norm
// self-attention blocks without positional encoding. Throws
// std::invalid_argument when no index is valid.
SelectorOutput forward(const SelectorParameters& params, const Observation& obs);

enum class SelectMode { kArgmax, kSample };

// argmax (ties -> lowest index) or a categorical draw seeded by `seed`
std::size_t select(const SelectorOutput& output, SelectMode mode, std::uint64_t seed);

struct CrossEntropyLoss {
  std::size_t label = 0;
};

// Clipped surrogate + value + entropy terms for one transition. The
// advantage is expected already normalized.
struct PpoLoss {
  std::size_t action = 0;
  double old_log_prob = 0.0;
  double advantage = 0.0;
  double value_target = 0.0;
  double clip = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
};

using LossSpec = std::variant<CrossEntropyLoss, PpoLoss>;

struct TrainingSample {
  const Observation* observation = nullptr;
  LossSpec loss;
};

struct LossTerms {
  double loss = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
};

struct GradientResult {
  LossTerms mean;
  SelectorParameters gradient;
};

// Mean loss over the batch and its exact gradient. Throws NumericError on
// any non-finite intermediate.
GradientResult grad(const SelectorParameters& params, std::span<const TrainingSample> batch);

// Loss only, same definition as grad().
LossTerms batch_loss(const SelectorParameters& params, std::span<const TrainingSample> batch);

double log_prob(const SelectorOutput& output, std::size_t index);
double entropy(const SelectorOutput& output);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {});
  void step(SelectorParameters& params, const SelectorParameters& gradient);
  void set_lr(double lr) { config_.lr = lr; }
  long steps() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

double global_norm(const SelectorParameters& gradient);
// scales the gradient down to max_norm if it is longer; returns the original norm
double clip_global_norm(SelectorParameters& gradient, double max_norm);

}  // namespace unveiler

#endif  // UNVEILER_SELECTOR_HPP_
