#ifndef UNVEILER_EVALHARNESS_HPP_
#define UNVEILER_EVALHARNESS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "unveiler/environment.hpp"
#include "unveiler/scene.hpp"
#include "unveiler/selector.hpp"
#include "unveiler/training.hpp"

namespace unveiler {

enum class PolicyKind {
  kRandomValid,
  kNearestToTarget,
  kHeuristic,
  kIl,
  kPpo,
  kMultiShot,     // one ranking from the first observation, executed open loop
  kImpoverished,  // selector on impoverished features
  kOracle,        // brute-force optimum, small scenes only
};

const char* to_string(PolicyKind kind);
PolicyKind policy_from_string(const std::string& s);

struct Policy {
  PolicyKind kind = PolicyKind::kHeuristic;
  const SelectorParameters* params = nullptr;  // selector-backed kinds

  FeatureMode features() const {
    return kind == PolicyKind::kImpoverished ? FeatureMode::kImpoverished : FeatureMode::kFull;
  }
  bool needs_params() const;
};

struct StepRecord {
  std::size_t index = 0;  // chosen mask index
  int selected_id = -1;
  int masks = 0;
  double target_visible = 0.0;
  PushGraspAction action;
  PlanSource source = PlanSource::kNone;
  std::vector<int> grasped_ids;
  bool stable = false;
  bool success = false;
  double reward = 0.0;
  std::vector<double> probabilities;  // selector policies only
};

struct EpisodeRecord {
  std::string policy;
  SceneDraw draw;
  std::uint64_t seed = 0;
  Scene initial;
  std::vector<StepRecord> steps;
  bool success = false;

  int step_count() const { return static_cast<int>(steps.size()); }
  double total_reward() const;
  double discounted_return(double gamma) const;
};

// Closed loop: segment, featurize, select, plan, execute, reward,
// re-observe. The environment's feature mode is overridden by the policy.
EpisodeRecord run_episode(const Policy& policy, const Scene& scene, EnvConfig env,
                          std::uint64_t seed);

struct DensityBin {
  int lo = 2;
  int hi = 6;
  std::string label() const;
};

struct EvalGrid {
  std::vector<DensityBin> bins{{2, 6}, {6, 9}, {9, 12}};
  std::vector<Occlusion> occlusions{Occlusion::kPartial, Occlusion::kFull};
  int episodes = 30;
  ObjectSet object_set = ObjectSet::kUnseen;
};

// "default" or a comma list of bins such as "2-6,9-12"
EvalGrid parse_grid(const std::string& spec);

struct MetricsRow {
  std::string density_bin;
  Occlusion occlusion = Occlusion::kPartial;
  std::string policy;
  double completion_pct = 0.0;
  double mean_steps = 0.0;
  int episodes = 0;
};

struct MetricsTable {
  std::vector<MetricsRow> rows;

  const MetricsRow* find(const std::string& bin, Occlusion occ, const std::string& policy) const;
  std::string to_csv() const;
};

inline constexpr const char* kMetricsHeader =
    "density_bin,occlusion,policy,completion_pct,mean_steps,episodes";

// completion % and mean steps over all episodes, failures at their real length
MetricsRow summarize(const std::vector<EpisodeRecord>& episodes, const std::string& bin,
                     Occlusion occ, const std::string& policy);

// The scene of episode e in a grid cell. Independent of the policy, so
// policies are compared on identical scenes.
std::optional<SceneDraw> grid_scene(const EvalGrid& grid, std::size_t bin, std::size_t occ,
                                    int episode, std::uint64_t seed);

struct EvalResult {
  MetricsTable table;
  std::vector<EpisodeRecord> episodes;
};

EvalResult evaluate(const Policy& policy, const EvalGrid& grid, const EnvConfig& env,
                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// oracle

inline constexpr int kOracleMaxObjects = 6;

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exhaustive search over removal sets under idealized execution. A state
// is the set of removed objects plus the step index. Free obstacles always
// come off, the target only when accessible; anything else wastes the step.
class Oracle {
 public:
  Oracle(const Scene& scene, const RewardConfig& reward, int max_n = kOracleMaxObjects);

  // minimal number of steps to retrieve the target, -1 if impossible
  int min_steps() const { return min_steps_; }
  const std::vector<int>& optimal_sequence() const { return sequence_; }

  // optimal value from the initial scene at step t
  double value(int t = 0) const { return value_at(0, t); }

  // ids whose Q at (current scene, t) is within tol of the optimum
  std::vector<int> optimal_actions(int t, double tol = 1e-9) const { return best_at(0, t, tol); }

  // largest V* - Q* over every reachable state and selectable object
  double max_regret() const;

  std::size_t state_count() const { return states_.size(); }

 private:
  struct Edge {
    int object_id;
    std::uint32_t next;  // removed set after the action
    bool retrieves;
    double reward;       // without the success term
  };
  struct State {
    std::uint32_t removed;
    std::vector<Edge> edges;  // ascending mask order
  };

  std::size_t state_index(std::uint32_t removed) const;
  double q_value(std::size_t s, const Edge& e, int t) const;
  double value_at(std::size_t s, int t) const;
  std::vector<int> best_at(std::size_t s, int t, double tol) const;

  RewardConfig reward_;
  std::vector<int> ids_;  // non-target ids, bit i <-> ids_[i]
  std::vector<State> states_;
  std::unordered_map<std::uint32_t, std::size_t> index_;
  std::vector<std::vector<double>> values_;  // [state][t], t in [0, H]
  int min_steps_ = -1;
  std::vector<int> sequence_;
};

struct OracleSummary {
  int min_steps = -1;
  std::vector<int> sequence;
  double value = 0.0;
  std::size_t states = 0;
};

// Throws OracleError for scenes above max_n objects.
OracleSummary optimal_removal_bruteforce(const Scene& scene, const RewardConfig& reward,
                                         int max_n = kOracleMaxObjects);

struct BoundReport {
  std::string policy;
  int scenes = 0;
  int horizon = 0;
  double epsilon_sre = 0.0;
  double epsilon_exec = 0.0;
  double delta = 0.0;
  double gap = 0.0;
  double bound = 0.0;
  bool holds = false;
  int decisions = 0;
  int optimal_decisions = 0;
  int exec_failures = 0;
};

struct BoundConfig {
  int scenes = 100;
  SceneGridConfig grid{2, 5};
  EnvConfig env;
};

// Returns are discounted and divided by alpha (1 + beta) so every term of
// H delta eps_sre + eps_exec lives on the same [0, 1]-ish scale.
BoundReport bound_check(const Policy& policy, const BoundConfig& config, std::uint64_t seed);

}  // namespace unveiler

#endif  // UNVEILER_EVALHARNESS_HPP_
