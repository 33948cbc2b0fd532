#ifndef UNVEILER_ENVIRONMENT_HPP_
#define UNVEILER_ENVIRONMENT_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "unveiler/action.hpp"
#include "unveiler/grasp_planner.hpp"
#include "unveiler/heuristics.hpp"
#include "unveiler/reward.hpp"
#include "unveiler/scene.hpp"
#include "unveiler/selector.hpp"

namespace unveiler {

enum class ExecutionMode {
  kPhysics,
  // free obstacles always come off, the target only when accessible
  kIdealized,
};

struct EnvConfig {
  RewardConfig reward;
  FeatureMode features = FeatureMode::kFull;
  ExecutionMode execution = ExecutionMode::kPhysics;
  GraspHeuristicConfig grasp;
  double grasp_threshold = kDefaultGraspThreshold;
  // false skips the planner and executes sampled grasps directly
  bool use_planner = true;
  // when the previous step's planner grasp failed on the same object, use
  // a sampled grasp instead so back-to-back picks do not replay one action
  bool resample_after_failure = true;
};

enum class PlanSource { kPlanner, kSampler, kNone };

struct PlannedAction {
  PushGraspAction action;
  PlanSource source = PlanSource::kNone;
};

// Grasp planner first, grasp sampling when it finds nothing. kNone means
// both failed and the returned action is the zero action.
PlannedAction plan_grasp(const Heightmap& heightmap, const SegmentMask& mask,
                         const GraspHeuristicConfig& grasp, double threshold,
                         std::uint64_t seed, bool use_planner = true);

struct StepResult {
  int selected_id = -1;
  PlannedAction plan;
  std::vector<int> grasped_ids;
  bool stable = false;
  bool success = false;  // the selected object was grasped per the success criteria
  bool target_retrieved = false;
  double reward = 0.0;
  bool done = false;
};

// The obstacle-selection MDP: observe (segment + featurize), pick a mask
// index, plan, execute, reward, re-observe. Terminates on target
// retrieval, after horizon steps, or when nothing is detected.
class Environment {
 public:
  Environment(Scene scene, EnvConfig config, std::uint64_t seed);

  const Scene& scene() const { return scene_; }
  const std::vector<SegmentMask>& masks() const { return masks_; }
  const Heightmap& heightmap() const { return heightmap_; }
  const EnvConfig& config() const { return config_; }
  int steps() const { return step_; }
  bool done() const { return done_; }
  bool succeeded() const { return retrieved_; }

  Observation observation() const;
  TargetRef target_ref() const { return make_target_ref(scene_, masks_); }

  // acts on masks()[mask_index]
  StepResult step(std::size_t mask_index);

  // Acts on object_id using a possibly stale mask and heightmap; used by
  // the open-loop multi-shot policy. An object that is no longer in the
  // scene makes a wasted step.
  StepResult step_with(int object_id, const SegmentMask& mask, const Heightmap& heightmap);

 private:
  void observe();

  Scene scene_;
  EnvConfig config_;
  std::uint64_t seed_;
  std::vector<SegmentMask> masks_;
  Heightmap heightmap_;
  int step_ = 0;
  bool done_ = false;
  bool retrieved_ = false;
  int planner_failed_ = -1;  // object of the previous step if its planner grasp failed
};

// Idealized removal used by the oracle and ExecutionMode::kIdealized:
// nullopt when the object cannot be taken.
std::optional<Scene> idealized_removal(const Scene& scene, int object_id);

const char* to_string(ExecutionMode mode);

}  // namespace unveiler

#endif  // UNVEILER_ENVIRONMENT_HPP_
