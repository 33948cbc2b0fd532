#include "unveiler/environment.hpp"

#include <stdexcept>

#include "unveiler/grasp_planner.hpp"
#include "unveiler/physics.hpp"
#include "unveiler/rng.hpp"

namespace unveiler {

PlannedAction plan_grasp(const Heightmap& heightmap, const SegmentMask& mask,
                         const GraspHeuristicConfig& grasp, double threshold,
                         std::uint64_t seed, bool use_planner) {
  if (mask.cells.empty()) return {};
  if (use_planner) {
    if (auto a = best_grasp(grasp_quality_maps(heightmap, mask), threshold)) {
      return {*a, PlanSource::kPlanner};
    }
  }
  const PushGraspAction a = grasp_pose_heuristic(heightmap, mask, grasp, seed);
  if (a.is_zero()) return {};
  return {a, PlanSource::kSampler};
}

std::optional<Scene> idealized_removal(const Scene& scene, int object_id) {
  if (scene.find(object_id) == nullptr) return std::nullopt;
  const bool ok = object_id == scene.target_id ? accessible(scene, object_id)
                                               : is_free(scene, object_id);
  if (!ok) return std::nullopt;
  Scene next = remove_object(scene, object_id);
  relayer(next);
  return next;
}

Environment::Environment(Scene scene, EnvConfig config, std::uint64_t seed)
    : scene_(std::move(scene)), config_(config), seed_(seed) {
  config_.reward.validate();
  observe();
  done_ = masks_.empty();
}

void Environment::observe() {
  heightmap_ = render_heightmap(scene_);
  masks_ = segment(scene_);
}

Observation Environment::observation() const {
  return featurize(scene_, masks_, step_, config_.reward.horizon, config_.features);
}

StepResult Environment::step(std::size_t mask_index) {
  if (mask_index >= masks_.size()) throw std::out_of_range("mask index out of range");
  const SegmentMask mask = masks_[mask_index];
  const Heightmap hm = heightmap_;
  return step_with(*mask.object_id, mask, hm);
}

StepResult Environment::step_with(int object_id, const SegmentMask& mask,
                                  const Heightmap& heightmap) {
  if (done_) throw std::logic_error("step on a finished episode");
  StepResult res;
  res.selected_id = object_id;
  const Scene prev = scene_;

  if (scene_.find(object_id) != nullptr) {
    if (config_.execution == ExecutionMode::kIdealized) {
      if (auto next = idealized_removal(scene_, object_id)) {
        res.success = true;
        res.grasped_ids = {object_id};
        res.stable = true;
        scene_ = std::move(*next);
      }
    } else {
      const bool retried = config_.resample_after_failure && planner_failed_ == object_id;
      res.plan = plan_grasp(heightmap, mask, config_.grasp, config_.grasp_threshold,
                            derive_seed(seed_, static_cast<std::uint64_t>(step_)),
                            config_.use_planner && !retried);
      if (res.plan.source != PlanSource::kNone) {
        ExecutionOutcome out = execute_push_grasp(scene_, res.plan.action, object_id);
        res.grasped_ids = out.grasped_ids;
        res.stable = out.stable;
        res.success = grasp_success(out, object_id);
        scene_ = std::move(out.new_scene);
      }
      planner_failed_ =
          !res.success && res.plan.source == PlanSource::kPlanner ? object_id : -1;
    }
  }
  res.target_retrieved = res.success && object_id == prev.target_id;
  res.reward = compute_reward(prev, res.target_retrieved ? prev : scene_, object_id, step_,
                              res.target_retrieved, config_.reward);
  ++step_;
  retrieved_ = res.target_retrieved;
  if (!retrieved_) observe();
  done_ = retrieved_ || step_ >= config_.reward.horizon || masks_.empty();
  res.done = done_;
  return res;
}

const char* to_string(ExecutionMode mode) {
  return mode == ExecutionMode::kPhysics ? "physics" : "idealized";
}

}  // namespace unveiler
