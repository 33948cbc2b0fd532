#ifndef UNVEILER_PHYSICS_HPP_
#define UNVEILER_PHYSICS_HPP_

#include <map>
#include <vector>

#include "unveiler/action.hpp"
#include "unveiler/scene.hpp"

namespace unveiler {

inline constexpr int kRelaxationPasses = 5;
inline constexpr double kStabilityMargin = 0.01;
inline constexpr double kSettleJitter = 0.002;

struct ExecutionOutcome {
  std::vector<int> grasped_ids;      // ascending
  bool stable = false;
  std::map<int, Vec2> displaced;     // net push displacement of moved objects
  bool clamped = false;              // some push was stopped at the workspace edge
  Scene new_scene;
};

// Kinematic push-grasp. Free objects touched by a finger sweep are moved
// out along the contact normal by the penetration depth; same-layer discs
// pushed into each other are separated. After kRelaxationPasses passes the
// fingers close: free objects whose center lies between the fingers are
// grasped. A grasp is stable when exactly one object is held, it fits the
// aperture and its center lies within kStabilityMargin of the closing axis
// (the fingers center it along the closing direction). On success the
// grasped object is removed and the pile settles with jitter drawn from the
// scene's rng stream.
//
// Throws std::invalid_argument for an invalid action or unknown intended_id.
ExecutionOutcome execute_push_grasp(const Scene& scene, const PushGraspAction& action,
                                    int intended_id);

bool grasp_success(const ExecutionOutcome& outcome, int intended_id);

// Free and the grasp planner finds a feasible grasp at some orientation.
bool accessible(const Scene& scene, int object_id);

}  // namespace unveiler

#endif  // UNVEILER_PHYSICS_HPP_
