#ifndef UNVEILER_REWARD_HPP_
#define UNVEILER_REWARD_HPP_

#include "unveiler/scene.hpp"

namespace unveiler {

struct RewardConfig {
  double alpha = 10.0;
  double beta = 0.5;
  int horizon = 15;
  double gamma = 0.99;
  double r_step = -0.2;
  double access_bonus = 2.0;     // target selected while accessible
  double access_penalty = -1.0;  // target selected while not accessible
  double occl_vis_weight = 2.0;
  double occl_path_weight = 1.0;

  // alpha > 0, beta >= 0, r_step < 0, 0 < gamma <= 1, horizon >= 1
  void validate() const;
};

// Path clearance: some occluder on a path into the target was pinned in
// prev and is free in next. The target itself does not count; uncovering
// it is paid by the visibility term.
bool frees_occlusion_path(const Scene& prev, const Scene& next);

// One-step reward:
//   alpha [success] (1 + beta (H - step) / H) + r_access
//   + [selected != target] (w_vis dvis + w_path [path freed]) + r_step
// r_access is paid only when the target was selected and is judged on the
// scene the action was taken in.
double compute_reward(const Scene& prev, const Scene& next, int selected_id, int step,
                      bool success, const RewardConfig& config);

// the largest per-episode return scale, alpha (1 + beta)
inline double max_success_reward(const RewardConfig& c) { return c.alpha * (1.0 + c.beta); }

}  // namespace unveiler

#endif  // UNVEILER_REWARD_HPP_
