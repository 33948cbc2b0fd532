#include "unveiler/reward.hpp"

#include <stdexcept>

#include "unveiler/physics.hpp"

namespace unveiler {

void RewardConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be non-negative");
  if (!(r_step < 0.0)) throw std::invalid_argument("r_step must be negative");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
}

bool frees_occlusion_path(const Scene& prev, const Scene& next) {
  for (int id : occlusion_graph(prev).ancestors(prev.target_id)) {
    if (next.find(id) != nullptr && !is_free(prev, id) && is_free(next, id)) return true;
  }
  return false;
}

double compute_reward(const Scene& prev, const Scene& next, int selected_id, int step,
                      bool success, const RewardConfig& c) {
  const int target = prev.target_id;
  double r = c.r_step;
  if (success) {
    r += c.alpha * (1.0 + c.beta * static_cast<double>(c.horizon - step) / c.horizon);
  }
  if (selected_id == target) {
    r += accessible(prev, target) ? c.access_bonus : c.access_penalty;
  } else {
    // the target is gone from next only after its own successful grasp
    const double dvis = visible_fraction(next, target) - visible_fraction(prev, target);
    r += c.occl_vis_weight * dvis;
    if (frees_occlusion_path(prev, next)) r += c.occl_path_weight;
  }
  return r;
}

}  // namespace unveiler
