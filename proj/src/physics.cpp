#include "unveiler/physics.hpp"

#include <algorithm>
#include <stdexcept>

#include "unveiler/grasp_planner.hpp"
#include "unveiler/rng.hpp"

namespace unveiler {

namespace {

bool clamp_to_workspace(const Workspace& ws, ObjectInstance& o) {
  const Vec2 c{std::clamp(o.center.x, o.radius, ws.side_length - o.radius),
               std::clamp(o.center.y, o.radius, ws.side_length - o.radius)};
  const bool changed = !(c == o.center);
  o.center = c;
  return changed;
}

}  // namespace

ExecutionOutcome execute_push_grasp(const Scene& scene, const PushGraspAction& action,
                                    int intended_id) {
  if (!action.valid(scene.workspace)) throw std::invalid_argument("invalid push-grasp action");
  scene.object(intended_id);

  ExecutionOutcome out;
  Scene moved = scene;
  auto& objs = moved.objects;
  const std::size_t n = objs.size();

  // objects pinned under others stay put for the whole primitive
  std::vector<char> movable(n, 0);
  for (std::size_t i = 0; i < n; ++i) movable[i] = is_free(scene, objs[i].id);

  const auto sweeps = finger_sweeps(action);
  const Vec2 closing = closing_direction(action.theta_bin);
  for (int pass = 0; pass < kRelaxationPasses; ++pass) {
    for (int f = 0; f < 2; ++f) {
      const Vec2 side = closing * (f == 0 ? 1.0 : -1.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (!movable[i]) continue;
        auto& o = objs[i];
        const Vec2 q = closest_point(sweeps[f], o.center);
        const double d = distance(o.center, q);
        if (d >= o.radius) continue;
        const Vec2 normal = d > 1e-12 ? (o.center - q) * (1.0 / d) : side;
        o.center = o.center + normal * (o.radius - d);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!movable[i] && !movable[j]) continue;
        if (objs[i].layer != objs[j].layer || !discs_overlap(objs[i], objs[j])) continue;
        const Vec2 delta = objs[j].center - objs[i].center;
        const double d = norm(delta);
        const double pen = objs[i].radius + objs[j].radius - d;
        const Vec2 dir = d > 1e-12 ? delta * (1.0 / d) : Vec2{1.0, 0.0};
        if (movable[i] && movable[j]) {
          objs[i].center = objs[i].center - dir * (0.5 * pen);
          objs[j].center = objs[j].center + dir * (0.5 * pen);
        } else if (movable[i]) {
          objs[i].center = objs[i].center - dir * pen;
        } else {
          objs[j].center = objs[j].center + dir * pen;
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (movable[i] && clamp_to_workspace(moved.workspace, objs[i])) out.clamped = true;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 delta = objs[i].center - scene.objects[i].center;
    if (delta.x != 0.0 || delta.y != 0.0) out.displaced[objs[i].id] = delta;
  }
  relayer(moved);

  // closing phase
  const Vec2 d = push_direction(action.theta_bin);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& o = objs[i];
    if (!movable[i] || !is_free(moved, o.id)) continue;
    const Vec2 rel = o.center - action.position;
    if (std::abs(dot(rel, closing)) < 0.5 * action.aperture &&
        std::abs(dot(rel, d)) < 0.5 * kFingerLength + o.radius) {
      out.grasped_ids.push_back(o.id);
    }
  }
  if (out.grasped_ids.size() == 1) {
    const auto& o = moved.object(out.grasped_ids.front());
    out.stable = std::abs(dot(o.center - action.position, d)) <= kStabilityMargin &&
                 2.0 * o.radius <= action.aperture;
  }

  Rng rng(scene.rng_state);
  if (grasp_success(out, intended_id)) {
    moved = remove_object(moved, intended_id);
    settle(moved, rng, kSettleJitter);
  }
  moved.rng_state = rng.next_u64();
  out.new_scene = std::move(moved);
  return out;
}

bool grasp_success(const ExecutionOutcome& outcome, int intended_id) {
  return outcome.grasped_ids.size() == 1 && outcome.grasped_ids.front() == intended_id &&
         outcome.stable;
}

bool accessible(const Scene& scene, int object_id) {
  if (!is_free(scene, object_id)) return false;
  const SegmentMask mask = object_mask(scene, object_id);
  if (mask.cells.empty()) return false;
  return best_grasp(grasp_quality_maps(render_heightmap(scene), mask)).has_value();
}

}  // namespace unveiler
