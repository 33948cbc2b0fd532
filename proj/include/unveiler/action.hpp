#ifndef UNVEILER_ACTION_HPP_
#define UNVEILER_ACTION_HPP_

#include <array>
#include <numbers>

#include "unveiler/scene.hpp"

namespace unveiler {

inline constexpr int kOrientations = 16;
inline constexpr double kOrientationStep = std::numbers::pi / 8.0;  // 22.5 deg
inline constexpr double kFingerLength = 0.02;
inline constexpr double kSweepLength = 0.04;
inline constexpr double kMinAperture = 0.03;
inline constexpr double kMaxAperture = 0.11;

// Push-grasp primitive: the gripper lands kSweepLength behind `position`,
// pushes along the orientation at constant aperture and closes its fingers
// at `position`. Orientation k points at angle k * 22.5 deg in the world
// frame.
struct PushGraspAction {
  Vec2 position;
  int theta_bin = 0;
  double aperture = 0.0;

  // all-zero sentinel returned when no grasp could be sampled
  static PushGraspAction zero() { return {}; }
  bool is_zero() const {
    return position.x == 0.0 && position.y == 0.0 && theta_bin == 0 && aperture == 0.0;
  }
  bool valid(const Workspace& ws) const {
    return ws.contains(position) && theta_bin >= 0 && theta_bin < kOrientations &&
           aperture >= kMinAperture - 1e-12 && aperture <= kMaxAperture + 1e-12;
  }
  bool operator==(const PushGraspAction&) const = default;
};

struct Segment {
  Vec2 a;
  Vec2 b;
};

inline Vec2 push_direction(int theta_bin) {
  const double a = theta_bin * kOrientationStep;
  return {std::cos(a), std::sin(a)};
}

// unit vector along which the fingers close, perpendicular to the push
inline Vec2 closing_direction(int theta_bin) {
  const Vec2 d = push_direction(theta_bin);
  return {-d.y, d.x};
}

// Finger i (0: +closing side, 1: -closing side) at its closing position.
inline std::array<Segment, 2> finger_segments(const PushGraspAction& act) {
  const Vec2 d = push_direction(act.theta_bin);
  const Vec2 n = closing_direction(act.theta_bin);
  std::array<Segment, 2> out;
  for (int i = 0; i < 2; ++i) {
    const Vec2 base = act.position + n * ((i == 0 ? 0.5 : -0.5) * act.aperture);
    out[i] = {base - d * (0.5 * kFingerLength), base + d * (0.5 * kFingerLength)};
  }
  return out;
}

// Region swept by each finger during the push phase.
inline std::array<Segment, 2> finger_sweeps(const PushGraspAction& act) {
  const Vec2 d = push_direction(act.theta_bin);
  auto fingers = finger_segments(act);
  for (auto& f : fingers) f.a = f.a - d * kSweepLength;
  return fingers;
}

inline Vec2 closest_point(const Segment& s, Vec2 p) {
  const Vec2 ab = s.b - s.a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return s.a;
  const double t = std::clamp(dot(p - s.a, ab) / len2, 0.0, 1.0);
  return s.a + ab * t;
}

}  // namespace unveiler

#endif  // UNVEILER_ACTION_HPP_
