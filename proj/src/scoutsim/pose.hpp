#pragma once

#include <cmath>

#include "scoutsim/common.hpp"

namespace scoutsim {

/// Scout state: 3D position plus yaw and an independent camera pitch.
/// Roll is fixed at zero. Negative pitch looks down.
struct PoseSE3 {
  Vec3 position{0, 0, 0};
  double yaw = 0;
  double pitch = 0;
};

struct CameraBasis {
  Vec3 forward;
  Vec3 right;
  Vec3 up;
};

inline CameraBasis camera_basis(const PoseSE3& pose) {
  const double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
  const double cp = std::cos(pose.pitch), sp = std::sin(pose.pitch);
  CameraBasis b;
  b.forward = Vec3(cp * cy, cp * sy, sp);
  b.right = Vec3(sy, -cy, 0.0);
  b.up = Vec3(-sp * cy, -sp * sy, cp);
  return b;
}

}  // namespace scoutsim
