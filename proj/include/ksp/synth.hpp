#pragma once

#include <cstdint>

#include "ksp/skeleton.hpp"

namespace ksp {

struct SynthPose {
  LocalKinematicParams params;
  CameraParams camera;
};

/// Seeded random pose: directions uniform on the sphere, trunk angle in
/// [-pi/4, pi/4], camera angles in [-pi/6, pi/6], default translation.
SynthPose synth_pose(std::uint64_t seed, const KinematicTree& tree);

}  // namespace ksp
