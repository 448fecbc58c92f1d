#include "ksp/synth.hpp"

#include <numbers>
#include <random>

namespace ksp {

SynthPose synth_pose(std::uint64_t seed, const KinematicTree& tree) {
  const auto dirs = direction_joints(tree);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> trunk(-std::numbers::pi / 4, std::numbers::pi / 4);
  std::uniform_real_distribution<double> view(-std::numbers::pi / 6, std::numbers::pi / 6);

  SynthPose out;
  out.params.trunk_hipline_angle = trunk(rng);
  out.params.bone_dirs.reserve(dirs.size());
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    Vec3 d;
    do {
      d = Vec3(normal(rng), normal(rng), normal(rng));
    } while (d.norm() < 1e-6);
    out.params.bone_dirs.push_back(d.normalized());
  }
  const double ax = view(rng), ay = view(rng), az = view(rng);
  out.camera = CameraParams::from_angles(ax, ay, az);
  return out;
}

}  // namespace ksp
