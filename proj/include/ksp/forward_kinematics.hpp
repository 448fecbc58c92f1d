#pragma once

#include <span>

#include <Eigen/Core>

#include "ksp/skeleton.hpp"

namespace ksp {

struct RootJoints {
  Vec3 pelvis;
  Vec3 left_hip;
  Vec3 right_hip;
  Vec3 neck;
};

/// Canonical root rule: pelvis at the origin, neck on +z at its bone length,
/// hips at R_x(angle) * (len * rest_offset).
RootJoints root_joints(double trunk_hipline_angle, const KinematicTree& tree);

/// p(j) = p(parent(j)) + len(j) * dir(j) for every direction joint, evaluated in
/// the canonical frame. Directions are used as given; callers normalize via
/// unpack_params.
Pose3D forward_kinematics(const LocalKinematicParams& params, const KinematicTree& tree);

/// Same as above on the packed vector (no renormalization, so it is linear in
/// the direction blocks and usable for finite differences).
Pose3D forward_kinematics(std::span<const double> packed, const KinematicTree& tree);

/// d p3D / d packed params, (3J x packed size). Row 3j+k is coordinate k of joint j.
Eigen::MatrixXd fk_jacobian(const LocalKinematicParams& params, const KinematicTree& tree);
Eigen::MatrixXd fk_jacobian(std::span<const double> packed, const KinematicTree& tree);

/// Flattened pose, row-major (x0, y0, z0, x1, ...).
Eigen::VectorXd flatten(const Pose3D& pose);

}  // namespace ksp
