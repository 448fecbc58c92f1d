#include "ksp/forward_kinematics.hpp"

#include <cmath>
#include <string>

#include <Eigen/Geometry>

namespace ksp {

namespace {

Mat3 rot_x(double angle) { return Eigen::AngleAxisd(angle, Vec3::UnitX()).toRotationMatrix(); }

Mat3 rot_x_derivative(double angle) {
  const double s = std::sin(angle), c = std::cos(angle);
  Mat3 d;
  d << 0, 0, 0, 0, -s, -c, 0, c, -s;
  return d;
}

void check_packed(std::span<const double> packed, const std::vector<int>& dir_joints) {
  if (packed.size() != static_cast<std::size_t>(packed_param_size(static_cast<int>(dir_joints.size())))) {
    throw ValidationError("expected " + std::to_string(packed_param_size(static_cast<int>(dir_joints.size()))) +
                          " kinematic parameters, got " + std::to_string(packed.size()));
  }
  for (double x : packed) {
    if (!std::isfinite(x)) throw ValidationError("non-finite kinematic parameter");
  }
}

}  // namespace

RootJoints root_joints(double trunk_hipline_angle, const KinematicTree& tree) {
  const auto& r = tree.root;
  const Mat3 rx = rot_x(trunk_hipline_angle);
  RootJoints out;
  out.pelvis = Vec3::Zero();
  out.neck = Vec3(0.0, 0.0, tree.bone_length[r.neck]);
  out.left_hip = rx * (tree.bone_length[r.left_hip] * tree.rest_offset[r.left_hip]);
  out.right_hip = rx * (tree.bone_length[r.right_hip] * tree.rest_offset[r.right_hip]);
  return out;
}

Pose3D forward_kinematics(std::span<const double> packed, const KinematicTree& tree) {
  const auto dir_joints = direction_joints(tree);
  check_packed(packed, dir_joints);

  const int n = tree.joint_count();
  Pose3D pose;
  pose.joints.setZero(n, 3);

  const auto roots = root_joints(packed[0], tree);
  const auto& r = tree.root;
  pose.joints.row(r.pelvis) = roots.pelvis.transpose();
  pose.joints.row(r.neck) = roots.neck.transpose();
  pose.joints.row(r.left_hip) = roots.left_hip.transpose();
  pose.joints.row(r.right_hip) = roots.right_hip.transpose();

  // dir_joints is a preorder, so every parent is placed before its child.
  for (std::size_t k = 0; k < dir_joints.size(); ++k) {
    const int j = dir_joints[k];
    const Eigen::RowVector3d dir(packed[1 + 3 * k], packed[2 + 3 * k], packed[3 + 3 * k]);
    pose.joints.row(j) = pose.joints.row(tree.parent[j]) + tree.bone_length[j] * dir;
  }
  return pose;
}

Pose3D forward_kinematics(const LocalKinematicParams& params, const KinematicTree& tree) {
  const auto packed = pack_params(params);
  return forward_kinematics(std::span<const double>(packed), tree);
}

Eigen::MatrixXd fk_jacobian(std::span<const double> packed, const KinematicTree& tree) {
  const auto dir_joints = direction_joints(tree);
  check_packed(packed, dir_joints);

  const int n = tree.joint_count();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(3 * n, static_cast<Eigen::Index>(packed.size()));

  const auto& r = tree.root;
  const Mat3 drx = rot_x_derivative(packed[0]);
  jac.block<3, 1>(3 * r.left_hip, 0) = drx * (tree.bone_length[r.left_hip] * tree.rest_offset[r.left_hip]);
  jac.block<3, 1>(3 * r.right_hip, 0) = drx * (tree.bone_length[r.right_hip] * tree.rest_offset[r.right_hip]);

  // A joint inherits every column of its parent, then adds len * I on its own block.
  std::vector<int> column_of(n, -1);
  for (std::size_t k = 0; k < dir_joints.size(); ++k) column_of[dir_joints[k]] = 1 + 3 * static_cast<int>(k);
  for (int j : dir_joints) {
    const int p = tree.parent[j];
    jac.middleRows<3>(3 * j) = jac.middleRows<3>(3 * p);
    jac.block<3, 3>(3 * j, column_of[j]) += tree.bone_length[j] * Mat3::Identity();
  }
  return jac;
}

Eigen::MatrixXd fk_jacobian(const LocalKinematicParams& params, const KinematicTree& tree) {
  const auto packed = pack_params(params);
  return fk_jacobian(std::span<const double>(packed), tree);
}

Eigen::VectorXd flatten(const Pose3D& pose) {
  Eigen::VectorXd out(3 * pose.joint_count());
  for (int j = 0; j < pose.joint_count(); ++j) out.segment<3>(3 * j) = pose.joints.row(j).transpose();
  return out;
}

}  // namespace ksp
