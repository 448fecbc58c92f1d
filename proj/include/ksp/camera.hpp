#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "ksp/skeleton.hpp"

namespace ksp {

/// Fixed pinhole intrinsics in normalized image units.
struct PerspectiveCamera {
  double focal = 1.1;
  Vec2 principal_point{0.5, 0.5};
  double z_min = 0.1;

  void validate() const;
};

/// A joint ended up at or behind the near plane.
class BehindCameraError : public std::runtime_error {
 public:
  BehindCameraError(int joint, double depth);
  int joint() const { return joint_; }
  double depth() const { return depth_; }

 private:
  int joint_;
  double depth_;
};

/// Maps a (sin, cos) pair onto the unit circle. Goes through the ratio of the
/// smaller to the larger component so that any exact positive rescaling of the
/// pair yields bit-identical output.
Vec2 normalize_sincos(const Vec2& pair);

/// R = Rz(gamma) * Ry(beta) * Rx(alpha), angles given as normalized (sin, cos) pairs.
Mat3 rotation_from_sincos(const CameraParams& camera);

/// landmark = principal_point + focal * (q.x / q.z, q.y / q.z), q = R p + T.
Landmarks2D project(const Pose3D& pose, const CameraParams& camera, const PerspectiveCamera& intrinsics = {});

struct ProjectionJacobian {
  Eigen::MatrixXd wrt_pose;    // 2J x 3J, block diagonal
  Eigen::MatrixXd wrt_camera;  // 2J x 9, columns follow pack_camera()
};

ProjectionJacobian projection_jacobian(const Pose3D& pose, const CameraParams& camera,
                                       const PerspectiveCamera& intrinsics = {});

Eigen::VectorXd flatten(const Landmarks2D& landmarks);
Landmarks2D unflatten_landmarks(const Eigen::VectorXd& flat);

}  // namespace ksp
