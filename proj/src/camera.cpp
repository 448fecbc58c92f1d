#include "ksp/camera.hpp"

#include <cmath>

namespace ksp {

namespace {

struct Axis {
  Mat3 rot;
  Mat3 d_sin;  // derivative w.r.t. the normalized sine
  Mat3 d_cos;
};

Axis axis_x(double s, double c) {
  Axis a;
  a.rot << 1, 0, 0, 0, c, -s, 0, s, c;
  a.d_sin << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  a.d_cos << 0, 0, 0, 0, 1, 0, 0, 0, 1;
  return a;
}

Axis axis_y(double s, double c) {
  Axis a;
  a.rot << c, 0, s, 0, 1, 0, -s, 0, c;
  a.d_sin << 0, 0, 1, 0, 0, 0, -1, 0, 0;
  a.d_cos << 1, 0, 0, 0, 0, 0, 0, 0, 1;
  return a;
}

Axis axis_z(double s, double c) {
  Axis a;
  a.rot << c, -s, 0, s, c, 0, 0, 0, 1;
  a.d_sin << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  a.d_cos << 1, 0, 0, 0, 1, 0, 0, 0, 0;
  return a;
}

std::array<Axis, 3> axes(const CameraParams& camera) {
  const Vec2 nx = normalize_sincos(camera.angles_sincos[0]);
  const Vec2 ny = normalize_sincos(camera.angles_sincos[1]);
  const Vec2 nz = normalize_sincos(camera.angles_sincos[2]);
  return {axis_x(nx.x(), nx.y()), axis_y(ny.x(), ny.y()), axis_z(nz.x(), nz.y())};
}

// d(normalized pair) / d(raw pair) = (I - n n^T) / |pair|
Eigen::Matrix2d normalization_jacobian(const Vec2& pair) {
  const double r = pair.norm();
  const Vec2 n = pair / r;
  return (Eigen::Matrix2d::Identity() - n * n.transpose()) / r;
}

Vec3 camera_point(const Mat3& rot, const CameraParams& camera, const Pose3D& pose, int j,
                  const PerspectiveCamera& intrinsics) {
  const Vec3 q = rot * pose.joints.row(j).transpose() + camera.translation;
  if (!(q.z() > intrinsics.z_min)) throw BehindCameraError(j, q.z());
  return q;
}

}  // namespace

void PerspectiveCamera::validate() const {
  if (!(focal > 0.0) || !(z_min > 0.0) || !principal_point.allFinite()) {
    throw ValidationError("camera intrinsics need focal > 0 and z_min > 0");
  }
}

BehindCameraError::BehindCameraError(int joint, double depth)
    : std::runtime_error("joint " + std::to_string(joint) + " is behind the camera (depth " + std::to_string(depth) +
                         ")"),
      joint_(joint),
      depth_(depth) {}

Vec2 normalize_sincos(const Vec2& pair) {
  const double s = pair.x(), c = pair.y();
  if (!std::isfinite(s) || !std::isfinite(c) || std::hypot(s, c) <= 1e-12) {
    throw ValidationError("degenerate (sin, cos) pair");
  }
  if (std::abs(c) >= std::abs(s)) {
    const double t = s / c;
    const double cn = std::copysign(1.0 / std::sqrt(1.0 + t * t), c);
    return Vec2(t * cn, cn);
  }
  const double t = c / s;
  const double sn = std::copysign(1.0 / std::sqrt(1.0 + t * t), s);
  return Vec2(sn, t * sn);
}

Mat3 rotation_from_sincos(const CameraParams& camera) {
  const auto a = axes(camera);
  return a[2].rot * a[1].rot * a[0].rot;
}

Landmarks2D project(const Pose3D& pose, const CameraParams& camera, const PerspectiveCamera& intrinsics) {
  intrinsics.validate();
  const Mat3 rot = rotation_from_sincos(camera);
  Landmarks2D out;
  out.points.resize(pose.joint_count(), 2);
  for (int j = 0; j < pose.joint_count(); ++j) {
    const Vec3 q = camera_point(rot, camera, pose, j, intrinsics);
    out.points(j, 0) = intrinsics.principal_point.x() + intrinsics.focal * q.x() / q.z();
    out.points(j, 1) = intrinsics.principal_point.y() + intrinsics.focal * q.y() / q.z();
  }
  return out;
}

ProjectionJacobian projection_jacobian(const Pose3D& pose, const CameraParams& camera,
                                       const PerspectiveCamera& intrinsics) {
  intrinsics.validate();
  const auto a = axes(camera);
  const Mat3 rz_ry = a[2].rot * a[1].rot;
  const Mat3 rot = rz_ry * a[0].rot;

  // dR / d(normalized sin, cos) for each axis
  std::array<Mat3, 6> d_rot = {
      rz_ry * a[0].d_sin,           rz_ry * a[0].d_cos,           a[2].rot * a[1].d_sin * a[0].rot,
      a[2].rot * a[1].d_cos * a[0].rot, a[2].d_sin * a[1].rot * a[0].rot, a[2].d_cos * a[1].rot * a[0].rot,
  };
  std::array<Eigen::Matrix2d, 3> d_norm;
  for (int k = 0; k < 3; ++k) d_norm[k] = normalization_jacobian(camera.angles_sincos[k]);

  const int n = pose.joint_count();
  ProjectionJacobian jac;
  jac.wrt_pose = Eigen::MatrixXd::Zero(2 * n, 3 * n);
  jac.wrt_camera = Eigen::MatrixXd::Zero(2 * n, CameraParams::kPackedSize);

  for (int j = 0; j < n; ++j) {
    const Vec3 p = pose.joints.row(j).transpose();
    const Vec3 q = camera_point(rot, camera, pose, j, intrinsics);
    Eigen::Matrix<double, 2, 3> dl_dq;
    const double iz = 1.0 / q.z();
    dl_dq << iz, 0, -q.x() * iz * iz, 0, iz, -q.y() * iz * iz;
    dl_dq *= intrinsics.focal;

    jac.wrt_pose.block<2, 3>(2 * j, 3 * j) = dl_dq * rot;
    jac.wrt_camera.block<2, 3>(2 * j, 6) = dl_dq;
    for (int k = 0; k < 3; ++k) {
      const Vec3 dq_ds = d_rot[2 * k] * p;
      const Vec3 dq_dc = d_rot[2 * k + 1] * p;
      // chain through the (sin, cos) normalization
      const Vec3 dq_raw_s = dq_ds * d_norm[k](0, 0) + dq_dc * d_norm[k](1, 0);
      const Vec3 dq_raw_c = dq_ds * d_norm[k](0, 1) + dq_dc * d_norm[k](1, 1);
      jac.wrt_camera.block<2, 1>(2 * j, 2 * k) = dl_dq * dq_raw_s;
      jac.wrt_camera.block<2, 1>(2 * j, 2 * k + 1) = dl_dq * dq_raw_c;
    }
  }
  return jac;
}

Eigen::VectorXd flatten(const Landmarks2D& landmarks) {
  Eigen::VectorXd out(2 * landmarks.joint_count());
  for (int j = 0; j < landmarks.joint_count(); ++j) out.segment<2>(2 * j) = landmarks.points.row(j).transpose();
  return out;
}

Landmarks2D unflatten_landmarks(const Eigen::VectorXd& flat) {
  if (flat.size() % 2 != 0) throw ValidationError("flattened landmarks need an even length");
  Landmarks2D out;
  out.points.resize(flat.size() / 2, 2);
  for (Eigen::Index j = 0; j < out.points.rows(); ++j) out.points.row(j) = flat.segment<2>(2 * j).transpose();
  return out;
}

}  // namespace ksp
