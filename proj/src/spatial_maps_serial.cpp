#include "ksp/spatial_maps.hpp"

#include "spatial_maps_detail.hpp"

namespace ksp::serial {

using detail::AffinityKernel;
using detail::HeatKernel;

MapStack render_heatmaps(const Landmarks2D& landmarks, const MapParams& params) {
  params.validate();
  MapStack out(landmarks.joint_count(), params.lattice.height, params.lattice.width);
  for (int c = 0; c < out.channels; ++c) {
    const HeatKernel k(to_lattice(landmarks.points.row(c).transpose(), params.lattice), params);
    for (int y = k.rows.lo; y <= k.rows.hi; ++y) {
      for (int x = k.cols.lo; x <= k.cols.hi; ++x) out.at(c, y, x) = k.value(x, y);
    }
  }
  return out;
}

MapStack render_affinity(const Landmarks2D& landmarks, std::span<const Limb> limbs, const MapParams& params) {
  params.validate();
  MapStack out(static_cast<int>(limbs.size()), params.lattice.height, params.lattice.width);
  for (int c = 0; c < out.channels; ++c) {
    const auto& limb = limbs[c];
    const AffinityKernel k(to_lattice(landmarks.points.row(limb.a).transpose(), params.lattice),
                           to_lattice(landmarks.points.row(limb.b).transpose(), params.lattice), params);
    for (int y = k.rows.lo; y <= k.rows.hi; ++y) {
      for (int x = k.cols.lo; x <= k.cols.hi; ++x) out.at(c, y, x) = k.value(x, y);
    }
  }
  return out;
}

Eigen::VectorXd maps_vjp(const Landmarks2D& landmarks, const SpatialMaps& cotangent, const KinematicTree& tree,
                         const MapParams& params) {
  params.validate();
  const Vec2 scale = detail::lattice_scale(params.lattice);
  const int joints = landmarks.joint_count();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(2 * joints);

  for (int j = 0; j < joints; ++j) {
    const HeatKernel k(to_lattice(landmarks.points.row(j).transpose(), params.lattice), params);
    Vec2 acc = Vec2::Zero();
    for (int y = k.rows.lo; y <= k.rows.hi; ++y) {
      for (int x = k.cols.lo; x <= k.cols.hi; ++x) acc += cotangent.heat.at(j, y, x) * k.grad(x, y);
    }
    grad.segment<2>(2 * j) = acc.cwiseProduct(scale);
  }
  for (int l = 0; l < tree.limb_count(); ++l) {
    const auto& limb = tree.limbs[l];
    const AffinityKernel k(to_lattice(landmarks.points.row(limb.a).transpose(), params.lattice),
                           to_lattice(landmarks.points.row(limb.b).transpose(), params.lattice), params);
    Eigen::Vector4d acc = Eigen::Vector4d::Zero();
    for (int y = k.rows.lo; y <= k.rows.hi; ++y) {
      for (int x = k.cols.lo; x <= k.cols.hi; ++x) acc += cotangent.affinity.at(l, y, x) * k.grad(x, y);
    }
    grad.segment<2>(2 * limb.a) += acc.head<2>().cwiseProduct(scale);
    grad.segment<2>(2 * limb.b) += acc.tail<2>().cwiseProduct(scale);
  }
  return grad;
}

}  // namespace ksp::serial
