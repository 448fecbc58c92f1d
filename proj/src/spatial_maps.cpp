#include "ksp/spatial_maps.hpp"

#include <cmath>
#include <string>

#include "spatial_maps_detail.hpp"

namespace ksp {

using detail::AffinityKernel;
using detail::HeatKernel;

void MapParams::validate() const {
  if (lattice.height < 2 || lattice.width < 2) throw ValidationError("lattice must be at least 2x2");
  if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
  if (!(sigma_y > 0.0)) throw ValidationError("sigma_y must be positive");
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (!(sigma_floor > 0.0)) throw ValidationError("sigma_floor must be positive");
}

Vec2 to_lattice(const Vec2& normalized, const Lattice& lattice) {
  return normalized.cwiseProduct(detail::lattice_scale(lattice));
}

Vec2 from_lattice(const Vec2& lattice_point, const Lattice& lattice) {
  return lattice_point.cwiseQuotient(detail::lattice_scale(lattice));
}

LimbFrame limb_frame(const Vec2& a, const Vec2& b, const MapParams& params) {
  LimbFrame f;
  f.midpoint = 0.5 * (a + b);
  const Vec2 delta = b - a;
  f.length = delta.norm();
  // atan2(0, 0) is undefined, so a collapsed limb keeps theta = 0
  f.axis = f.length > 0.0 ? Vec2(delta / f.length) : Vec2(1.0, 0.0);
  const double sx = params.alpha * f.length;
  f.floored = !(sx > params.sigma_floor);
  f.sigma_x = f.floored ? params.sigma_floor : sx;
  return f;
}

MapStack render_heatmaps(const Landmarks2D& landmarks, const MapParams& params) {
  params.validate();
  const int channels = landmarks.joint_count();
  const int h = params.lattice.height, w = params.lattice.width;
  MapStack out(channels, h, w);

  std::vector<HeatKernel> kernels;
  kernels.reserve(channels);
  for (int j = 0; j < channels; ++j) {
    kernels.emplace_back(to_lattice(landmarks.points.row(j).transpose(), params.lattice), params);
  }

#pragma omp parallel for collapse(2) schedule(static)
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < h; ++y) {
      const auto& k = kernels[c];
      if (y < k.rows.lo || y > k.rows.hi) continue;
      for (int x = k.cols.lo; x <= k.cols.hi; ++x) out.at(c, y, x) = k.value(x, y);
    }
  }
  return out;
}

MapStack render_affinity(const Landmarks2D& landmarks, std::span<const Limb> limbs, const MapParams& params) {
  params.validate();
  const int channels = static_cast<int>(limbs.size());
  const int h = params.lattice.height, w = params.lattice.width;
  MapStack out(channels, h, w);

  std::vector<AffinityKernel> kernels;
  kernels.reserve(channels);
  for (const auto& limb : limbs) {
    kernels.emplace_back(to_lattice(landmarks.points.row(limb.a).transpose(), params.lattice),
                         to_lattice(landmarks.points.row(limb.b).transpose(), params.lattice), params);
  }

#pragma omp parallel for collapse(2) schedule(static)
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < h; ++y) {
      const auto& k = kernels[c];
      if (y < k.rows.lo || y > k.rows.hi) continue;
      for (int x = k.cols.lo; x <= k.cols.hi; ++x) out.at(c, y, x) = k.value(x, y);
    }
  }
  return out;
}

SpatialMaps render_maps(const Landmarks2D& landmarks, const KinematicTree& tree, const MapParams& params) {
  if (landmarks.joint_count() != tree.joint_count()) {
    throw ValidationError("landmark count does not match the tree");
  }
  return {render_heatmaps(landmarks, params), render_affinity(landmarks, tree.limbs, params), params};
}

SpatialMaps maps_jvp(const Landmarks2D& landmarks, const Eigen::VectorXd& tangent, const KinematicTree& tree,
                     const MapParams& params) {
  params.validate();
  const int joints = landmarks.joint_count();
  if (tangent.size() != 2 * joints || joints != tree.joint_count()) {
    throw ValidationError("tangent must have 2J entries matching the tree");
  }
  const Vec2 scale = detail::lattice_scale(params.lattice);
  const int h = params.lattice.height, w = params.lattice.width;
  auto lattice_point = [&](int j) { return to_lattice(landmarks.points.row(j).transpose(), params.lattice); };
  auto lattice_tangent = [&](int j) { return Vec2(tangent.segment<2>(2 * j).cwiseProduct(scale)); };

  SpatialMaps out{MapStack(joints, h, w), MapStack(tree.limb_count(), h, w), params};

#pragma omp parallel for schedule(static)
  for (int j = 0; j < joints; ++j) {
    const HeatKernel k(lattice_point(j), params);
    const Vec2 t = lattice_tangent(j);
    for (int y = k.rows.lo; y <= k.rows.hi; ++y) {
      for (int x = k.cols.lo; x <= k.cols.hi; ++x) out.heat.at(j, y, x) = k.grad(x, y).dot(t);
    }
  }

#pragma omp parallel for schedule(static)
  for (int l = 0; l < tree.limb_count(); ++l) {
    const auto& limb = tree.limbs[l];
    const AffinityKernel k(lattice_point(limb.a), lattice_point(limb.b), params);
    Eigen::Vector4d t;
    t << lattice_tangent(limb.a), lattice_tangent(limb.b);
    for (int y = k.rows.lo; y <= k.rows.hi; ++y) {
      for (int x = k.cols.lo; x <= k.cols.hi; ++x) out.affinity.at(l, y, x) = k.grad(x, y).dot(t);
    }
  }
  return out;
}

namespace {

void check_cotangent(const MapStack& m, int channels, const MapParams& params) {
  if (m.channels != channels || m.height != params.lattice.height || m.width != params.lattice.width) {
    throw ValidationError("cotangent maps do not match the lattice/channel layout");
  }
}

}  // namespace

Eigen::VectorXd heatmaps_vjp(const Landmarks2D& landmarks, const MapStack& cotangent, const MapParams& params) {
  params.validate();
  const int joints = landmarks.joint_count();
  check_cotangent(cotangent, joints, params);
  const Vec2 scale = detail::lattice_scale(params.lattice);

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(2 * joints);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < joints; ++j) {
    const HeatKernel k(to_lattice(landmarks.points.row(j).transpose(), params.lattice), params);
    Vec2 acc = Vec2::Zero();
    for (int y = k.rows.lo; y <= k.rows.hi; ++y) {
      for (int x = k.cols.lo; x <= k.cols.hi; ++x) acc += cotangent.at(j, y, x) * k.grad(x, y);
    }
    grad.segment<2>(2 * j) = acc.cwiseProduct(scale);
  }
  return grad;
}

Eigen::VectorXd maps_vjp(const Landmarks2D& landmarks, const SpatialMaps& cotangent, const KinematicTree& tree,
                         const MapParams& params) {
  params.validate();
  const int joints = landmarks.joint_count();
  const int limbs = tree.limb_count();
  check_cotangent(cotangent.heat, joints, params);
  check_cotangent(cotangent.affinity, limbs, params);

  Eigen::VectorXd grad = heatmaps_vjp(landmarks, cotangent.heat, params);

  // Per-limb partials, folded in limb order afterwards so the result does not
  // depend on the thread count.
  std::vector<Eigen::Vector4d> partial(limbs, Eigen::Vector4d::Zero());
  const Vec2 scale = detail::lattice_scale(params.lattice);
#pragma omp parallel for schedule(static)
  for (int l = 0; l < limbs; ++l) {
    const auto& limb = tree.limbs[l];
    const AffinityKernel k(to_lattice(landmarks.points.row(limb.a).transpose(), params.lattice),
                           to_lattice(landmarks.points.row(limb.b).transpose(), params.lattice), params);
    Eigen::Vector4d acc = Eigen::Vector4d::Zero();
    for (int y = k.rows.lo; y <= k.rows.hi; ++y) {
      for (int x = k.cols.lo; x <= k.cols.hi; ++x) acc += cotangent.affinity.at(l, y, x) * k.grad(x, y);
    }
    partial[l] = acc;
  }
  for (int l = 0; l < limbs; ++l) {
    const auto& limb = tree.limbs[l];
    grad.segment<2>(2 * limb.a) += partial[l].head<2>().cwiseProduct(scale);
    grad.segment<2>(2 * limb.b) += partial[l].tail<2>().cwiseProduct(scale);
  }
  return grad;
}

Vec2 soft_argmax(std::span<const double> map, const Lattice& lattice) {
  if (map.size() != static_cast<std::size_t>(lattice.height) * lattice.width) {
    throw ValidationError("map size does not match the lattice");
  }
  double total = 0.0, sx = 0.0, sy = 0.0;
  for (int y = 0; y < lattice.height; ++y) {
    for (int x = 0; x < lattice.width; ++x) {
      const double v = map[static_cast<std::size_t>(y) * lattice.width + x];
      if (v < 0.0 || !std::isfinite(v)) throw ValidationError("soft_argmax needs a nonnegative finite map");
      total += v;
      sx += v * x;
      sy += v * y;
    }
  }
  if (!(total > 0.0)) throw ValidationError("soft_argmax of an all-zero map");
  return from_lattice(Vec2(sx / total, sy / total), lattice);
}

Landmarks2D soft_argmax(const MapStack& maps) {
  Landmarks2D out;
  out.points.resize(maps.channels, 2);
  const Lattice lattice{maps.height, maps.width};
  for (int c = 0; c < maps.channels; ++c) out.points.row(c) = soft_argmax(maps.channel(c), lattice).transpose();
  return out;
}

}  // namespace ksp
