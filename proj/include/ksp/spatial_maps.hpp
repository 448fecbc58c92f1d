#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "ksp/skeleton.hpp"

namespace ksp {

struct Lattice {
  int height = 56;
  int width = 56;
  bool operator==(const Lattice&) const = default;
};

/// Rendering constants. sigma and sigma_y are in lattice cells.
struct MapParams {
  Lattice lattice;
  double sigma = 2.0;
  double sigma_y = 1.5;
  double alpha = 0.5;
  double sigma_floor = 0.5;  // lower bound on the along-limb width
  bool truncate = false;     // skip pixels beyond kTruncationSigmas

  void validate() const;
};

/// Window radius used when MapParams::truncate is set; exp(-18) keeps the
/// dropped mass below 1e-7 per pixel.
inline constexpr double kTruncationSigmas = 6.0;

/// Channel-major stack of H x W maps.
struct MapStack {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  MapStack() = default;
  MapStack(int channels, int height, int width) : channels(channels), height(height), width(width),
        data(static_cast<std::size_t>(channels) * height * width, 0.0) {}

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  double& at(int c, int y, int x) { return data[c * plane() + static_cast<std::size_t>(y) * width + x]; }
  double at(int c, int y, int x) const { return data[c * plane() + static_cast<std::size_t>(y) * width + x]; }
  std::span<const double> channel(int c) const { return {data.data() + c * plane(), plane()}; }
  std::span<double> channel(int c) { return {data.data() + c * plane(), plane()}; }
};

struct SpatialMaps {
  MapStack heat;      // one channel per joint
  MapStack affinity;  // one channel per limb
  MapParams params;
};

/// Normalized [0,1] coordinates to lattice coordinates: x * (W - 1), y * (H - 1).
Vec2 to_lattice(const Vec2& normalized, const Lattice& lattice);
Vec2 from_lattice(const Vec2& lattice_point, const Lattice& lattice);

/// exp(-0.5 |u - p|^2 / sigma^2) per joint, OpenMP over channels and rows.
MapStack render_heatmaps(const Landmarks2D& landmarks, const MapParams& params);

/// Rotated anisotropic Gaussian per limb, centred at the limb midpoint with
/// sigma_x = max(alpha * length, sigma_floor) along the limb and sigma_y across.
MapStack render_affinity(const Landmarks2D& landmarks, std::span<const Limb> limbs, const MapParams& params);

SpatialMaps render_maps(const Landmarks2D& landmarks, const KinematicTree& tree, const MapParams& params);

/// Geometry of one limb on the lattice.
struct LimbFrame {
  Vec2 midpoint;
  Vec2 axis;  // unit vector from the first to the second endpoint, (1, 0) when degenerate
  double length = 0.0;
  double sigma_x = 0.0;
  bool floored = false;  // sigma_x clamped to sigma_floor
};

LimbFrame limb_frame(const Vec2& a, const Vec2& b, const MapParams& params);

/// Directional derivative of every map pixel along `tangent` (flattened 2J landmark tangent).
SpatialMaps maps_jvp(const Landmarks2D& landmarks, const Eigen::VectorXd& tangent, const KinematicTree& tree,
                     const MapParams& params);

/// Gradient w.r.t. the flattened landmarks of <cotangent, maps>.
Eigen::VectorXd maps_vjp(const Landmarks2D& landmarks, const SpatialMaps& cotangent, const KinematicTree& tree,
                         const MapParams& params);

/// Heat-map-only variant of maps_vjp.
Eigen::VectorXd heatmaps_vjp(const Landmarks2D& landmarks, const MapStack& cotangent, const MapParams& params);

/// Intensity-weighted centroid in normalized coordinates.
Vec2 soft_argmax(std::span<const double> map, const Lattice& lattice);

/// Soft-argmax of every channel.
Landmarks2D soft_argmax(const MapStack& maps);

/// Single-threaded reference kernels, kept to check the OpenMP versions.
namespace serial {

MapStack render_heatmaps(const Landmarks2D& landmarks, const MapParams& params);
MapStack render_affinity(const Landmarks2D& landmarks, std::span<const Limb> limbs, const MapParams& params);
Eigen::VectorXd maps_vjp(const Landmarks2D& landmarks, const SpatialMaps& cotangent, const KinematicTree& tree,
                         const MapParams& params);

}  // namespace serial

}  // namespace ksp
