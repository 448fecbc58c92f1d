#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "ksp/spatial_maps.hpp"

namespace ksp::detail {

/// Inclusive pixel range [lo, hi] along one axis.
struct Span1 {
  int lo = 0;
  int hi = -1;
};

inline Span1 clip_window(double center, double half, int size, bool truncate) {
  if (!truncate) return {0, size - 1};
  const int lo = std::max(0, static_cast<int>(std::ceil(center - half)));
  const int hi = std::min(size - 1, static_cast<int>(std::floor(center + half)));
  return {lo, hi};
}

struct HeatKernel {
  Vec2 center;  // lattice coordinates
  double inv_var;
  Span1 rows, cols;

  HeatKernel(const Vec2& c, const MapParams& p) : center(c), inv_var(1.0 / (p.sigma * p.sigma)) {
    const double half = kTruncationSigmas * p.sigma;
    rows = clip_window(c.y(), half, p.lattice.height, p.truncate);
    cols = clip_window(c.x(), half, p.lattice.width, p.truncate);
  }

  double value(int x, int y) const {
    const double dx = x - center.x(), dy = y - center.y();
    return std::exp(-0.5 * (dx * dx + dy * dy) * inv_var);
  }

  /// d value / d center, lattice units
  Vec2 grad(int x, int y) const {
    const double dx = x - center.x(), dy = y - center.y();
    const double v = std::exp(-0.5 * (dx * dx + dy * dy) * inv_var);
    return Vec2(v * dx * inv_var, v * dy * inv_var);
  }
};

struct AffinityKernel {
  LimbFrame frame;
  double sigma_y;
  double alpha;
  Span1 rows, cols;

  AffinityKernel(const Vec2& a, const Vec2& b, const MapParams& p)
      : frame(limb_frame(a, b, p)), sigma_y(p.sigma_y), alpha(p.alpha) {
    const double c = frame.axis.x(), s = frame.axis.y();
    const double sx = frame.sigma_x, sy = sigma_y;
    const double hx = kTruncationSigmas * std::sqrt(sx * sx * c * c + sy * sy * s * s);
    const double hy = kTruncationSigmas * std::sqrt(sx * sx * s * s + sy * sy * c * c);
    rows = clip_window(frame.midpoint.y(), hy, p.lattice.height, p.truncate);
    cols = clip_window(frame.midpoint.x(), hx, p.lattice.width, p.truncate);
  }

  // Offsets in the limb-aligned frame.
  Vec2 local(int x, int y) const {
    const Vec2 d(x - frame.midpoint.x(), y - frame.midpoint.y());
    const Vec2 normal(-frame.axis.y(), frame.axis.x());
    return Vec2(frame.axis.dot(d), normal.dot(d));
  }

  double value(int x, int y) const {
    const Vec2 u = local(x, y);
    const double tx = u.x() / frame.sigma_x, ty = u.y() / sigma_y;
    return std::exp(-0.5 * tx * tx - 0.5 * ty * ty);
  }

  /// d value / d (a.x, a.y, b.x, b.y), lattice units
  Eigen::Vector4d grad(int x, int y) const {
    const Vec2 u = local(x, y);
    const double sx = frame.sigma_x;
    const double tx = u.x() / sx, ty = u.y() / sigma_y;
    const double v = std::exp(-0.5 * tx * tx - 0.5 * ty * ty);

    const Vec2& e = frame.axis;
    const Vec2 normal(-e.y(), e.x());
    // Rotation of the frame only moves when the limb has a direction.
    const Vec2 dtheta = frame.length > 0.0 ? Vec2(normal / frame.length) : Vec2::Zero();

    const Vec2 dux_db = -0.5 * e + u.y() * dtheta;
    const Vec2 duy_db = -0.5 * normal - u.x() * dtheta;
    const Vec2 dux_da = -0.5 * e - u.y() * dtheta;
    const Vec2 duy_da = -0.5 * normal + u.x() * dtheta;
    const Vec2 dsx_db = frame.floored ? Vec2::Zero() : Vec2(alpha * e);

    const double ge_ux = -u.x() / (sx * sx);
    const double ge_uy = -u.y() / (sigma_y * sigma_y);
    const double ge_sx = u.x() * u.x() / (sx * sx * sx);

    const Vec2 ga = v * (ge_ux * dux_da + ge_uy * duy_da - ge_sx * dsx_db);
    const Vec2 gb = v * (ge_ux * dux_db + ge_uy * duy_db + ge_sx * dsx_db);
    return Eigen::Vector4d(ga.x(), ga.y(), gb.x(), gb.y());
  }
};

inline Vec2 lattice_scale(const Lattice& lattice) {
  return Vec2(lattice.width - 1, lattice.height - 1);
}

}  // namespace ksp::detail
