#include "ksp/losses.hpp"

#include <cmath>
#include <string>

namespace ksp {

namespace {

void check_weight(double w, const char* name) {
  if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError(std::string(name) + " must be a nonnegative weight");
}

double feature_mean_abs(const FeatureVector& a, const FeatureVector& b) {
  return mean_abs(std::span<const double>(a.values.data(), a.values.size()),
                  std::span<const double>(b.values.data(), b.values.size()));
}

Vec2 rotate_about_center(const Vec2& p, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  const Vec2 d = p - Vec2(0.5, 0.5);
  return Vec2(0.5 + c * d.x() - s * d.y(), 0.5 + s * d.x() + c * d.y());
}

Landmarks2D flip(const Landmarks2D& p, std::span<const int> mirror) {
  if (mirror.size() != static_cast<std::size_t>(p.joint_count())) {
    throw ValidationError("mirror map size does not match the landmarks");
  }
  Landmarks2D out;
  out.points.resize(p.joint_count(), 2);
  for (int j = 0; j < p.joint_count(); ++j) {
    out.points(mirror[j], 0) = 1.0 - p.points(j, 0);
    out.points(mirror[j], 1) = p.points(j, 1);
  }
  return out;
}

Landmarks2D rotate(const Landmarks2D& p, double angle) {
  Landmarks2D out;
  out.points.resize(p.joint_count(), 2);
  for (int j = 0; j < p.joint_count(); ++j) {
    out.points.row(j) = rotate_about_center(p.points.row(j).transpose(), angle).transpose();
  }
  return out;
}

// Bilinear sample; coordinates within 1e-9 of a pixel snap onto it so that
// quarter turns stay pixel permutations.
double sample(const Image& img, int c, double x, double y) {
  const double rx = std::round(x), ry = std::round(y);
  if (std::abs(x - rx) < 1e-9) x = rx;
  if (std::abs(y - ry) < 1e-9) y = ry;
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  double acc = 0.0;
  for (int dy = 0; dy <= 1; ++dy) {
    for (int dx = 0; dx <= 1; ++dx) {
      const double w = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
      if (w == 0.0) continue;
      const int xi = x0 + dx, yi = y0 + dy;
      if (xi < 0 || yi < 0 || xi >= img.width || yi >= img.height) continue;
      acc += w * img.at(c, yi, xi);
    }
  }
  return acc;
}

}  // namespace

double mean_abs(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ValidationError("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  if (a.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

double mean_abs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError("dimension mismatch: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                          " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  if (a.size() == 0) return 0.0;
  // Row-major traversal keeps the summation order identical to a per-joint loop.
  double acc = 0.0;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) acc += std::abs(a(r, c) - b(r, c));
  }
  return acc / static_cast<double>(a.size());
}

double mean_abs_image_diff(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw ValidationError("image dimension mismatch");
  }
  return mean_abs(std::span<const double>(a.data), std::span<const double>(b.data));
}

double loss_paired(double image_diff, const Landmarks2D& p, const Landmarks2D& p_hat, const FeatureVector& f,
                   const FeatureVector& f_hat, double lambda1, double lambda2) {
  check_weight(lambda1, "lambda1");
  check_weight(lambda2, "lambda2");
  if (!(image_diff >= 0.0)) throw ValidationError("image difference must be nonnegative");
  return image_diff + lambda1 * mean_abs(p.points, p_hat.points) + lambda2 * feature_mean_abs(f, f_hat);
}

double loss_unpaired(const Landmarks2D& p, const Landmarks2D& p_tilde, const FeatureVector& f,
                     const FeatureVector& f_tilde, double lambda2) {
  check_weight(lambda2, "lambda2");
  return mean_abs(p.points, p_tilde.points) + lambda2 * feature_mean_abs(f, f_tilde);
}

double loss_prior(const Pose3D& p3, const Pose3D& p3_gt, const Landmarks2D& p2, const Landmarks2D& p2_gt, double w3,
                  double w2) {
  check_weight(w3, "w3");
  check_weight(w2, "w2");
  return w3 * mean_abs(p3.joints, p3_gt.joints) + w2 * mean_abs(p2.points, p2_gt.points);
}

Landmarks2D apply_transform(const Landmarks2D& p, const SpatialTransform& t, std::span<const int> mirror) {
  if (t.kind == SpatialTransform::Kind::horizontal_flip) return flip(p, mirror);
  return rotate(p, t.rotation_angle);
}

Landmarks2D invert_transform(const Landmarks2D& p, const SpatialTransform& t, std::span<const int> mirror) {
  // mirror is an involution, so the flip undoes itself
  if (t.kind == SpatialTransform::Kind::horizontal_flip) return flip(p, mirror);
  return rotate(p, -t.rotation_angle);
}

Image transform_image(const Image& image, const SpatialTransform& t) {
  Image out(image.width, image.height, image.channels);
  if (t.kind == SpatialTransform::Kind::horizontal_flip) {
    for (int c = 0; c < image.channels; ++c)
      for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) out.at(c, y, x) = image.at(c, y, image.width - 1 - x);
    return out;
  }
  const double cx = 0.5 * (image.width - 1), cy = 0.5 * (image.height - 1);
  const double cs = std::cos(t.rotation_angle), sn = std::sin(t.rotation_angle);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      // pull from the source location that rotates onto (x, y)
      const double dx = x - cx, dy = y - cy;
      const double sx = cx + cs * dx + sn * dy;
      const double sy = cy - sn * dx + cs * dy;
      for (int c = 0; c < image.channels; ++c) out.at(c, y, x) = sample(image, c, sx, sy);
    }
  }
  return out;
}

ConsistencyResidual unpaired_consistency_residual(const Image& image, const SpatialTransform& t,
                                                  const EnergyModel& model, std::span<const int> mirror) {
  const Landmarks2D direct = model.encode_pose(image);
  const Image moved = transform_image(image, t);
  const Landmarks2D through = invert_transform(model.encode_pose(moved), t, mirror);
  if (through.joint_count() != direct.joint_count()) throw ValidationError("pose encoder changed joint count");

  const FeatureVector f = model.encode_appearance(image);
  const FeatureVector f_moved = model.encode_appearance(moved);
  if (f.values.size() != f_moved.values.size()) throw ValidationError("appearance encoder changed feature length");
  return {direct.points - through.points, f.values - f_moved.values};
}

UnpairedEnergy unpaired_energy_loss(const SpatialMaps& maps, const Landmarks2D& p, const FeatureVector& f,
                                    const Image& background, const SpatialTransform& t, const EnergyModel& model,
                                    std::span<const int> mirror, double lambda2) {
  UnpairedEnergy out;
  out.synthesized = model.reconstruct(maps, f, background);
  out.p_tilde = invert_transform(model.encode_pose(transform_image(out.synthesized, t)), t, mirror);
  out.f_tilde = model.encode_appearance(out.synthesized);
  out.loss = loss_unpaired(p, out.p_tilde, f, out.f_tilde, lambda2);
  return out;
}

}  // namespace ksp
