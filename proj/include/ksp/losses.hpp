#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "ksp/skeleton.hpp"
#include "ksp/spatial_maps.hpp"

namespace ksp {

/// Appearance embedding produced by an appearance encoder.
struct FeatureVector {
  Eigen::VectorXd values;
};

/// Planar float image, channel-major like MapStack.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int width, int height, int channels)
      : width(width), height(height), channels(channels),
        data(static_cast<std::size_t>(width) * height * channels, 0.0) {}

  double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
};

struct SpatialTransform {
  enum class Kind { horizontal_flip, in_plane_rotation };
  Kind kind = Kind::horizontal_flip;
  double rotation_angle = 0.0;  // radians, rotation kind only

  static SpatialTransform flip() { return {Kind::horizontal_flip, 0.0}; }
  static SpatialTransform rotation(double angle) { return {Kind::in_plane_rotation, angle}; }
};

/// Stand-in for the frozen decoder and the two encoders. Implementations must
/// be deterministic; the library calls a model from one thread at a time.
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;
  virtual Image reconstruct(const SpatialMaps& maps, const FeatureVector& appearance, const Image& background) const = 0;
  virtual Landmarks2D encode_pose(const Image& image) const = 0;
  virtual FeatureVector encode_appearance(const Image& image) const = 0;
};

struct LossWeights {
  double lambda1 = 1.0;  // paired pose term
  double lambda2 = 1.0;  // appearance term (paired and unpaired)
  double w3 = 1.0;       // prior, 3D
  double w2 = 1.0;       // prior, 2D
};

/// Mean absolute difference over all elements. Throws on size mismatch.
double mean_abs(std::span<const double> a, std::span<const double> b);
double mean_abs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

double mean_abs_image_diff(const Image& a, const Image& b);

/// image_diff + lambda1 |p - p_hat| + lambda2 |f - f_hat|
double loss_paired(double image_diff, const Landmarks2D& p, const Landmarks2D& p_hat, const FeatureVector& f,
                   const FeatureVector& f_hat, double lambda1, double lambda2);

/// |p - p_tilde| + lambda2 |f - f_tilde|, no image term.
double loss_unpaired(const Landmarks2D& p, const Landmarks2D& p_tilde, const FeatureVector& f,
                     const FeatureVector& f_tilde, double lambda2);

/// w3 |p3 - p3_gt| + w2 |p2 - p2_gt|
double loss_prior(const Pose3D& p3, const Pose3D& p3_gt, const Landmarks2D& p2, const Landmarks2D& p2_gt, double w3,
                  double w2);

/// Flip: x -> 1 - x, then joint j moves to channel mirror[j].
/// Rotation: about the image centre (0.5, 0.5).
Landmarks2D apply_transform(const Landmarks2D& p, const SpatialTransform& t, std::span<const int> mirror);
Landmarks2D invert_transform(const Landmarks2D& p, const SpatialTransform& t, std::span<const int> mirror);

/// Image counterparts. Flip is a pixel permutation; rotation resamples bilinearly
/// about the lattice centre and writes zero outside the source.
Image transform_image(const Image& image, const SpatialTransform& t);

struct ConsistencyResidual {
  Eigen::MatrixX2d pose;        // E_P(I) - T^-1(E_P(T(I)))
  Eigen::VectorXd feature;      // E_A(I) - E_A(T(I))
};

ConsistencyResidual unpaired_consistency_residual(const Image& image, const SpatialTransform& t,
                                                  const EnergyModel& model, std::span<const int> mirror);

struct UnpairedEnergy {
  double loss = 0.0;
  Landmarks2D p_tilde;
  FeatureVector f_tilde;
  Image synthesized;
};

/// Decodes (maps, appearance, background) through the frozen model, re-encodes
/// the transformed synthesis and scores it against the original encodings.
UnpairedEnergy unpaired_energy_loss(const SpatialMaps& maps, const Landmarks2D& p, const FeatureVector& f,
                                    const Image& background, const SpatialTransform& t, const EnergyModel& model,
                                    std::span<const int> mirror, double lambda2);

}  // namespace ksp
