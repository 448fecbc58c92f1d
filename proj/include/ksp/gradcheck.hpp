#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ksp/camera.hpp"
#include "ksp/skeleton.hpp"
#include "ksp/spatial_maps.hpp"

namespace ksp {

enum class GradStage { fk, project, maps, full_chain };

const char* to_string(GradStage stage);
GradStage grad_stage_from_string(std::string_view name);

/// Relative error denominators never drop below this.
inline constexpr double kGradDenominatorFloor = 1e-8;
/// Components where both gradients are smaller than this are compared by
/// absolute difference (critical points, where the relative error is noise).
inline constexpr double kGradAbsoluteFallback = 1e-6;

struct GradcheckReport {
  GradStage stage = GradStage::fk;
  std::uint64_t seed = 0;
  double eps = 0.0;
  Eigen::VectorXd analytic;
  Eigen::VectorXd numeric;
  std::vector<double> errors;  // per coordinate
  double max_error = 0.0;
  int absolute_fallbacks = 0;  // coordinates compared by absolute difference
};

using ScalarFn = std::function<double(std::span<const double>)>;

/// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps).
Eigen::VectorXd central_difference(const ScalarFn& f, std::span<const double> x, double eps);

/// Compares `analytic` against central differences of `f` at `x`.
GradcheckReport check_gradient(const ScalarFn& f, const Eigen::VectorXd& analytic, std::span<const double> x,
                               double eps);

struct GradcheckSetup {
  KinematicTree tree;
  PerspectiveCamera intrinsics;
  MapParams maps;
};

/// Gradient of a random linear functional of the stage output at a seeded
/// random point. eps must lie in [1e-8, 1e-3].
GradcheckReport gradcheck(GradStage stage, std::uint64_t seed, double eps, const GradcheckSetup& setup);
GradcheckReport gradcheck(GradStage stage, std::uint64_t seed, double eps);

}  // namespace ksp
