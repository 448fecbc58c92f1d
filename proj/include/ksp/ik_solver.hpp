#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ksp/camera.hpp"
#include "ksp/skeleton.hpp"
#include "ksp/spatial_maps.hpp"

namespace ksp {

enum class FitObjective { landmark_l2, landmark_l1, heatmap_l2 };

const char* to_string(FitObjective objective);
FitObjective fit_objective_from_string(std::string_view name);

struct FitConfig {
  int max_iters = 2000;
  double step_size = 1e-3;  // first trial step; grows x2 after each accepted step
  FitObjective objective = FitObjective::landmark_l2;
  double tol = 1e-12;       // stop once an accepted step decreases the objective by less
  std::uint64_t seed = 0;   // used by multi-start perturbations
  int max_halvings = 20;
  bool optimize_camera = true;
  Lattice error_lattice{256, 256};  // reprojection error is reported in these pixels
  MapParams maps;                   // model-side rendering for heatmap_l2
  PerspectiveCamera intrinsics;

  void validate() const;
};

struct FitResult {
  LocalKinematicParams params;
  CameraParams camera;
  std::vector<double> objective_trace;  // initial value, then one entry per accepted step
  bool converged = false;
  bool step_rejected = false;  // line search exhausted its halvings
  int iterations = 0;
  double reprojection_error = 0.0;  // mean per-joint distance on error_lattice
  std::uint64_t seed = 0;

  double final_objective() const { return objective_trace.empty() ? 0.0 : objective_trace.back(); }
};

struct FitInit {
  LocalKinematicParams params;
  CameraParams camera;
};

/// Projected gradient descent on objective(project(fk(v), c), target). After
/// every update bone directions are put back on the unit sphere and (sin, cos)
/// pairs on the unit circle. objective must be landmark_l2 or landmark_l1.
FitResult fit_pose_to_landmarks(const Landmarks2D& target, const KinematicTree& tree, const FitInit& init,
                                const FitConfig& cfg);

/// Same loop against target heat maps (one channel per joint) using the
/// heat-map VJP. objective is forced to heatmap_l2.
FitResult fit_pose_to_heatmaps(const MapStack& target, const KinematicTree& tree, const FitInit& init,
                               const FitConfig& cfg);

/// Runs `restarts` fits (restart 0 from init, the rest from seeded perturbations
/// of it) in parallel and keeps the lowest final objective, ties to the lowest seed.
FitResult fit_multistart(const Landmarks2D* target_landmarks, const MapStack* target_maps, const KinematicTree& tree,
                         const FitInit& init, const FitConfig& cfg, int restarts);

/// Rotates every bone direction by a random angle up to max_angle (uniform
/// axis orthogonal to the direction). Deterministic in seed.
LocalKinematicParams perturb_directions(const LocalKinematicParams& params, double max_angle, std::uint64_t seed);

/// Mean per-joint distance between two landmark sets in pixels of `lattice`.
double reprojection_error(const Landmarks2D& a, const Landmarks2D& b, const Lattice& lattice);

/// Packed (v, c) vector used by the solver and gradcheck: 40 + 9 entries for the default tree.
std::vector<double> pack_state(const LocalKinematicParams& params, const CameraParams& camera);
FitInit unpack_state(std::span<const double> state, int direction_count);

/// Landmarks for a packed (v, c) state without renormalizing anything.
Landmarks2D state_landmarks(std::span<const double> state, const KinematicTree& tree,
                            const PerspectiveCamera& intrinsics);

/// Chain rule from a landmark gradient (2J) to the packed state.
Eigen::VectorXd state_gradient(std::span<const double> state, const Eigen::VectorXd& landmark_grad,
                               const KinematicTree& tree, const PerspectiveCamera& intrinsics);

}  // namespace ksp
