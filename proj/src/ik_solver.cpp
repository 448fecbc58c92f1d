#include "ksp/ik_solver.hpp"

#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <random>
#include <string>

#include "ksp/forward_kinematics.hpp"

namespace ksp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int direction_count(const KinematicTree& tree) { return static_cast<int>(direction_joints(tree).size()); }

void project_state(std::vector<double>& state, int dirs) {
  for (int k = 0; k < dirs; ++k) {
    Eigen::Map<Vec3> d(state.data() + 1 + 3 * k);
    d /= d.norm();
  }
  const int cam = packed_param_size(dirs);
  for (int a = 0; a < 3; ++a) {
    const Vec2 n = normalize_sincos(Vec2(state[cam + 2 * a], state[cam + 2 * a + 1]));
    state[cam + 2 * a] = n.x();
    state[cam + 2 * a + 1] = n.y();
  }
}

/// Objective on landmarks: value and gradient w.r.t. flattened landmarks.
struct LandmarkObjective {
  std::function<double(const Landmarks2D&)> value;
  std::function<Eigen::VectorXd(const Landmarks2D&)> gradient;
};

LandmarkObjective landmark_objective(const Landmarks2D& target, const FitConfig& cfg) {
  const Vec2 scale(cfg.error_lattice.width - 1, cfg.error_lattice.height - 1);
  const double joints = target.joint_count();
  if (cfg.objective == FitObjective::landmark_l2) {
    // mean squared pixel error on the error lattice
    return {[=](const Landmarks2D& p) {
              double acc = 0.0;
              for (int j = 0; j < p.joint_count(); ++j) {
                const Vec2 r = (p.points.row(j) - target.points.row(j)).transpose().cwiseProduct(scale);
                acc += r.squaredNorm();
              }
              return acc / joints;
            },
            [=](const Landmarks2D& p) {
              Eigen::VectorXd g(2 * p.joint_count());
              for (int j = 0; j < p.joint_count(); ++j) {
                const Vec2 r = (p.points.row(j) - target.points.row(j)).transpose();
                g.segment<2>(2 * j) = 2.0 * r.cwiseProduct(scale).cwiseProduct(scale) / joints;
              }
              return g;
            }};
  }
  if (cfg.objective == FitObjective::landmark_l1) {
    return {[=](const Landmarks2D& p) {
              double acc = 0.0;
              for (int j = 0; j < p.joint_count(); ++j) {
                const Vec2 r = (p.points.row(j) - target.points.row(j)).transpose().cwiseProduct(scale);
                acc += r.cwiseAbs().sum();
              }
              return acc / joints;
            },
            [=](const Landmarks2D& p) {
              Eigen::VectorXd g(2 * p.joint_count());
              for (int j = 0; j < p.joint_count(); ++j) {
                for (int k = 0; k < 2; ++k) {
                  const double r = p.points(j, k) - target.points(j, k);
                  g(2 * j + k) = (r > 0.0 ? 1.0 : r < 0.0 ? -1.0 : 0.0) * scale[k] / joints;
                }
              }
              return g;
            }};
  }
  throw ValidationError("landmark fitting needs a landmark objective");
}

LandmarkObjective heatmap_objective(const MapStack& target, const FitConfig& cfg) {
  const double channels = target.channels;
  const MapParams params = cfg.maps;
  return {[=, &target](const Landmarks2D& p) {
            const MapStack model = render_heatmaps(p, params);
            double acc = 0.0;
            for (std::size_t i = 0; i < model.data.size(); ++i) {
              const double d = model.data[i] - target.data[i];
              acc += d * d;
            }
            return acc / channels;
          },
          [=, &target](const Landmarks2D& p) {
            MapStack residual = render_heatmaps(p, params);
            for (std::size_t i = 0; i < residual.data.size(); ++i) {
              residual.data[i] = 2.0 * (residual.data[i] - target.data[i]) / channels;
            }
            return heatmaps_vjp(p, residual, params);
          }};
}

FitResult run_fit(const LandmarkObjective& objective, const Landmarks2D& reference, const KinematicTree& tree,
                  const FitInit& init, const FitConfig& cfg) {
  cfg.validate();
  require_valid(tree);
  const int dirs = direction_count(tree);
  if (static_cast<int>(init.params.bone_dirs.size()) != dirs) {
    throw ValidationError("initial parameters do not match the tree");
  }

  std::vector<double> state = pack_state(init.params, init.camera);
  project_state(state, dirs);

  auto evaluate = [&](const std::vector<double>& x) {
    return objective.value(state_landmarks(x, tree, cfg.intrinsics));
  };
  auto evaluate_trial = [&](const std::vector<double>& x) {
    try {
      const double f = evaluate(x);
      return std::isfinite(f) ? f : kInf;
    } catch (const BehindCameraError&) {
      return kInf;
    }
  };

  FitResult result;
  result.seed = cfg.seed;
  double f = evaluate(state);
  if (!std::isfinite(f)) throw std::runtime_error("initial objective is not finite");
  result.objective_trace.push_back(f);

  double alpha = cfg.step_size;
  for (int it = 0; it < cfg.max_iters; ++it) {
    if (f <= 0.0) {
      result.converged = true;
      break;
    }
    const Landmarks2D lm = state_landmarks(state, tree, cfg.intrinsics);
    Eigen::VectorXd grad = state_gradient(state, objective.gradient(lm), tree, cfg.intrinsics);
    if (!grad.allFinite()) throw std::runtime_error("non-finite gradient");
    if (!cfg.optimize_camera) grad.tail(CameraParams::kPackedSize).setZero();
    if (grad.squaredNorm() == 0.0) {
      result.converged = true;
      break;
    }

    std::vector<double> trial(state.size());
    double f_trial = kInf;
    for (int h = 0; h <= cfg.max_halvings; ++h) {
      for (std::size_t i = 0; i < state.size(); ++i) trial[i] = state[i] - alpha * grad[static_cast<Eigen::Index>(i)];
      project_state(trial, dirs);
      f_trial = evaluate_trial(trial);
      if (f_trial < f) break;
      alpha *= 0.5;
    }
    if (!(f_trial < f)) {
      result.step_rejected = true;
      break;
    }

    const double decrease = f - f_trial;
    state.swap(trial);
    f = f_trial;
    result.objective_trace.push_back(f);
    ++result.iterations;
    alpha *= 2.0;
    if (decrease < cfg.tol) {
      result.converged = true;
      break;
    }
  }

  const auto fitted = unpack_state(state, dirs);
  result.params = fitted.params;
  result.camera = fitted.camera;
  result.reprojection_error =
      reprojection_error(state_landmarks(state, tree, cfg.intrinsics), reference, cfg.error_lattice);
  return result;
}

}  // namespace

const char* to_string(FitObjective objective) {
  switch (objective) {
    case FitObjective::landmark_l2:
      return "landmark_l2";
    case FitObjective::landmark_l1:
      return "landmark_l1";
    case FitObjective::heatmap_l2:
      return "heatmap_l2";
  }
  return "unknown";
}

FitObjective fit_objective_from_string(std::string_view name) {
  if (name == "landmark_l2") return FitObjective::landmark_l2;
  if (name == "landmark_l1") return FitObjective::landmark_l1;
  if (name == "heatmap_l2") return FitObjective::heatmap_l2;
  throw ValidationError("unknown objective '" + std::string(name) + "'");
}

void FitConfig::validate() const {
  if (max_iters <= 0) throw ValidationError("max_iters must be positive");
  if (!(step_size > 0.0)) throw ValidationError("step_size must be positive");
  if (!(tol >= 0.0)) throw ValidationError("tol must be nonnegative");
  if (max_halvings < 0) throw ValidationError("max_halvings must be nonnegative");
  if (error_lattice.width < 2 || error_lattice.height < 2) throw ValidationError("error lattice too small");
  intrinsics.validate();
  maps.validate();
}

std::vector<double> pack_state(const LocalKinematicParams& params, const CameraParams& camera) {
  auto state = pack_params(params);
  const auto cam = pack_camera(camera);
  state.insert(state.end(), cam.begin(), cam.end());
  return state;
}

FitInit unpack_state(std::span<const double> state, int direction_count) {
  const auto n = static_cast<std::size_t>(packed_param_size(direction_count));
  if (state.size() != n + CameraParams::kPackedSize) throw ValidationError("state vector has the wrong length");
  FitInit out;
  out.params = unpack_params(state.first(n)).params;
  out.camera = unpack_camera(state.subspan(n));
  return out;
}

Landmarks2D state_landmarks(std::span<const double> state, const KinematicTree& tree,
                            const PerspectiveCamera& intrinsics) {
  const auto n = state.size() - CameraParams::kPackedSize;
  const Pose3D pose = forward_kinematics(state.first(n), tree);
  return project(pose, unpack_camera(state.subspan(n)), intrinsics);
}

Eigen::VectorXd state_gradient(std::span<const double> state, const Eigen::VectorXd& landmark_grad,
                               const KinematicTree& tree, const PerspectiveCamera& intrinsics) {
  const auto n = state.size() - CameraParams::kPackedSize;
  const auto v = state.first(n);
  const Pose3D pose = forward_kinematics(v, tree);
  const auto proj = projection_jacobian(pose, unpack_camera(state.subspan(n)), intrinsics);
  const Eigen::MatrixXd fk = fk_jacobian(v, tree);

  Eigen::VectorXd grad(static_cast<Eigen::Index>(state.size()));
  const Eigen::VectorXd pose_grad = proj.wrt_pose.transpose() * landmark_grad;
  grad.head(static_cast<Eigen::Index>(n)) = fk.transpose() * pose_grad;
  grad.tail(CameraParams::kPackedSize) = proj.wrt_camera.transpose() * landmark_grad;
  return grad;
}

double reprojection_error(const Landmarks2D& a, const Landmarks2D& b, const Lattice& lattice) {
  if (a.joint_count() != b.joint_count()) throw ValidationError("landmark sets differ in size");
  if (a.joint_count() == 0) return 0.0;
  const Vec2 scale(lattice.width - 1, lattice.height - 1);
  double acc = 0.0;
  for (int j = 0; j < a.joint_count(); ++j) {
    acc += (a.points.row(j) - b.points.row(j)).transpose().cwiseProduct(scale).norm();
  }
  return acc / a.joint_count();
}

LocalKinematicParams perturb_directions(const LocalKinematicParams& params, double max_angle, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, max_angle);
  LocalKinematicParams out = params;
  for (auto& d : out.bone_dirs) {
    Vec3 axis;
    do {
      const Vec3 r(normal(rng), normal(rng), normal(rng));
      axis = r - r.dot(d) * d;
    } while (axis.norm() < 1e-6);
    axis.normalize();
    const double angle = uniform(rng);
    d = (std::cos(angle) * d + std::sin(angle) * axis).normalized();
  }
  return out;
}

FitResult fit_pose_to_landmarks(const Landmarks2D& target, const KinematicTree& tree, const FitInit& init,
                                const FitConfig& cfg) {
  if (target.joint_count() != tree.joint_count()) throw ValidationError("target landmark count does not match tree");
  if (!target.points.allFinite()) throw ValidationError("target landmarks must be finite");
  return run_fit(landmark_objective(target, cfg), target, tree, init, cfg);
}

FitResult fit_pose_to_heatmaps(const MapStack& target, const KinematicTree& tree, const FitInit& init,
                               const FitConfig& cfg) {
  if (target.channels != tree.joint_count()) throw ValidationError("target maps need one channel per joint");
  FitConfig c = cfg;
  c.objective = FitObjective::heatmap_l2;
  c.maps.lattice = Lattice{target.height, target.width};
  const Landmarks2D reference = soft_argmax(target);
  return run_fit(heatmap_objective(target, c), reference, tree, init, c);
}

FitResult fit_multistart(const Landmarks2D* target_landmarks, const MapStack* target_maps, const KinematicTree& tree,
                         const FitInit& init, const FitConfig& cfg, int restarts) {
  if (restarts < 1) throw ValidationError("restarts must be positive");
  if ((target_landmarks == nullptr) == (target_maps == nullptr)) {
    throw ValidationError("exactly one of target landmarks or target maps is required");
  }
  std::vector<FitResult> results(restarts);
  std::vector<std::exception_ptr> errors(restarts);

#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < restarts; ++r) {
    try {
      FitConfig c = cfg;
      c.seed = cfg.seed + static_cast<std::uint64_t>(r);
      FitInit start = init;
      if (r > 0) start.params = perturb_directions(init.params, 0.3, c.seed);
      results[r] = target_landmarks ? fit_pose_to_landmarks(*target_landmarks, tree, start, c)
                                    : fit_pose_to_heatmaps(*target_maps, tree, start, c);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }

  int best = -1;
  for (int r = 0; r < restarts; ++r) {
    if (errors[r]) continue;
    if (best < 0 || results[r].final_objective() < results[best].final_objective()) best = r;
  }
  if (best < 0) std::rethrow_exception(errors.front());
  return results[best];
}

}  // namespace ksp
