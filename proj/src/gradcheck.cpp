#include "ksp/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ksp/forward_kinematics.hpp"
#include "ksp/ik_solver.hpp"
#include "ksp/synth.hpp"

namespace ksp {

namespace {

Eigen::VectorXd random_weights(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = u(rng);
  return w;
}

SpatialMaps random_cotangent(const KinematicTree& tree, const MapParams& params, std::uint64_t seed) {
  const int h = params.lattice.height, w = params.lattice.width;
  SpatialMaps out{MapStack(tree.joint_count(), h, w), MapStack(tree.limb_count(), h, w), params};
  const auto wh = random_weights(static_cast<Eigen::Index>(out.heat.data.size()), seed);
  const auto wa = random_weights(static_cast<Eigen::Index>(out.affinity.data.size()), seed + 1);
  std::copy(wh.begin(), wh.end(), out.heat.data.begin());
  std::copy(wa.begin(), wa.end(), out.affinity.data.begin());
  return out;
}

double inner(const SpatialMaps& a, const SpatialMaps& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.heat.data.size(); ++i) acc += a.heat.data[i] * b.heat.data[i];
  for (std::size_t i = 0; i < a.affinity.data.size(); ++i) acc += a.affinity.data[i] * b.affinity.data[i];
  return acc;
}

Pose3D unflatten_pose(std::span<const double> x) {
  Pose3D pose;
  pose.joints.resize(static_cast<Eigen::Index>(x.size() / 3), 3);
  for (Eigen::Index j = 0; j < pose.joints.rows(); ++j) {
    pose.joints.row(j) << x[3 * j], x[3 * j + 1], x[3 * j + 2];
  }
  return pose;
}

}  // namespace

const char* to_string(GradStage stage) {
  switch (stage) {
    case GradStage::fk:
      return "fk";
    case GradStage::project:
      return "project";
    case GradStage::maps:
      return "maps";
    case GradStage::full_chain:
      return "full_chain";
  }
  return "unknown";
}

GradStage grad_stage_from_string(std::string_view name) {
  if (name == "fk") return GradStage::fk;
  if (name == "project") return GradStage::project;
  if (name == "maps") return GradStage::maps;
  if (name == "full_chain") return GradStage::full_chain;
  throw ValidationError("unknown gradcheck stage '" + std::string(name) + "'");
}

Eigen::VectorXd central_difference(const ScalarFn& f, std::span<const double> x, double eps) {
  std::vector<double> probe(x.begin(), x.end());
  Eigen::VectorXd out(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = f(probe);
    probe[i] = x[i] - eps;
    const double down = f(probe);
    probe[i] = x[i];
    out[static_cast<Eigen::Index>(i)] = (up - down) / (2.0 * eps);
  }
  return out;
}

GradcheckReport check_gradient(const ScalarFn& f, const Eigen::VectorXd& analytic, std::span<const double> x,
                               double eps) {
  if (!(eps >= 1e-8 && eps <= 1e-3)) throw ValidationError("gradcheck eps must lie in [1e-8, 1e-3]");
  if (analytic.size() != static_cast<Eigen::Index>(x.size())) {
    throw ValidationError("analytic gradient has the wrong length");
  }
  GradcheckReport report;
  report.eps = eps;
  report.analytic = analytic;
  report.numeric = central_difference(f, x, eps);
  report.errors.resize(x.size());
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], n = report.numeric[i];
    const double diff = std::abs(a - n);
    const double scale = std::max(std::abs(a), std::abs(n));
    double err;
    if (scale < kGradAbsoluteFallback) {
      err = diff;
      ++report.absolute_fallbacks;
    } else {
      err = diff / std::max(scale, kGradDenominatorFloor);
    }
    report.errors[i] = err;
    report.max_error = std::max(report.max_error, err);
  }
  return report;
}

GradcheckReport gradcheck(GradStage stage, std::uint64_t seed, double eps, const GradcheckSetup& setup) {
  const auto& tree = setup.tree;
  require_valid(tree);
  const SynthPose point = synth_pose(seed, tree);
  const auto state = pack_state(point.params, point.camera);
  const auto v = pack_params(point.params);
  const auto& intr = setup.intrinsics;

  GradcheckReport report;
  switch (stage) {
    case GradStage::fk: {
      const Eigen::VectorXd w = random_weights(3 * tree.joint_count(), seed);
      ScalarFn f = [&](std::span<const double> x) { return w.dot(flatten(forward_kinematics(x, tree))); };
      const Eigen::VectorXd analytic = fk_jacobian(std::span<const double>(v), tree).transpose() * w;
      report = check_gradient(f, analytic, v, eps);
      break;
    }
    case GradStage::project: {
      const Eigen::VectorXd pose_flat = flatten(forward_kinematics(point.params, tree));
      std::vector<double> x(pose_flat.begin(), pose_flat.end());
      const auto cam = pack_camera(point.camera);
      x.insert(x.end(), cam.begin(), cam.end());
      const auto n = pose_flat.size();
      const Eigen::VectorXd w = random_weights(2 * tree.joint_count(), seed);
      ScalarFn f = [&](std::span<const double> s) {
        const auto pose = unflatten_pose(s.first(static_cast<std::size_t>(n)));
        return w.dot(flatten(project(pose, unpack_camera(s.subspan(static_cast<std::size_t>(n))), intr)));
      };
      const auto jac = projection_jacobian(unflatten_pose(std::span<const double>(x).first(n)), point.camera, intr);
      Eigen::VectorXd analytic(static_cast<Eigen::Index>(x.size()));
      analytic << jac.wrt_pose.transpose() * w, jac.wrt_camera.transpose() * w;
      report = check_gradient(f, analytic, x, eps);
      break;
    }
    case GradStage::maps: {
      const Landmarks2D lm = state_landmarks(state, tree, intr);
      const Eigen::VectorXd flat = flatten(lm);
      std::vector<double> x(flat.begin(), flat.end());
      const SpatialMaps w = random_cotangent(tree, setup.maps, seed);
      ScalarFn f = [&](std::span<const double> s) {
        const Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
        return inner(w, render_maps(unflatten_landmarks(p), tree, setup.maps));
      };
      const Eigen::VectorXd analytic = maps_vjp(lm, w, tree, setup.maps);
      report = check_gradient(f, analytic, x, eps);
      break;
    }
    case GradStage::full_chain: {
      const SpatialMaps w = random_cotangent(tree, setup.maps, seed);
      ScalarFn f = [&](std::span<const double> s) {
        return inner(w, render_maps(state_landmarks(s, tree, intr), tree, setup.maps));
      };
      const Landmarks2D lm = state_landmarks(state, tree, intr);
      const Eigen::VectorXd analytic = state_gradient(state, maps_vjp(lm, w, tree, setup.maps), tree, intr);
      report = check_gradient(f, analytic, state, eps);
      break;
    }
  }
  report.stage = stage;
  report.seed = seed;
  return report;
}

GradcheckReport gradcheck(GradStage stage, std::uint64_t seed, double eps) {
  return gradcheck(stage, seed, eps, GradcheckSetup{default_h36m_tree(), {}, {}});
}

}  // namespace ksp
