// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <utility>

#include <Eigen/LU>

#include "fixtures.hpp"
#include "ksp/camera.hpp"
#include "ksp/forward_kinematics.hpp"
#include "ksp/gradcheck.hpp"
#include "ksp/ik_solver.hpp"
#include "ksp/losses.hpp"
#include "ksp/spatial_maps.hpp"
#include "ksp/synth.hpp"
#include "ksp/video.hpp"

using namespace ksp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = limit_s <= 0.0 || secs < limit_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s %-28s %s time=%.2fs%s\n", pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs,
              in_time ? "" : " (over time limit)");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Landmarks2D pose_landmarks(std::uint64_t seed, const KinematicTree& tree) {
  const auto sp = synth_pose(seed, tree);
  return project(forward_kinematics(sp.params, tree), sp.camera);
}

Outcome bone_lengths() {
  const auto tree = default_h36m_tree();
  double worst = 0.0;
  bool root_exact = true;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto pose = forward_kinematics(synth_pose(seed, tree).params, tree);
    for (int j = 1; j < tree.joint_count(); ++j) {
      const double len = (pose.joints.row(j) - pose.joints.row(tree.parent[j])).norm();
      worst = std::max(worst, std::abs(len - tree.bone_length[j]));
    }
    const int neck = tree.root.neck;
    root_exact = root_exact && pose.joints.row(tree.root.pelvis).isZero(0.0) && pose.joints(neck, 0) == 0.0 &&
                 pose.joints(neck, 1) == 0.0;
  }
  return {worst < 1e-9 && root_exact, fmt("max_len_err=%.3e root_exact=%.0f", worst, root_exact)};
}

Outcome gradients() {
  const std::pair<GradStage, double> stages[] = {
      {GradStage::fk, 1e-6}, {GradStage::project, 1e-6}, {GradStage::maps, 1e-7}, {GradStage::full_chain, 1e-5}};
  double worst = 0.0;
  for (const auto& [stage, eps] : stages) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) worst = std::max(worst, gradcheck(stage, seed, eps).max_error);
  }
  return {worst < 1e-5, fmt("max_rel_err=%.3e over 4 stages x 20 seeds", worst)};
}

Outcome map_oracle() {
  const auto tree = default_h36m_tree();
  const MapParams mp;
  const double sx = mp.lattice.width - 1, sy = mp.lattice.height - 1;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto lm = pose_landmarks(seed, tree);
    const auto heat = render_heatmaps(lm, mp);
    const auto aff = render_affinity(lm, tree.limbs, mp);
    for (int j = 0; j < tree.joint_count(); ++j) {
      const double px = lm.points(j, 0) * sx, py = lm.points(j, 1) * sy;
      for (int y = 0; y < mp.lattice.height; ++y)
        for (int x = 0; x < mp.lattice.width; ++x) {
          const double ref = std::exp(-((x - px) * (x - px) + (y - py) * (y - py)) / (2 * mp.sigma * mp.sigma));
          worst = std::max(worst, std::abs(heat.at(j, y, x) - ref));
        }
    }
    for (std::size_t l = 0; l < tree.limbs.size(); ++l) {
      const int a = tree.limbs[l].a, b = tree.limbs[l].b;
      const double ax = lm.points(a, 0) * sx, ay = lm.points(a, 1) * sy;
      const double bx = lm.points(b, 0) * sx, by = lm.points(b, 1) * sy;
      const double theta = std::atan2(by - ay, bx - ax);
      const double s = std::max(mp.alpha * std::hypot(bx - ax, by - ay), mp.sigma_floor);
      for (int y = 0; y < mp.lattice.height; ++y)
        for (int x = 0; x < mp.lattice.width; ++x) {
          const double dx = x - 0.5 * (ax + bx), dy = y - 0.5 * (ay + by);
          const double u = std::cos(theta) * dx + std::sin(theta) * dy;
          const double v = -std::sin(theta) * dx + std::cos(theta) * dy;
          const double ref = std::exp(-0.5 * (u * u / (s * s) + v * v / (mp.sigma_y * mp.sigma_y)));
          worst = std::max(worst, std::abs(aff.at(static_cast<int>(l), y, x) - ref));
        }
    }
  }
  return {worst < 1e-12, fmt("max_abs_diff=%.3e on 10 poses", worst)};
}

Outcome rotations() {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n;
  std::uniform_int_distribution<int> expo(-8, 8);
  double orth = 0.0, det = 0.0;
  bool scale_exact = true;
  for (int i = 0; i < 1000; ++i) {
    CameraParams c;
    for (auto& p : c.angles_sincos) p = Vec2(n(rng), n(rng));
    const Mat3 r = rotation_from_sincos(c);
    orth = std::max(orth, (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff());
    det = std::max(det, std::abs(r.determinant() - 1.0));
    CameraParams scaled = c;
    for (auto& p : scaled.angles_sincos) p *= std::ldexp(1.0, expo(rng));
    scale_exact = scale_exact && rotation_from_sincos(scaled) == r;
  }
  return {orth < 1e-9 && det < 1e-9 && scale_exact,
          fmt("max|RtR-I|=%.3e max|det-1|=%.3e scale_exact=%.0f", orth, det, scale_exact)};
}

Outcome flip_machinery() {
  const auto tree = default_h36m_tree();
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double roundtrip = 0.0, involution = 0.0;
  bool exact_mirror = true;
  for (int trial = 0; trial < 100; ++trial) {
    Landmarks2D p;
    p.points.resize(tree.joint_count(), 2);
    for (int j = 0; j < tree.joint_count(); ++j) p.points.row(j) << u(rng), u(rng);
    for (const auto& t : {SpatialTransform::flip(), SpatialTransform::rotation(u(rng) * 6.0 - 3.0)}) {
      const auto there = apply_transform(p, t, tree.mirror);
      roundtrip = std::max(roundtrip, (invert_transform(there, t, tree.mirror).points - p.points).cwiseAbs().maxCoeff());
      roundtrip = std::max(roundtrip, (apply_transform(invert_transform(p, t, tree.mirror), t, tree.mirror).points -
                                       p.points).cwiseAbs().maxCoeff());
    }
    const auto f = SpatialTransform::flip();
    const auto once = apply_transform(p, f, tree.mirror);
    involution = std::max(involution, (apply_transform(once, f, tree.mirror).points - p.points).cwiseAbs().maxCoeff());
    for (int j = 0; j < tree.joint_count(); ++j) {
      exact_mirror = exact_mirror && once.points(tree.mirror[j], 0) == 1.0 - p.points(j, 0) &&
                     once.points(tree.mirror[j], 1) == p.points(j, 1);
    }
  }
  return {roundtrip < 1e-12 && involution < 1e-12 && exact_mirror,
          fmt("roundtrip=%.3e involution=%.3e mirror_exact=%.0f", roundtrip, involution, exact_mirror)};
}

Outcome ik_round_trip() {
  const auto tree = default_h36m_tree();
  FitConfig cfg;
  cfg.max_iters = 2000;
  int good = 0;
  double worst = 0.0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    const auto seed = static_cast<std::uint64_t>(t);
    const auto truth = synth_pose(seed, tree);
    const auto target = project(forward_kinematics(truth.params, tree), truth.camera);
    const FitInit init{perturb_directions(truth.params, 0.2, seed + 1000), truth.camera};
    const auto r = fit_pose_to_landmarks(target, tree, init, cfg);
    worst = std::max(worst, r.reprojection_error);
    if (r.reprojection_error < 2.0 && r.iterations <= 2000) ++good;
  }
  return {good * 10 >= trials * 9, fmt("%.0f/%.0f under 2px (worst %.3f px)", good, trials, worst)};
}

Outcome background() {
  Frame truth;
  // 8-pixel square on a 40-pixel-wide frame covers each pixel in 20% of frames
  const auto clip = fixtures::moving_square_clip(200, 40, 24, 8, 17, &truth);
  int mismatched = 0;
  for (int center : {0, 100, 199}) mismatched += median_background(clip, center, 200) == truth ? 0 : 1;
  return {mismatched == 0, fmt("mismatched_centres=%.0f of 3", mismatched)};
}

Outcome classification() {
  auto still = fixtures::static_camera_clip(150, 32, 24, 5);
  auto pan = fixtures::panning_clip(150, 32, 24, 5);
  const double a = clip_motion_score(still), b = clip_motion_score(pan);
  if (!(a < b)) return {false, fmt("static=%.4f pan=%.4f not ordered", a, b)};
  ManifestOptions o;
  o.threshold = 0.5 * (a + b);
  o.target_stride = 10;
  const auto build = build_manifest({still, pan}, o);
  bool placed = build.clips.size() == 2 && build.clips[0].clip_class == ClipClass::paired &&
                build.clips[1].clip_class == ClipClass::unpaired && !build.manifest.paired.empty() &&
                !build.manifest.unpaired.empty();
  for (const auto& e : build.manifest.paired) placed = placed && e.target.rfind(still.source_id + "#", 0) == 0;
  for (const auto& e : build.manifest.unpaired) placed = placed && e.target.rfind(pan.source_id + "#", 0) == 0;
  return {placed, fmt("static=%.4f pan=%.4f threshold=%.4f", a, b, o.threshold)};
}

double mean_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double s = 0.0;
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) s += std::abs(a(r, c) - b(r, c));
  return s / static_cast<double>(a.size());
}

Outcome loss_algebra() {
  const auto tree = default_h36m_tree();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto landmarks = [&] {
    Landmarks2D l;
    l.points.resize(17, 2);
    for (int j = 0; j < 17; ++j) l.points.row(j) << u(rng), u(rng);
    return l;
  };
  auto feature = [&] {
    FeatureVector f;
    f.values.resize(12);
    for (auto& v : f.values) v = 2.0 * u(rng) - 1.0;
    return f;
  };
  double oracle = 0.0, linear = 0.0, zero = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = landmarks(), q = landmarks();
    const auto f = feature(), g = feature();
    const auto p3 = forward_kinematics(synth_pose(seed, tree).params, tree);
    const auto q3 = forward_kinematics(synth_pose(seed + 50, tree).params, tree);
    const double img = u(rng), l1 = 3 * u(rng), l2 = 3 * u(rng);
    const double dp = mean_abs_diff(p.points, q.points), df = mean_abs_diff(f.values, g.values);
    const double d3 = mean_abs_diff(p3.joints, q3.joints);
    oracle = std::max({oracle, std::abs(loss_paired(img, p, q, f, g, l1, l2) - (img + l1 * dp + l2 * df)),
                       std::abs(loss_unpaired(p, q, f, g, l2) - (dp + l2 * df)),
                       std::abs(loss_prior(p3, q3, p, q, l1, l2) - (l1 * d3 + l2 * dp))});
    const double a = loss_paired(0.0, p, q, f, g, 1.0, 0.0), b = loss_paired(0.0, p, q, f, g, 0.0, 1.0);
    const double c = loss_prior(p3, q3, p, q, 1.0, 0.0), d = loss_prior(p3, q3, p, q, 0.0, 1.0);
    const double e = loss_unpaired(p, q, f, g, 0.0);
    linear = std::max({linear, std::abs(loss_paired(0.0, p, q, f, g, l1, l2) - (l1 * a + l2 * b)),
                       std::abs(loss_prior(p3, q3, p, q, l1, l2) - (l1 * c + l2 * d)),
                       std::abs(loss_unpaired(p, q, f, g, l2) - (e + l2 * df))});
    zero = std::max({zero, std::abs(loss_paired(0.0, p, p, f, f, l1, l2)), std::abs(loss_unpaired(p, p, f, f, l2)),
                     std::abs(loss_prior(p3, p3, p, p, l1, l2))});
  }
  return {oracle < 1e-12 && linear < 1e-12 && zero == 0.0,
          fmt("oracle=%.3e linearity=%.3e zero_residual=%.3e", oracle, linear, zero)};
}

}  // namespace

int main() {
  report("bone_length_conservation", 5.0, bone_lengths);
  report("gradient_correctness", 60.0, gradients);
  report("map_formula_oracle", 10.0, map_oracle);
  report("rotation_validity", 0.0, rotations);
  report("flip_machinery", 0.0, flip_machinery);
  report("ik_round_trip", 300.0, ik_round_trip);
  report("background_extraction", 10.0, background);
  report("clip_classification", 0.0, classification);
  report("loss_algebra", 0.0, loss_algebra);
  std::printf("%s: %d failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
