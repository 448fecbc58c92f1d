#include <doctest.h>

#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "ksp/camera.hpp"
#include "ksp/forward_kinematics.hpp"
#include "ksp/losses.hpp"
#include "ksp/synth.hpp"

using namespace ksp;

namespace {

Landmarks2D random_landmarks(std::mt19937_64& rng, int joints = 17) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Landmarks2D lm;
  lm.points.resize(joints, 2);
  for (int j = 0; j < joints; ++j) lm.points.row(j) << u(rng), u(rng);
  return lm;
}

FeatureVector random_feature(std::mt19937_64& rng, int n = 8) {
  std::normal_distribution<double> g;
  FeatureVector f;
  f.values.resize(n);
  for (auto& v : f.values) v = g(rng);
  return f;
}

double summed_abs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double s = 0.0;
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) s += std::abs(a(r, c) - b(r, c));
  return s / static_cast<double>(a.size());
}

Landmarks2D pose_landmarks(std::uint64_t seed) {
  const auto tree = default_h36m_tree();
  const auto sp = synth_pose(seed, tree);
  return project(forward_kinematics(sp.params, tree), sp.camera);
}

}  // namespace

TEST_CASE("losses match direct summation") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_landmarks(rng), q = random_landmarks(rng);
    const auto f = random_feature(rng), g = random_feature(rng);
    const double img = 0.37 * trial;
    const double paired = loss_paired(img, p, q, f, g, 0.7, 1.3);
    CHECK(std::abs(paired - (img + 0.7 * summed_abs(p.points, q.points) + 1.3 * summed_abs(f.values, g.values))) <
          1e-12);
    const double unpaired = loss_unpaired(p, q, f, g, 2.5);
    CHECK(std::abs(unpaired - (summed_abs(p.points, q.points) + 2.5 * summed_abs(f.values, g.values))) < 1e-12);
  }
}

TEST_CASE("losses vanish at zero residuals and are linear in their weights") {
  std::mt19937_64 rng(22);
  const auto p = random_landmarks(rng), q = random_landmarks(rng);
  const auto f = random_feature(rng), g = random_feature(rng);
  CHECK(loss_paired(0.0, p, p, f, f, 3.0, 4.0) == 0.0);
  CHECK(loss_unpaired(p, p, f, f, 4.0) == 0.0);
  const double a = loss_paired(0.0, p, q, f, g, 1.0, 0.0), b = loss_paired(0.0, p, q, f, g, 0.0, 1.0);
  CHECK(loss_paired(0.0, p, q, f, g, 2.0, 3.0) == doctest::Approx(2 * a + 3 * b).epsilon(1e-14));
  CHECK_THROWS_AS(loss_paired(0.0, p, q, f, g, -1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(loss_unpaired(p, random_landmarks(rng, 16), f, g, 1.0), ValidationError);
}

TEST_CASE("mean absolute image difference") {
  Image a(4, 3, 2), b(4, 3, 2);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    a.data[i] = 0.1 * static_cast<double>(i);
    b.data[i] = a.data[i] + (i % 2 ? 0.5 : -0.25);
  }
  CHECK(mean_abs_image_diff(a, b) == doctest::Approx(0.375).epsilon(1e-14));
  CHECK_THROWS_AS(mean_abs_image_diff(a, Image(3, 4, 2)), ValidationError);
}

TEST_CASE("flip is an involution that swaps mirrored channels") {
  const auto tree = default_h36m_tree();
  const auto t = SpatialTransform::flip();
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_landmarks(rng);
    const auto once = apply_transform(p, t, tree.mirror);
    for (int j = 0; j < 17; ++j) {
      CHECK(once.points(tree.mirror[j], 0) == 1.0 - p.points(j, 0));
      CHECK(once.points(tree.mirror[j], 1) == p.points(j, 1));
    }
    CHECK((apply_transform(once, t, tree.mirror).points - p.points).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((invert_transform(once, t, tree.mirror).points - p.points).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("rotation inverts and turns about the image centre") {
  const auto tree = default_h36m_tree();
  std::mt19937_64 rng(24);
  const auto p = random_landmarks(rng);
  for (double angle : {0.3, -1.2, std::numbers::pi / 2}) {
    const auto t = SpatialTransform::rotation(angle);
    const auto moved = apply_transform(p, t, tree.mirror);
    CHECK((invert_transform(moved, t, tree.mirror).points - p.points).cwiseAbs().maxCoeff() < 1e-12);
    for (int j = 0; j < 17; ++j) {
      const Vec2 a = p.points.row(j).transpose() - Vec2(0.5, 0.5);
      const Vec2 b = moved.points.row(j).transpose() - Vec2(0.5, 0.5);
      CHECK(a.norm() == doctest::Approx(b.norm()).epsilon(1e-12));
    }
  }
  Landmarks2D centre;
  centre.points = Eigen::MatrixX2d::Constant(1, 2, 0.5);
  const std::vector<int> id{0};
  CHECK(apply_transform(centre, SpatialTransform::rotation(1.0), id).points == centre.points);
}

TEST_CASE("image flip and quarter-turn are pixel permutations consistent with the landmark transforms") {
  const auto tree = default_h36m_tree();
  MapParams mp;
  mp.sigma = 1.5;
  const auto lm = pose_landmarks(31);
  const auto img = fixtures::image_from_maps(render_heatmaps(lm, mp));

  const auto flipped = transform_image(img, SpatialTransform::flip());
  const auto flipped_lm = apply_transform(lm, SpatialTransform::flip(), tree.mirror);
  // channel j of the flipped image is the mirrored landmark's heat map, channel order untouched
  for (int j = 0; j < 17; ++j) {
    Landmarks2D one;
    one.points = flipped_lm.points.row(tree.mirror[j]);
    const auto ref = render_heatmaps(one, mp);
    double worst = 0.0;
    for (int y = 0; y < 56; ++y)
      for (int x = 0; x < 56; ++x) worst = std::max(worst, std::abs(flipped.at(j, y, x) - ref.at(0, y, x)));
    CHECK(worst < 1e-12);
  }

  const auto t = SpatialTransform::rotation(std::numbers::pi / 2);
  const auto turned = transform_image(img, t);
  const auto turned_maps = render_heatmaps(apply_transform(lm, t, tree.mirror), mp);
  double worst = 0.0;
  for (std::size_t i = 0; i < turned.data.size(); ++i) worst = std::max(worst, std::abs(turned.data[i] - turned_maps.data[i]));
  CHECK(worst < 1e-9);
  auto sorted_a = img.data, sorted_b = turned.data;
  std::sort(sorted_a.begin(), sorted_a.end());
  std::sort(sorted_b.begin(), sorted_b.end());
  CHECK(sorted_a == sorted_b);
}

TEST_CASE("equivariant model has zero consistency residual") {
  const auto tree = default_h36m_tree();
  MapParams mp;
  mp.sigma = 1.5;
  const fixtures::BlobModel model(tree, mp.lattice);
  for (std::uint64_t seed = 40; seed < 45; ++seed) {
    Landmarks2D lm = pose_landmarks(seed);
    for (int j = 0; j < 17; ++j) lm.points.row(j) = 0.25 * Eigen::RowVector2d(1, 1) + 0.5 * lm.points.row(j);
    const auto img = fixtures::image_from_maps(render_heatmaps(lm, mp));
    for (const auto& t : {SpatialTransform::flip(), SpatialTransform::rotation(std::numbers::pi / 2)}) {
      const auto r = unpaired_consistency_residual(img, t, model, tree.mirror);
      CHECK(r.pose.cwiseAbs().maxCoeff() < 1e-12);
      CHECK(r.feature.cwiseAbs().maxCoeff() < 1e-9 * img.data.size());
    }
  }
}

TEST_CASE("a biased encoder shows up in the residual with the predicted value") {
  const auto tree = default_h36m_tree();
  MapParams mp;
  mp.sigma = 1.5;
  const double eps = 1e-3;
  const fixtures::BlobModel model(tree, mp.lattice, Vec2(eps, 0.0));
  Landmarks2D lm = pose_landmarks(50);
  for (int j = 0; j < 17; ++j) lm.points.row(j) = 0.25 * Eigen::RowVector2d(1, 1) + 0.5 * lm.points.row(j);
  const auto img = fixtures::image_from_maps(render_heatmaps(lm, mp));

  // rotation by phi: eps * (e_x - R(-phi) e_x) = eps * (1, 1) at a quarter turn
  const auto rot = unpaired_consistency_residual(img, SpatialTransform::rotation(std::numbers::pi / 2), model,
                                                 tree.mirror);
  for (int j = 0; j < 17; ++j) {
    CHECK(rot.pose(j, 0) == doctest::Approx(eps).epsilon(1e-6));
    CHECK(rot.pose(j, 1) == doctest::Approx(eps).epsilon(1e-6));
  }
  // flip: x + eps versus 1 - (1 - x + eps) gives 2 eps
  const auto fl = unpaired_consistency_residual(img, SpatialTransform::flip(), model, tree.mirror);
  for (int j = 0; j < 17; ++j) {
    CHECK(fl.pose(j, 0) == doctest::Approx(2 * eps).epsilon(1e-6));
    CHECK(std::abs(fl.pose(j, 1)) < 1e-12);
  }
}

TEST_CASE("unpaired energy is zero for a consistent model and input") {
  const auto tree = default_h36m_tree();
  MapParams mp;
  mp.sigma = 1.5;
  const fixtures::BlobModel model(tree, mp.lattice);
  Landmarks2D lm = pose_landmarks(60);
  for (int j = 0; j < 17; ++j) lm.points.row(j) = 0.25 * Eigen::RowVector2d(1, 1) + 0.5 * lm.points.row(j);
  const auto maps = render_maps(lm, tree, mp);
  const Image no_background;
  FeatureVector appearance;
  appearance.values = Eigen::VectorXd::Constant(1, 1.0);
  const auto synth = model.reconstruct(maps, appearance, no_background);
  const auto p = model.encode_pose(synth);
  const auto f = model.encode_appearance(synth);
  for (const auto& t : {SpatialTransform::flip(), SpatialTransform::rotation(std::numbers::pi / 2)}) {
    const auto e = unpaired_energy_loss(maps, p, f, no_background, t, model, tree.mirror, 1.0);
    CHECK(e.loss < 1e-9);
    // perturbing the pose input raises the energy by exactly its mean absolute shift
    Landmarks2D shifted = p;
    shifted.points.array() += 0.01;
    const auto e2 = unpaired_energy_loss(maps, shifted, f, no_background, t, model, tree.mirror, 1.0);
    CHECK(e2.loss == doctest::Approx(0.01).epsilon(1e-6));
  }
}

TEST_CASE("prior loss sums its two weighted terms") {
  std::mt19937_64 rng(70);
  const auto tree = default_h36m_tree();
  const auto p3 = forward_kinematics(synth_pose(1, tree).params, tree);
  const auto q3 = forward_kinematics(synth_pose(2, tree).params, tree);
  const auto p2 = random_landmarks(rng), q2 = random_landmarks(rng);
  const double l = loss_prior(p3, q3, p2, q2, 0.3, 0.9);
  CHECK(std::abs(l - (0.3 * summed_abs(p3.joints, q3.joints) + 0.9 * summed_abs(p2.points, q2.points))) < 1e-12);
  CHECK(loss_prior(p3, p3, p2, p2, 5.0, 5.0) == 0.0);
}
