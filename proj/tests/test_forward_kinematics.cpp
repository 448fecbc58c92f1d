#include <doctest.h>

#include <cmath>

#include "ksp/forward_kinematics.hpp"
#include "ksp/synth.hpp"

using namespace ksp;

namespace {

// Independent recursion: joints are visited in index order (a preorder for
// H36M) and the hip rotation is written out by hand.
Eigen::MatrixX3d reference_fk(const LocalKinematicParams& params, const KinematicTree& tree) {
  const double c = std::cos(params.trunk_hipline_angle), s = std::sin(params.trunk_hipline_angle);
  Eigen::MatrixX3d p = Eigen::MatrixX3d::Zero(tree.joint_count(), 3);
  std::size_t k = 0;
  for (int j = 1; j < tree.joint_count(); ++j) {
    Vec3 offset;
    if (j == tree.root.neck) {
      offset = Vec3(0, 0, tree.bone_length[j]);
    } else if (j == tree.root.left_hip || j == tree.root.right_hip) {
      const Vec3 r = tree.bone_length[j] * tree.rest_offset[j];
      offset = Vec3(r.x(), c * r.y() - s * r.z(), s * r.y() + c * r.z());
    } else {
      offset = tree.bone_length[j] * params.bone_dirs[k++];
    }
    p.row(j) = p.row(tree.parent[j]) + offset.transpose();
  }
  return p;
}

}  // namespace

TEST_CASE("fk matches the reference recursion") {
  const auto tree = default_h36m_tree();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto sp = synth_pose(seed, tree);
    const auto pose = forward_kinematics(sp.params, tree);
    CHECK((pose.joints - reference_fk(sp.params, tree)).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("bone lengths are conserved and the root rule holds exactly") {
  const auto tree = default_h36m_tree();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto pose = forward_kinematics(synth_pose(seed, tree).params, tree);
    for (int j = 1; j < 17; ++j) {
      const double len = (pose.joints.row(j) - pose.joints.row(tree.parent[j])).norm();
      CHECK(std::abs(len - tree.bone_length[j]) < 1e-9);
    }
    CHECK(pose.joints.row(0).isZero(0.0));
    CHECK(pose.joints(8, 0) == 0.0);
    CHECK(pose.joints(8, 1) == 0.0);
    CHECK(pose.joints(8, 2) == 1.0);
  }
}

TEST_CASE("hips stay in the plane x = const and rotate about x") {
  const auto tree = default_h36m_tree();
  const auto a = root_joints(0.0, tree), b = root_joints(0.7, tree);
  CHECK(a.left_hip.x() == doctest::Approx(b.left_hip.x()).epsilon(1e-15));
  CHECK(a.left_hip.x() > 0.0);
  CHECK(a.right_hip.x() < 0.0);
  CHECK(std::atan2(b.left_hip.z(), b.left_hip.y()) - std::atan2(a.left_hip.z(), a.left_hip.y()) ==
        doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("rest pose is a T-pose with arms along x") {
  const auto tree = default_h36m_tree();
  const auto pose = forward_kinematics(rest_params(tree), tree);
  const int lw = tree.index_of("left_wrist"), rw = tree.index_of("right_wrist");
  CHECK(pose.joints(lw, 0) > 1.0);
  CHECK(pose.joints(rw, 0) < -1.0);
  CHECK(pose.joints(lw, 2) == doctest::Approx(1.0));
  CHECK(pose.joints(tree.index_of("right_ankle"), 2) < -1.5);
  CHECK(pose.joints(tree.index_of("head_top"), 2) > 1.3);
}

TEST_CASE("fk jacobian matches central differences") {
  const auto tree = default_h36m_tree();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto v = pack_params(synth_pose(seed, tree).params);
    const Eigen::MatrixXd jac = fk_jacobian(std::span<const double>(v), tree);
    REQUIRE(jac.rows() == 51);
    REQUIRE(jac.cols() == 40);
    const double h = 1e-6;
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto up = v, down = v;
      up[i] += h;
      down[i] -= h;
      const Eigen::VectorXd fd = (flatten(forward_kinematics(std::span<const double>(up), tree)) -
                                  flatten(forward_kinematics(std::span<const double>(down), tree))) /
                                 (2 * h);
      CHECK((fd - jac.col(static_cast<Eigen::Index>(i))).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("packed fk is linear in the direction blocks") {
  const auto tree = default_h36m_tree();
  auto v = pack_params(synth_pose(5, tree).params);
  const auto base = flatten(forward_kinematics(std::span<const double>(v), tree));
  for (std::size_t i = 1; i < v.size(); ++i) v[i] *= 2.0;
  const auto doubled = flatten(forward_kinematics(std::span<const double>(v), tree));
  // only the four root-rule joints stay put
  const auto roots = root_joints(v[0], tree);
  Eigen::VectorXd root_part = Eigen::VectorXd::Zero(51);
  for (int j = 0; j < 17; ++j) {
    Vec3 anchor = Vec3::Zero();
    int a = j;
    while (a != kNoParent && !is_root_rule_joint(tree, a)) a = tree.parent[a];
    if (a == tree.root.left_hip) anchor = roots.left_hip;
    if (a == tree.root.right_hip) anchor = roots.right_hip;
    if (a == tree.root.neck) anchor = roots.neck;
    root_part.segment<3>(3 * j) = anchor;
  }
  CHECK((doubled - root_part - 2.0 * (base - root_part)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("fk validates its inputs") {
  const auto tree = default_h36m_tree();
  auto params = rest_params(tree);
  params.bone_dirs.pop_back();
  CHECK_THROWS_AS(forward_kinematics(params, tree), ValidationError);
  std::vector<double> short_v(10, 0.0);
  CHECK_THROWS_AS(forward_kinematics(std::span<const double>(short_v), tree), ValidationError);
}
