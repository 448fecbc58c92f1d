#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace ksp {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr int kNoParent = -1;

/// Raised for malformed inputs (bad sizes, degenerate vectors, broken invariants).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Limb {
  int a = 0;
  int b = 0;
  bool operator==(const Limb&) const = default;
};

/// Joints placed by the canonical root rule rather than by a direction vector.
struct RootRule {
  int pelvis = 0;
  int left_hip = 0;
  int right_hip = 0;
  int neck = 0;
};

/// Kinematic tree in canonical units (pelvis->neck length is 1).
///
/// Kept as a plain aggregate so that broken trees can be represented and
/// reported by validate_tree(); everything downstream assumes a tree that
/// passed validation.
struct KinematicTree {
  std::string version;
  std::vector<std::string> joint_names;
  std::vector<int> parent;
  std::vector<double> bone_length;  // entry for the pelvis is unused
  std::vector<Vec3> rest_offset;    // unit vectors, entry for the pelvis is unused
  std::vector<int> mirror;
  std::vector<Limb> limbs;
  RootRule root;

  int joint_count() const { return static_cast<int>(joint_names.size()); }
  int limb_count() const { return static_cast<int>(limbs.size()); }

  /// Index of a joint by name, throws ValidationError when absent.
  int index_of(std::string_view name) const;
};

enum class TreeViolation {
  size_mismatch,
  bad_parent,
  cycle,
  bad_mirror,
  nonpositive_length,
  bad_rest_offset,
  bad_limb,
  bad_root_rule,
};

struct TreeIssue {
  TreeViolation kind;
  int joint = -1;
  std::string message;
};

struct TreeReport {
  std::vector<TreeIssue> issues;
  bool ok() const { return issues.empty(); }
  bool has(TreeViolation kind) const;
};

/// 17-joint Human3.6M layout shipped with the library. Joint indices follow the
/// usual H36M order, which is also a depth-first preorder from the pelvis.
KinematicTree default_h36m_tree();

TreeReport validate_tree(const KinematicTree& tree);

/// Throws ValidationError listing every issue if the tree is invalid.
void require_valid(const KinematicTree& tree);

/// Depth-first preorder from the pelvis, children visited in index order.
/// Throws ValidationError if the parent array is not a tree.
std::vector<int> topological_order(const KinematicTree& tree);

/// Joints driven by a bone direction, in the order they appear in the packed
/// parameter vector (depth-first preorder, root-rule joints excluded).
std::vector<int> direction_joints(const KinematicTree& tree);

bool is_root_rule_joint(const KinematicTree& tree, int joint);

struct LocalKinematicParams {
  double trunk_hipline_angle = 0.0;
  std::vector<Vec3> bone_dirs;  // one per direction joint, canonical frame

  bool operator==(const LocalKinematicParams&) const = default;
};

/// Length of the packed parameter vector (40 for the default tree).
inline int packed_param_size(int direction_count) { return 1 + 3 * direction_count; }

std::vector<double> pack_params(const LocalKinematicParams& params);

struct UnpackResult {
  LocalKinematicParams params;
  bool renormalized = false;  // some block's norm was off by more than 1e-6
};

/// Renormalizes every 3-vector block. Blocks already at unit norm (to a few
/// ulps) are passed through untouched so pack/unpack round-trips exactly.
UnpackResult unpack_params(std::span<const double> packed);

/// Rest pose directions with a zero trunk angle.
LocalKinematicParams rest_params(const KinematicTree& tree);

struct CameraParams {
  std::array<Vec2, 3> angles_sincos{Vec2(0, 1), Vec2(0, 1), Vec2(0, 1)};  // (sin, cos) for x, y, z
  Vec3 translation{0.0, 0.0, 5.0};

  static constexpr int kPackedSize = 9;
  static CameraParams from_angles(double ax, double ay, double az, const Vec3& translation = Vec3(0, 0, 5));
  bool operator==(const CameraParams&) const = default;
};

std::array<double, CameraParams::kPackedSize> pack_camera(const CameraParams& camera);
CameraParams unpack_camera(std::span<const double> packed);

struct Pose3D {
  Eigen::MatrixX3d joints;
  int joint_count() const { return static_cast<int>(joints.rows()); }
};

struct Landmarks2D {
  Eigen::MatrixX2d points;  // normalized image coordinates
  int joint_count() const { return static_cast<int>(points.rows()); }
  bool all_in_frame() const;
};

}  // namespace ksp
