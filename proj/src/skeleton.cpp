#include "ksp/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ksp {

namespace {

// Segment lengths are Human3.6M mean bone lengths divided by the
// pelvis->neck distance (233.4 + 257.1 mm).
constexpr double kHip = 0.2709;
constexpr double kThigh = 0.9030;
constexpr double kShin = 0.9260;
constexpr double kSpine = 0.4758;
constexpr double kTrunk = 1.0;
constexpr double kNose = 0.2469;
constexpr double kHead = 0.2345;
constexpr double kShoulder = 0.3078;
constexpr double kUpperArm = 0.5686;
constexpr double kForearm = 0.5131;

// Blocks closer than this to unit norm are left untouched by unpack.
constexpr double kUnitSlack = 1e-14;

}  // namespace

int KinematicTree::index_of(std::string_view name) const {
  auto it = std::find(joint_names.begin(), joint_names.end(), name);
  if (it == joint_names.end()) {
    throw ValidationError("unknown joint name '" + std::string(name) + "'");
  }
  return static_cast<int>(it - joint_names.begin());
}

bool TreeReport::has(TreeViolation kind) const {
  return std::any_of(issues.begin(), issues.end(), [kind](const TreeIssue& i) { return i.kind == kind; });
}

KinematicTree default_h36m_tree() {
  KinematicTree tree;
  tree.version = "h36m17-v1";
  tree.joint_names = {"pelvis",     "right_hip",     "right_knee",  "right_ankle", "left_hip",      "left_knee",
                      "left_ankle", "spine",         "neck",        "nose",        "head_top",      "left_shoulder",
                      "left_elbow", "left_wrist",    "right_shoulder", "right_elbow", "right_wrist"};
  tree.parent = {kNoParent, 0, 1, 2, 0, 4, 5, 0, 0, 8, 9, 8, 11, 12, 8, 14, 15};
  tree.bone_length = {0.0,   kHip,  kThigh, kShin,     kHip,      kThigh,   kShin,     kSpine,   kTrunk,
                      kNose, kHead, kShoulder, kUpperArm, kForearm, kShoulder, kUpperArm, kForearm};

  // T-pose in the canonical frame: +x subject's left, +y forward, +z up. The
  // hips drop slightly below the pelvis so the trunk/hip-line angle acts.
  const Vec3 down(0, 0, -1), up(0, 0, 1), left(1, 0, 0), right(-1, 0, 0);
  tree.rest_offset = {Vec3::Zero(), Vec3(-1, 0, -0.25).normalized(), down, down, Vec3(1, 0, -0.25).normalized(),
                      down,         down,  up,   up,   Vec3(0, 0.4, 1).normalized(), up,
                      left,         left,  left, right, right, right};

  tree.mirror = {0, 4, 5, 6, 1, 2, 3, 7, 8, 9, 10, 14, 15, 16, 11, 12, 13};
  tree.limbs = {{0, 1},  {1, 2},  {2, 3},   {0, 4},   {4, 5},  {5, 6},   {0, 7},   {7, 8},
                {8, 9},  {9, 10}, {8, 11},  {11, 12}, {12, 13}, {8, 14}, {14, 15}, {15, 16}};
  tree.root = RootRule{0, 4, 1, 8};
  return tree;
}

TreeReport validate_tree(const KinematicTree& tree) {
  TreeReport report;
  auto add = [&report](TreeViolation kind, int joint, std::string msg) {
    report.issues.push_back({kind, joint, std::move(msg)});
  };

  const auto n = tree.joint_names.size();
  if (n == 0 || tree.parent.size() != n || tree.bone_length.size() != n || tree.rest_offset.size() != n ||
      tree.mirror.size() != n) {
    add(TreeViolation::size_mismatch, -1, "per-joint arrays have inconsistent sizes");
    return report;
  }
  const int count = static_cast<int>(n);

  int roots = 0;
  for (int j = 0; j < count; ++j) {
    const int p = tree.parent[j];
    if (p == kNoParent) {
      ++roots;
    } else if (p < 0 || p >= count) {
      add(TreeViolation::bad_parent, j, "parent index out of range for " + tree.joint_names[j]);
    }
  }
  if (roots != 1) add(TreeViolation::bad_parent, -1, "expected exactly one root joint");

  // Walk up from every joint; revisiting a joint before reaching the root means a cycle.
  for (int j = 0; j < count; ++j) {
    std::vector<char> seen(n, 0);
    int cur = j;
    while (cur != kNoParent && cur >= 0 && cur < count) {
      if (seen[cur]) {
        add(TreeViolation::cycle, j, "parent chain of " + tree.joint_names[j] + " loops");
        break;
      }
      seen[cur] = 1;
      cur = tree.parent[cur];
    }
  }

  for (int j = 0; j < count; ++j) {
    const int m = tree.mirror[j];
    if (m < 0 || m >= count || tree.mirror[m] != j) {
      add(TreeViolation::bad_mirror, j, "mirror map is not an involution at " + tree.joint_names[j]);
    }
  }

  for (int j = 0; j < count; ++j) {
    if (tree.parent[j] == kNoParent) continue;
    if (!(tree.bone_length[j] > 0.0) || !std::isfinite(tree.bone_length[j])) {
      add(TreeViolation::nonpositive_length, j, "bone length of " + tree.joint_names[j] + " must be positive");
    }
    if (!tree.rest_offset[j].allFinite() || std::abs(tree.rest_offset[j].norm() - 1.0) > 1e-9) {
      add(TreeViolation::bad_rest_offset, j, "rest offset of " + tree.joint_names[j] + " is not a unit vector");
    }
  }

  for (const auto& limb : tree.limbs) {
    if (limb.a < 0 || limb.a >= count || limb.b < 0 || limb.b >= count || limb.a == limb.b) {
      add(TreeViolation::bad_limb, -1, "limb references an invalid joint pair");
    }
  }
  if (count == 17 && tree.limbs.size() != 16) {
    add(TreeViolation::bad_limb, -1, "a 17-joint tree needs 16 limbs");
  }

  const auto& r = tree.root;
  auto in_range = [count](int j) { return j >= 0 && j < count; };
  if (!in_range(r.pelvis) || !in_range(r.left_hip) || !in_range(r.right_hip) || !in_range(r.neck) ||
      tree.parent[r.pelvis] != kNoParent) {
    add(TreeViolation::bad_root_rule, -1, "root rule must name the pelvis root and three joints");
  } else {
    for (int j : {r.left_hip, r.right_hip, r.neck}) {
      if (tree.parent[j] != r.pelvis) {
        add(TreeViolation::bad_root_rule, j, tree.joint_names[j] + " must be a child of the pelvis");
      }
    }
  }
  return report;
}

void require_valid(const KinematicTree& tree) {
  const auto report = validate_tree(tree);
  if (report.ok()) return;
  std::ostringstream os;
  os << "invalid kinematic tree:";
  for (const auto& issue : report.issues) os << "\n  " << issue.message;
  throw ValidationError(os.str());
}

std::vector<int> topological_order(const KinematicTree& tree) {
  const int n = tree.joint_count();
  std::vector<std::vector<int>> children(n);
  int root = -1;
  for (int j = 0; j < n; ++j) {
    const int p = tree.parent[j];
    if (p == kNoParent) {
      root = j;
    } else if (p >= 0 && p < n) {
      children[p].push_back(j);
    }
  }
  if (root < 0) throw ValidationError("kinematic tree has no root");

  std::vector<int> order;
  order.reserve(n);
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int j = stack.back();
    stack.pop_back();
    order.push_back(j);
    for (auto it = children[j].rbegin(); it != children[j].rend(); ++it) stack.push_back(*it);
    if (static_cast<int>(order.size()) > n) break;
  }
  if (static_cast<int>(order.size()) != n) throw ValidationError("kinematic tree is not connected or has a cycle");
  return order;
}

bool is_root_rule_joint(const KinematicTree& tree, int joint) {
  const auto& r = tree.root;
  return joint == r.pelvis || joint == r.left_hip || joint == r.right_hip || joint == r.neck;
}

std::vector<int> direction_joints(const KinematicTree& tree) {
  std::vector<int> out;
  for (int j : topological_order(tree)) {
    if (!is_root_rule_joint(tree, j)) out.push_back(j);
  }
  return out;
}

std::vector<double> pack_params(const LocalKinematicParams& params) {
  std::vector<double> out;
  out.reserve(1 + 3 * params.bone_dirs.size());
  out.push_back(params.trunk_hipline_angle);
  for (const auto& d : params.bone_dirs) {
    out.insert(out.end(), {d.x(), d.y(), d.z()});
  }
  return out;
}

UnpackResult unpack_params(std::span<const double> packed) {
  if (packed.empty() || (packed.size() - 1) % 3 != 0) {
    throw ValidationError("packed parameter vector must have length 1 + 3k, got " + std::to_string(packed.size()));
  }
  UnpackResult result;
  result.params.trunk_hipline_angle = packed[0];
  const std::size_t blocks = (packed.size() - 1) / 3;
  result.params.bone_dirs.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    Vec3 d(packed[1 + 3 * b], packed[2 + 3 * b], packed[3 + 3 * b]);
    if (!d.allFinite()) throw ValidationError("non-finite direction block " + std::to_string(b));
    const double norm = d.norm();
    if (norm < 1e-12) throw ValidationError("zero-norm direction block " + std::to_string(b));
    if (std::abs(norm - 1.0) > kUnitSlack) d /= norm;
    if (std::abs(norm - 1.0) > 1e-6) result.renormalized = true;
    result.params.bone_dirs.push_back(d);
  }
  if (!std::isfinite(result.params.trunk_hipline_angle)) throw ValidationError("non-finite trunk angle");
  return result;
}

LocalKinematicParams rest_params(const KinematicTree& tree) {
  LocalKinematicParams params;
  for (int j : direction_joints(tree)) params.bone_dirs.push_back(tree.rest_offset[j]);
  return params;
}

CameraParams CameraParams::from_angles(double ax, double ay, double az, const Vec3& translation) {
  CameraParams c;
  c.angles_sincos = {Vec2(std::sin(ax), std::cos(ax)), Vec2(std::sin(ay), std::cos(ay)),
                     Vec2(std::sin(az), std::cos(az))};
  c.translation = translation;
  return c;
}

std::array<double, CameraParams::kPackedSize> pack_camera(const CameraParams& camera) {
  std::array<double, CameraParams::kPackedSize> out{};
  for (int a = 0; a < 3; ++a) {
    out[2 * a] = camera.angles_sincos[a].x();
    out[2 * a + 1] = camera.angles_sincos[a].y();
  }
  for (int k = 0; k < 3; ++k) out[6 + k] = camera.translation[k];
  return out;
}

CameraParams unpack_camera(std::span<const double> packed) {
  if (packed.size() != CameraParams::kPackedSize) {
    throw ValidationError("packed camera vector must have length 9");
  }
  CameraParams c;
  for (int a = 0; a < 3; ++a) c.angles_sincos[a] = Vec2(packed[2 * a], packed[2 * a + 1]);
  c.translation = Vec3(packed[6], packed[7], packed[8]);
  return c;
}

bool Landmarks2D::all_in_frame() const {
  return (points.array() >= 0.0).all() && (points.array() <= 1.0).all();
}

}  // namespace ksp
