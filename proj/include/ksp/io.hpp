#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ksp/camera.hpp"
#include "ksp/ik_solver.hpp"
#include "ksp/skeleton.hpp"
#include "ksp/spatial_maps.hpp"
#include "ksp/video.hpp"

namespace ksp::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

/// Unreadable/unwritable files and malformed file contents.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json read_json(const fs::path& path);
void write_json(const fs::path& path, const json& value);

// Tree config: {version, joints:[{name, parent, length, rest_offset}], mirror_pairs, limbs, root_rule}
json tree_to_json(const KinematicTree& tree);
KinematicTree tree_from_json(const json& j);
KinematicTree load_tree(const fs::path& path);

json params_to_json(const LocalKinematicParams& params, const KinematicTree& tree);
/// Accepts the keyed form or {"packed": [...]}; directions are renormalized.
UnpackResult params_from_json(const json& j, const KinematicTree& tree);

json camera_to_json(const CameraParams& camera);
CameraParams camera_from_json(const json& j);

json intrinsics_to_json(const PerspectiveCamera& intrinsics);
PerspectiveCamera intrinsics_from_json(const json& j);

json pose_to_json(const Pose3D& pose, const KinematicTree& tree);
Pose3D pose_from_json(const json& j, const KinematicTree& tree);

json landmarks_to_json(const Landmarks2D& landmarks, const KinematicTree& tree);
Landmarks2D landmarks_from_json(const json& j, const KinematicTree& tree);

json fit_result_to_json(const FitResult& result, const KinematicTree& tree);

json manifest_to_json(const ManifestBuild& build);

/// Binary PPM (P6, maxval 255).
Frame read_ppm(const fs::path& path);
void write_ppm(const fs::path& path, const Frame& frame);

/// 16-bit binary PGM (P5, maxval 65535, big-endian samples), value = round(65535 * v).
void write_pgm16(const fs::path& path, std::span<const double> values, int width, int height);
std::vector<std::uint16_t> read_pgm16(const fs::path& path, int& width, int& height);

/// Map dump: "KPMAP1", then H, W, channel count as little-endian uint32, then
/// channel-major little-endian float64 samples.
void write_map_dump(const fs::path& path, const std::vector<const MapStack*>& stacks);
MapStack read_map_dump(const fs::path& path);

/// Every *.ppm in `dir`, sorted by file name.
Clip load_clip(const fs::path& dir, double fps);

}  // namespace ksp::io
