#include "ksp/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ksp::io {

namespace {

template <typename V>
json vec_json(const V& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ValidationError("expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Vec2 vec2_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("expected a 2-vector");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

// Reads one whitespace-separated header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  while (in >> tok) {
    if (tok[0] == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    return tok;
  }
  throw IoError("truncated image header");
}

int header_int(std::istream& in) {
  const auto tok = header_token(in);
  try {
    return std::stoi(tok);
  } catch (const std::exception&) {
    throw IoError("bad image header field '" + tok + "'");
  }
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated map dump header");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw IoError("truncated map dump body");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

constexpr char kMapMagic[] = "KPMAP1";

}  // namespace

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& value) {
  auto out = open_out(path);
  out << value.dump(2) << '\n';
}

json tree_to_json(const KinematicTree& tree) {
  json joints = json::array();
  for (int j = 0; j < tree.joint_count(); ++j) {
    json e{{"name", tree.joint_names[j]}};
    e["parent"] = tree.parent[j] == kNoParent ? json(nullptr) : json(tree.joint_names[tree.parent[j]]);
    if (tree.parent[j] != kNoParent) {
      e["length"] = tree.bone_length[j];
      e["rest_offset"] = vec_json(tree.rest_offset[j]);
    }
    joints.push_back(e);
  }
  json mirror = json::array();
  for (int j = 0; j < tree.joint_count(); ++j) {
    if (tree.mirror[j] > j) mirror.push_back({tree.joint_names[j], tree.joint_names[tree.mirror[j]]});
  }
  json limbs = json::array();
  for (const auto& l : tree.limbs) limbs.push_back({tree.joint_names[l.a], tree.joint_names[l.b]});
  const auto& r = tree.root;
  return json{{"version", tree.version},
              {"joints", joints},
              {"mirror_pairs", mirror},
              {"limbs", limbs},
              {"root_rule",
               {{"pelvis", tree.joint_names[r.pelvis]},
                {"left_hip", tree.joint_names[r.left_hip]},
                {"right_hip", tree.joint_names[r.right_hip]},
                {"neck", tree.joint_names[r.neck]}}}};
}

KinematicTree tree_from_json(const json& j) {
  try {
    KinematicTree tree;
    tree.version = j.value("version", std::string("unversioned"));
    const auto& joints = j.at("joints");
    for (const auto& e : joints) tree.joint_names.push_back(e.at("name").get<std::string>());
    const int n = tree.joint_count();
    tree.parent.assign(n, kNoParent);
    tree.bone_length.assign(n, 0.0);
    tree.rest_offset.assign(n, Vec3::Zero());
    for (int k = 0; k < n; ++k) {
      const auto& e = joints[k];
      if (e.contains("parent") && !e["parent"].is_null()) {
        tree.parent[k] = tree.index_of(e["parent"].get<std::string>());
        tree.bone_length[k] = e.at("length").get<double>();
        const Vec3 off = vec3_from(e.at("rest_offset"));
        // Rest offsets are directions; accept any nonzero length in the file.
        tree.rest_offset[k] = off.norm() > 0.0 ? Vec3(off.normalized()) : off;
      }
    }
    tree.mirror.resize(n);
    for (int k = 0; k < n; ++k) tree.mirror[k] = k;
    for (const auto& pair : j.at("mirror_pairs")) {
      const int a = tree.index_of(pair.at(0).get<std::string>());
      const int b = tree.index_of(pair.at(1).get<std::string>());
      tree.mirror[a] = b;
      tree.mirror[b] = a;
    }
    for (const auto& limb : j.at("limbs")) {
      tree.limbs.push_back({tree.index_of(limb.at(0).get<std::string>()), tree.index_of(limb.at(1).get<std::string>())});
    }
    const auto& r = j.at("root_rule");
    tree.root = RootRule{tree.index_of(r.at("pelvis").get<std::string>()),
                         tree.index_of(r.at("left_hip").get<std::string>()),
                         tree.index_of(r.at("right_hip").get<std::string>()),
                         tree.index_of(r.at("neck").get<std::string>())};
    return tree;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed tree config: ") + e.what());
  }
}

KinematicTree load_tree(const fs::path& path) {
  auto tree = tree_from_json(read_json(path));
  require_valid(tree);
  return tree;
}

json params_to_json(const LocalKinematicParams& params, const KinematicTree& tree) {
  const auto dirs = direction_joints(tree);
  if (dirs.size() != params.bone_dirs.size()) throw ValidationError("parameter count does not match the tree");
  json bone_dirs = json::array();
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    bone_dirs.push_back({{"name", tree.joint_names[dirs[k]]}, {"dir", vec_json(params.bone_dirs[k])}});
  }
  return json{{"trunk_hipline_angle", params.trunk_hipline_angle},
              {"bone_dirs", bone_dirs},
              {"packed", pack_params(params)}};
}

UnpackResult params_from_json(const json& j, const KinematicTree& tree) {
  try {
    const auto dirs = direction_joints(tree);
    if (j.contains("bone_dirs")) {
      std::vector<double> packed(packed_param_size(static_cast<int>(dirs.size())), 0.0);
      packed[0] = j.at("trunk_hipline_angle").get<double>();
      std::vector<char> seen(dirs.size(), 0);
      for (const auto& e : j.at("bone_dirs")) {
        const int joint = tree.index_of(e.at("name").get<std::string>());
        const auto it = std::find(dirs.begin(), dirs.end(), joint);
        if (it == dirs.end()) throw ValidationError(e.at("name").get<std::string>() + " has no direction parameter");
        const auto k = static_cast<std::size_t>(it - dirs.begin());
        const Vec3 d = vec3_from(e.at("dir"));
        packed[1 + 3 * k] = d.x();
        packed[2 + 3 * k] = d.y();
        packed[3 + 3 * k] = d.z();
        seen[k] = 1;
      }
      if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw ValidationError("missing bone directions");
      return unpack_params(packed);
    }
    const auto packed = j.at("packed").get<std::vector<double>>();
    if (packed.size() != static_cast<std::size_t>(packed_param_size(static_cast<int>(dirs.size())))) {
      throw ValidationError("packed parameter vector has length " + std::to_string(packed.size()));
    }
    return unpack_params(packed);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed kinematic parameters: ") + e.what());
  }
}

json camera_to_json(const CameraParams& camera) {
  json pairs = json::array();
  for (const auto& p : camera.angles_sincos) pairs.push_back({p.x(), p.y()});
  return json{{"angles_sincos", pairs}, {"translation", vec_json(camera.translation)}};
}

CameraParams camera_from_json(const json& j) {
  try {
    CameraParams c;
    const auto& pairs = j.at("angles_sincos");
    if (pairs.size() != 3) throw ValidationError("camera needs three (sin, cos) pairs");
    for (int a = 0; a < 3; ++a) c.angles_sincos[a] = vec2_from(pairs[a]);
    if (j.contains("translation")) c.translation = vec3_from(j["translation"]);
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed camera: ") + e.what());
  }
}

json intrinsics_to_json(const PerspectiveCamera& intrinsics) {
  return json{{"focal", intrinsics.focal},
              {"principal_point", vec_json(intrinsics.principal_point)},
              {"z_min", intrinsics.z_min}};
}

PerspectiveCamera intrinsics_from_json(const json& j) {
  try {
    PerspectiveCamera c;
    c.focal = j.value("focal", c.focal);
    c.z_min = j.value("z_min", c.z_min);
    if (j.contains("principal_point")) c.principal_point = vec2_from(j["principal_point"]);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed intrinsics: ") + e.what());
  }
}

json pose_to_json(const Pose3D& pose, const KinematicTree& tree) {
  json joints = json::array();
  for (int j = 0; j < pose.joint_count(); ++j) {
    joints.push_back({{"name", tree.joint_names.at(j)}, {"position", vec_json(Vec3(pose.joints.row(j).transpose()))}});
  }
  return json{{"joints", joints}};
}

Pose3D pose_from_json(const json& j, const KinematicTree& tree) {
  try {
    Pose3D pose;
    pose.joints.setZero(tree.joint_count(), 3);
    std::vector<char> seen(tree.joint_count(), 0);
    for (const auto& e : j.at("joints")) {
      const int k = tree.index_of(e.at("name").get<std::string>());
      pose.joints.row(k) = vec3_from(e.at("position")).transpose();
      seen[k] = 1;
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw ValidationError("pose is missing joints");
    return pose;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed pose: ") + e.what());
  }
}

json landmarks_to_json(const Landmarks2D& landmarks, const KinematicTree& tree) {
  json pts = json::array();
  for (int j = 0; j < landmarks.joint_count(); ++j) {
    pts.push_back({{"name", tree.joint_names.at(j)}, {"point", vec_json(Vec2(landmarks.points.row(j).transpose()))}});
  }
  return json{{"landmarks", pts}, {"in_frame", landmarks.all_in_frame()}};
}

Landmarks2D landmarks_from_json(const json& j, const KinematicTree& tree) {
  try {
    Landmarks2D lm;
    lm.points.setZero(tree.joint_count(), 2);
    std::vector<char> seen(tree.joint_count(), 0);
    for (const auto& e : j.at("landmarks")) {
      const int k = tree.index_of(e.at("name").get<std::string>());
      lm.points.row(k) = vec2_from(e.at("point")).transpose();
      seen[k] = 1;
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw ValidationError("landmarks are missing joints");
    return lm;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed landmarks: ") + e.what());
  }
}

json fit_result_to_json(const FitResult& result, const KinematicTree& tree) {
  return json{{"params", params_to_json(result.params, tree)},
              {"camera", camera_to_json(result.camera)},
              {"objective_trace", result.objective_trace},
              {"converged", result.converged},
              {"step_rejected", result.step_rejected},
              {"iterations", result.iterations},
              {"reprojection_error", result.reprojection_error},
              {"seed", result.seed}};
}

json manifest_to_json(const ManifestBuild& build) {
  json paired = json::array(), unpaired = json::array(), scores = json::array();
  for (const auto& p : build.manifest.paired) {
    paired.push_back({{"source", p.source}, {"target", p.target}, {"background", p.background}});
  }
  for (const auto& u : build.manifest.unpaired) unpaired.push_back({{"source", u.source}, {"target", u.target}});
  for (const auto& c : build.clips) {
    json e{{"source_id", c.source_id}, {"duration_s", c.duration_s}, {"skipped", c.skipped}};
    if (!c.skipped) {
      e["score"] = c.stats.score;
      e["mean_l2"] = c.stats.mean_l2;
      e["class"] = to_string(c.clip_class);
    }
    scores.push_back(e);
  }
  const auto& o = build.options;
  return json{{"paired", paired},
              {"unpaired", unpaired},
              {"meta",
               {{"threshold", o.threshold},
                {"gap_s", o.gap_s},
                {"window", o.window},
                {"target_stride", o.target_stride},
                {"clips", scores}}}};
}

Frame read_ppm(const fs::path& path) {
  auto in = open_in(path);
  if (header_token(in) != "P6") throw IoError(path.string() + " is not a binary PPM");
  const int w = header_int(in), h = header_int(in), maxval = header_int(in);
  if (w <= 0 || h <= 0 || maxval != 255) throw IoError(path.string() + ": only 8-bit PPM is supported");
  in.get();  // single whitespace after the header
  Frame f(w, h);
  if (!in.read(reinterpret_cast<char*>(f.data.data()), static_cast<std::streamsize>(f.data.size()))) {
    throw IoError(path.string() + ": truncated pixel data");
  }
  return f;
}

void write_ppm(const fs::path& path, const Frame& frame) {
  auto out = open_out(path);
  out << "P6\n" << frame.width << ' ' << frame.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.data.data()), static_cast<std::streamsize>(frame.data.size()));
}

void write_pgm16(const fs::path& path, std::span<const double> values, int width, int height) {
  if (values.size() != static_cast<std::size_t>(width) * height) throw ValidationError("PGM size mismatch");
  auto out = open_out(path);
  out << "P5\n" << width << ' ' << height << "\n65535\n";
  std::vector<unsigned char> buf(values.size() * 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::clamp(values[i], 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(65535.0 * v));
    buf[2 * i] = static_cast<unsigned char>(q >> 8);
    buf[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

std::vector<std::uint16_t> read_pgm16(const fs::path& path, int& width, int& height) {
  auto in = open_in(path);
  if (header_token(in) != "P5") throw IoError(path.string() + " is not a binary PGM");
  width = header_int(in);
  height = header_int(in);
  if (header_int(in) != 65535) throw IoError(path.string() + ": expected maxval 65535");
  in.get();
  std::vector<unsigned char> buf(static_cast<std::size_t>(width) * height * 2);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw IoError(path.string() + ": truncated pixel data");
  }
  std::vector<std::uint16_t> out(buf.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
  return out;
}

void write_map_dump(const fs::path& path, const std::vector<const MapStack*>& stacks) {
  if (stacks.empty()) throw ValidationError("nothing to dump");
  const int h = stacks.front()->height, w = stacks.front()->width;
  std::uint32_t channels = 0;
  for (const auto* s : stacks) {
    if (s->height != h || s->width != w) throw ValidationError("map stacks differ in lattice size");
    channels += static_cast<std::uint32_t>(s->channels);
  }
  auto out = open_out(path);
  out.write(kMapMagic, 6);
  put_u32(out, static_cast<std::uint32_t>(h));
  put_u32(out, static_cast<std::uint32_t>(w));
  put_u32(out, channels);
  for (const auto* s : stacks) {
    for (double v : s->data) put_f64(out, v);
  }
}

MapStack read_map_dump(const fs::path& path) {
  auto in = open_in(path);
  char magic[6];
  if (!in.read(magic, 6) || std::memcmp(magic, kMapMagic, 6) != 0) throw IoError(path.string() + " is not a map dump");
  const auto h = get_u32(in), w = get_u32(in), c = get_u32(in);
  if (h == 0 || w == 0 || h > 1u << 15 || w > 1u << 15 || c > 1u << 12) throw IoError("implausible map dump header");
  MapStack maps(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w));
  for (auto& v : maps.data) v = get_f64(in);
  return maps;
}

Clip load_clip(const fs::path& dir, double fps) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".ppm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  Clip clip;
  clip.fps = fps;
  clip.source_id = dir.filename().string();
  if (clip.source_id.empty()) clip.source_id = dir.parent_path().filename().string();
  for (const auto& f : files) {
    clip.frames.push_back(read_ppm(f));
    clip.frame_refs.push_back(f.string());
  }
  clip.validate();
  return clip;
}

}  // namespace ksp::io
