#include "ksp/cli.hpp"

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ksp/camera.hpp"
#include "ksp/forward_kinematics.hpp"
#include "ksp/gradcheck.hpp"
#include "ksp/ik_solver.hpp"
#include "ksp/io.hpp"
#include "ksp/losses.hpp"
#include "ksp/spatial_maps.hpp"
#include "ksp/synth.hpp"
#include "ksp/video.hpp"

namespace ksp::cli {

namespace {

using io::json;
namespace fs = std::filesystem;

constexpr double kGradcheckLimit = 1e-4;

// Every tunable that can come from a flag or the config file.
struct Flags {
  std::optional<std::string> tree, config, intrinsics;
  std::optional<std::uint64_t> seed;
  bool quiet = false;

  std::optional<int> height, width;
  std::optional<double> sigma, sigma_y, alpha, sigma_floor;
  std::optional<bool> truncate;

  std::optional<double> lambda1, lambda2, w3, w2;

  std::optional<double> fps, threshold, gap_s;
  std::optional<int> window, target_stride, center;
  std::optional<std::string> bg_dir;

  std::optional<int> restarts, max_iters;
  std::optional<double> step_size, tol;
  std::optional<std::string> objective;

  std::optional<double> eps;
  std::optional<int> seeds;

  // Subcommand inputs and outputs.
  std::string params_path, pose_path, camera_path, landmarks_path, maps_path, init_path, input_path;
  std::string out_path, out_dir;
  std::vector<std::string> clips, stages;
};

// Flag value if given, else config value if present, else the default.
template <typename T>
T pick(const std::optional<T>& flag, const json& config, const char* key, T fallback) {
  if (flag) return *flag;
  if (config.contains(key)) {
    try {
      return config.at(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError(std::string("config key '") + key + "' has the wrong type");
    }
  }
  return fallback;
}

struct Settings {
  std::uint64_t seed = 0;
  std::string tree_path;
  KinematicTree tree;
  PerspectiveCamera intrinsics;
  MapParams maps;
  LossWeights weights;
  double fps = 25.0;
  ManifestOptions manifest;
  std::optional<int> center;
  FitConfig fit;
  int restarts = 8;
  double eps = 1e-6;
  int seeds = 1;
};

const char* const kConfigKeys[] = {"tree",      "seed",      "intrinsics", "height",        "width",   "sigma",
                                   "sigma_y",   "alpha",     "sigma_floor", "truncate",     "lambda1", "lambda2",
                                   "w3",        "w2",        "fps",        "threshold",     "gap_s",   "window",
                                   "target_stride", "center", "bg_dir",    "restarts",      "max_iters", "step_size",
                                   "tol",       "objective", "eps",        "seeds"};

Settings resolve(const Flags& f, std::ostream& err) {
  json config = json::object();
  if (f.config) {
    config = io::read_json(*f.config);
    if (!config.is_object()) throw ValidationError("config file must hold a JSON object");
    for (const auto& item : config.items()) {
      if (std::find(std::begin(kConfigKeys), std::end(kConfigKeys), item.key()) == std::end(kConfigKeys) &&
          !f.quiet) {
        err << "warning: ignoring unknown config key '" << item.key() << "'\n";
      }
    }
  }

  Settings s;
  s.seed = pick(f.seed, config, "seed", std::uint64_t{0});
  s.tree_path = pick(f.tree, config, "tree", std::string());
  s.tree = s.tree_path.empty() ? default_h36m_tree() : io::load_tree(s.tree_path);

  const auto intr_path = pick(f.intrinsics, config, "intrinsics", std::string());
  if (!intr_path.empty()) s.intrinsics = io::intrinsics_from_json(io::read_json(intr_path));
  s.intrinsics.validate();

  auto& m = s.maps;
  m.lattice.height = pick(f.height, config, "height", m.lattice.height);
  m.lattice.width = pick(f.width, config, "width", m.lattice.width);
  m.sigma = pick(f.sigma, config, "sigma", m.sigma);
  m.sigma_y = pick(f.sigma_y, config, "sigma_y", m.sigma_y);
  m.alpha = pick(f.alpha, config, "alpha", m.alpha);
  m.sigma_floor = pick(f.sigma_floor, config, "sigma_floor", m.sigma_floor);
  m.truncate = pick(f.truncate, config, "truncate", m.truncate);
  m.validate();

  auto& w = s.weights;
  w.lambda1 = pick(f.lambda1, config, "lambda1", w.lambda1);
  w.lambda2 = pick(f.lambda2, config, "lambda2", w.lambda2);
  w.w3 = pick(f.w3, config, "w3", w.w3);
  w.w2 = pick(f.w2, config, "w2", w.w2);
  for (double v : {w.lambda1, w.lambda2, w.w3, w.w2}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("loss weights must be finite and nonnegative");
  }

  s.fps = pick(f.fps, config, "fps", s.fps);
  if (!(s.fps > 0.0) || !std::isfinite(s.fps)) throw ValidationError("fps must be positive");
  auto& o = s.manifest;
  o.threshold = pick(f.threshold, config, "threshold", o.threshold);
  o.gap_s = pick(f.gap_s, config, "gap_s", o.gap_s);
  o.window = pick(f.window, config, "window", o.window);
  o.target_stride = pick(f.target_stride, config, "target_stride", o.target_stride);
  o.background_dir = pick(f.bg_dir, config, "bg_dir", o.background_dir);
  if (!(o.threshold > 0.0 && o.threshold < 1.0)) throw ValidationError("threshold must lie in (0, 1)");
  if (!(o.gap_s > 0.0) || !std::isfinite(o.gap_s)) throw ValidationError("gap_s must be positive");
  if (o.window < 3) throw ValidationError("window must be at least 3");
  if (o.target_stride < 1) throw ValidationError("target_stride must be at least 1");
  if (f.center || config.contains("center")) s.center = pick(f.center, config, "center", 0);

  auto& fit = s.fit;
  fit.max_iters = pick(f.max_iters, config, "max_iters", fit.max_iters);
  fit.step_size = pick(f.step_size, config, "step_size", fit.step_size);
  fit.tol = pick(f.tol, config, "tol", fit.tol);
  fit.objective = fit_objective_from_string(pick(f.objective, config, "objective", std::string(to_string(fit.objective))));
  fit.seed = s.seed;
  fit.maps = s.maps;
  fit.intrinsics = s.intrinsics;
  fit.validate();
  s.restarts = pick(f.restarts, config, "restarts", s.restarts);
  if (s.restarts < 1) throw ValidationError("restarts must be at least 1");

  s.eps = pick(f.eps, config, "eps", s.eps);
  s.seeds = pick(f.seeds, config, "seeds", s.seeds);
  if (s.seeds < 1) throw ValidationError("seeds must be at least 1");
  return s;
}

json meta_json(const std::string& subcommand, const Settings& s) {
  const auto& m = s.maps;
  const auto& o = s.manifest;
  const auto& fit = s.fit;
  return json{{"subcommand", subcommand},
              {"seed", s.seed},
              {"tree", s.tree_path.empty() ? json("builtin") : json(s.tree_path)},
              {"tree_version", s.tree.version},
              {"intrinsics", io::intrinsics_to_json(s.intrinsics)},
              {"maps",
               {{"height", m.lattice.height},
                {"width", m.lattice.width},
                {"sigma", m.sigma},
                {"sigma_y", m.sigma_y},
                {"alpha", m.alpha},
                {"sigma_floor", m.sigma_floor},
                {"truncate", m.truncate}}},
              {"weights",
               {{"lambda1", s.weights.lambda1},
                {"lambda2", s.weights.lambda2},
                {"w3", s.weights.w3},
                {"w2", s.weights.w2}}},
              {"video",
               {{"fps", s.fps},
                {"threshold", o.threshold},
                {"gap_s", o.gap_s},
                {"window", o.window},
                {"target_stride", o.target_stride},
                {"bg_dir", o.background_dir}}},
              {"fit",
               {{"objective", to_string(fit.objective)},
                {"max_iters", fit.max_iters},
                {"step_size", fit.step_size},
                {"tol", fit.tol},
                {"restarts", s.restarts}}},
              {"gradcheck", {{"eps", s.eps}, {"seeds", s.seeds}}}};
}

void emit(const json& value, const std::string& out_path, std::ostream& out) {
  if (out_path.empty() || out_path == "-") {
    out << value.dump(2) << '\n';
  } else {
    io::write_json(out_path, value);
  }
}

// Accepts either the object itself or a wrapper holding it under `key`
// (so synth and fit outputs can be fed straight back in).
const json& unwrap(const json& j, const char* key) { return j.contains(key) ? j.at(key) : j; }

std::vector<double> feature_from(const json& j) {
  try {
    return j.get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ValidationError("feature vectors must be arrays of numbers");
  }
}

FeatureVector to_feature(const std::vector<double>& v) {
  FeatureVector f;
  f.values = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  return f;
}

std::string channel_file(const char* prefix, int index, const std::string& name) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", index);
  return std::string(prefix) + "_" + buf + "_" + name + ".pgm";
}

std::vector<Clip> load_clips(const Flags& f, const Settings& s) {
  if (f.clips.empty()) throw ValidationError("no clip directories given");
  std::vector<Clip> clips;
  for (const auto& dir : f.clips) clips.push_back(io::load_clip(dir, s.fps));
  return clips;
}

int cmd_synth(const Flags& f, const Settings& s, std::ostream& out) {
  const auto sp = synth_pose(s.seed, s.tree);
  emit(json{{"params", io::params_to_json(sp.params, s.tree)},
            {"camera", io::camera_to_json(sp.camera)},
            {"meta", meta_json("synth", s)}},
       f.out_path, out);
  return 0;
}

int cmd_fk(const Flags& f, const Settings& s, std::ostream& out, std::ostream& err) {
  const auto unpacked = io::params_from_json(unwrap(io::read_json(f.params_path), "params"), s.tree);
  if (unpacked.renormalized && !f.quiet) err << "warning: bone directions were renormalized\n";
  const auto pose = forward_kinematics(unpacked.params, s.tree);
  auto j = io::pose_to_json(pose, s.tree);
  j["meta"] = meta_json("fk", s);
  emit(j, f.out_path, out);
  return 0;
}

int cmd_project(const Flags& f, const Settings& s, std::ostream& out) {
  const auto pose = io::pose_from_json(io::read_json(f.pose_path), s.tree);
  const auto camera = io::camera_from_json(unwrap(io::read_json(f.camera_path), "camera"));
  const auto lm = project(pose, camera, s.intrinsics);
  auto j = io::landmarks_to_json(lm, s.tree);
  j["meta"] = meta_json("project", s);
  emit(j, f.out_path, out);
  return 0;
}

int cmd_render(const Flags& f, const Settings& s, std::ostream& out) {
  const auto lm = io::landmarks_from_json(io::read_json(f.landmarks_path), s.tree);
  const auto maps = render_maps(lm, s.tree, s.maps);
  const fs::path dir = f.out_dir;
  fs::create_directories(dir);
  json heat = json::array(), affinity = json::array();
  for (int j = 0; j < maps.heat.channels; ++j) {
    const auto name = channel_file("heat", j, s.tree.joint_names[j]);
    io::write_pgm16(dir / name, maps.heat.channel(j), maps.heat.width, maps.heat.height);
    heat.push_back(name);
  }
  for (int l = 0; l < maps.affinity.channels; ++l) {
    const auto& limb = s.tree.limbs[l];
    const auto name = channel_file("affinity", l, s.tree.joint_names[limb.a] + "-" + s.tree.joint_names[limb.b]);
    io::write_pgm16(dir / name, maps.affinity.channel(l), maps.affinity.width, maps.affinity.height);
    affinity.push_back(name);
  }
  io::write_map_dump(dir / "maps.kpmap", {&maps.heat, &maps.affinity});
  emit(json{{"directory", dir.string()},
            {"heat", heat},
            {"affinity", affinity},
            {"dump", "maps.kpmap"},
            {"meta", meta_json("render", s)}},
       f.out_path, out);
  return 0;
}

int cmd_fit(const Flags& f, const Settings& s, std::ostream& out) {
  if (f.landmarks_path.empty() == f.maps_path.empty()) {
    throw ValidationError("fit needs exactly one of --landmarks or --maps");
  }
  FitInit init{rest_params(s.tree), CameraParams{}};
  if (!f.init_path.empty()) {
    const auto j = io::read_json(f.init_path);
    if (j.contains("params")) init.params = io::params_from_json(j["params"], s.tree).params;
    if (j.contains("camera")) init.camera = io::camera_from_json(j["camera"]);
  }
  FitConfig cfg = s.fit;
  FitResult result;
  if (!f.landmarks_path.empty()) {
    const auto target = io::landmarks_from_json(io::read_json(f.landmarks_path), s.tree);
    if (cfg.objective == FitObjective::heatmap_l2) cfg.objective = FitObjective::landmark_l2;
    result = fit_multistart(&target, nullptr, s.tree, init, cfg, s.restarts);
  } else {
    const auto dump = io::read_map_dump(f.maps_path);
    if (dump.channels < s.tree.joint_count()) throw ValidationError("map dump has fewer channels than joints");
    // Heat maps come first in a dump; any affinity channels after them are ignored.
    MapStack heat(s.tree.joint_count(), dump.height, dump.width);
    std::copy_n(dump.data.begin(), heat.data.size(), heat.data.begin());
    cfg.objective = FitObjective::heatmap_l2;
    cfg.maps.lattice = Lattice{dump.height, dump.width};
    cfg.maps.validate();
    result = fit_multistart(nullptr, &heat, s.tree, init, cfg, s.restarts);
  }
  auto j = io::fit_result_to_json(result, s.tree);
  const auto fitted = project(forward_kinematics(result.params, s.tree), result.camera, s.intrinsics);
  j["landmarks"] = io::landmarks_to_json(fitted, s.tree);
  j["meta"] = meta_json("fit", s);
  emit(j, f.out_path, out);
  return 0;
}

int cmd_loss(const Flags& f, const Settings& s, std::ostream& out) {
  const auto in = io::read_json(f.input_path);
  const auto& w = s.weights;
  json terms = json::object();
  double total = 0.0;
  try {
    if (in.contains("paired")) {
      const auto& p = in["paired"];
      const double v = loss_paired(p.value("image_diff", 0.0), io::landmarks_from_json(p.at("p"), s.tree),
                                   io::landmarks_from_json(p.at("p_hat"), s.tree),
                                   to_feature(feature_from(p.at("f"))), to_feature(feature_from(p.at("f_hat"))),
                                   w.lambda1, w.lambda2);
      terms["paired"] = v;
      total += v;
    }
    if (in.contains("unpaired")) {
      const auto& u = in["unpaired"];
      const double v = loss_unpaired(io::landmarks_from_json(u.at("p"), s.tree),
                                     io::landmarks_from_json(u.at("p_tilde"), s.tree),
                                     to_feature(feature_from(u.at("f"))), to_feature(feature_from(u.at("f_tilde"))),
                                     w.lambda2);
      terms["unpaired"] = v;
      total += v;
    }
    if (in.contains("prior")) {
      const auto& p = in["prior"];
      const double v = loss_prior(io::pose_from_json(p.at("p3"), s.tree), io::pose_from_json(p.at("p3_gt"), s.tree),
                                  io::landmarks_from_json(p.at("p2"), s.tree),
                                  io::landmarks_from_json(p.at("p2_gt"), s.tree), w.w3, w.w2);
      terms["prior"] = v;
      total += v;
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed loss input: ") + e.what());
  }
  if (terms.empty()) throw ValidationError("loss input has none of 'paired', 'unpaired', 'prior'");
  emit(json{{"terms", terms}, {"total", total}, {"meta", meta_json("loss", s)}}, f.out_path, out);
  return 0;
}

int cmd_bgextract(const Flags& f, const Settings& s, std::ostream& out) {
  if (f.clips.size() != 1) throw ValidationError("bgextract takes exactly one clip directory");
  const auto clip = io::load_clip(f.clips.front(), s.fps);
  const int n = static_cast<int>(clip.frames.size());
  const int center = s.center.value_or(n / 2);
  if (center < 0 || center >= n) throw ValidationError("center frame out of range");
  const auto bg = median_background(clip, center, s.manifest.window);
  const fs::path target = f.out_path.empty() ? fs::path("background.ppm") : fs::path(f.out_path);
  io::write_ppm(target, bg);
  out << json{{"background", target.string()}, {"center", center}, {"meta", meta_json("bgextract", s)}}.dump(2)
      << '\n';
  return 0;
}

int cmd_score(const Flags& f, const Settings& s, std::ostream& out, bool classify) {
  json rows = json::array();
  for (const auto& clip : load_clips(f, s)) {
    const auto stats = clip_motion_stats(clip);
    json row{{"source_id", clip.source_id},
             {"duration_s", clip.duration_s()},
             {"score", stats.score},
             {"mean_l2", stats.mean_l2}};
    if (classify) row["class"] = to_string(classify_clip(stats.score, s.manifest.threshold));
    rows.push_back(row);
  }
  emit(json{{"clips", rows}, {"meta", meta_json(classify ? "classify" : "score", s)}}, f.out_path, out);
  return 0;
}

int cmd_manifest(const Flags& f, const Settings& s, std::ostream& out, std::ostream& err) {
  const auto clips = load_clips(f, s);
  const auto build = build_manifest(clips, s.manifest);
  if (!f.quiet) {
    for (const auto& w : build.warnings) err << "warning: " << w << '\n';
  }
  for (const auto& bg : build.backgrounds) io::write_ppm(bg.ref, bg.frame);
  auto j = io::manifest_to_json(build);
  j["meta"]["config"] = meta_json("manifest", s);
  emit(j, f.out_path, out);
  return 0;
}

int cmd_gradcheck(const Flags& f, const Settings& s, std::ostream& out) {
  std::vector<GradStage> stages;
  if (f.stages.empty()) {
    stages = {GradStage::fk, GradStage::project, GradStage::maps, GradStage::full_chain};
  } else {
    for (const auto& name : f.stages) stages.push_back(grad_stage_from_string(name));
  }
  const GradcheckSetup setup{s.tree, s.intrinsics, s.maps};
  bool ok = true;
  out << std::left << std::setw(12) << "stage" << std::setw(8) << "seed" << std::setw(10) << "eps" << std::setw(14)
      << "max_error" << std::setw(11) << "fallbacks"
      << "status\n";
  for (const auto stage : stages) {
    for (int k = 0; k < s.seeds; ++k) {
      const auto r = gradcheck(stage, s.seed + static_cast<std::uint64_t>(k), s.eps, setup);
      const bool pass = r.max_error < kGradcheckLimit;
      ok = ok && pass;
      std::ostringstream err_text;
      err_text << std::scientific << std::setprecision(3) << r.max_error;
      std::ostringstream eps_text;
      eps_text << std::scientific << std::setprecision(0) << r.eps;
      out << std::setw(12) << to_string(stage) << std::setw(8) << r.seed << std::setw(10) << eps_text.str()
          << std::setw(14) << err_text.str() << std::setw(11) << r.absolute_fallbacks << (pass ? "ok" : "FAIL")
          << '\n';
    }
  }
  return ok ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Kinematic pose pipeline tools", "ksp"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--tree", f.tree, "Skeleton tree config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "Seed for synth, fit restarts and gradcheck");
  app.add_option("--config", f.config, "Config file (JSON); flags take precedence")->check(CLI::ExistingFile);
  app.add_flag("--quiet", f.quiet, "Suppress warnings");

  auto out_opt = [&](CLI::App* sub) { sub->add_option("-o,--out", f.out_path, "Output file (default stdout)"); };
  auto map_opts = [&](CLI::App* sub) {
    sub->add_option("--height", f.height, "Lattice rows");
    sub->add_option("--width", f.width, "Lattice columns");
    sub->add_option("--sigma", f.sigma, "Heat-map sigma (lattice cells)");
    sub->add_option("--sigma-y", f.sigma_y, "Affinity sigma across the limb");
    sub->add_option("--alpha", f.alpha, "Affinity sigma along the limb per unit length");
    sub->add_option("--sigma-floor", f.sigma_floor, "Lower bound on the along-limb sigma");
    sub->add_option("--truncate", f.truncate, "Skip pixels far outside each Gaussian");
  };
  auto intr_opt = [&](CLI::App* sub) {
    sub->add_option("--intrinsics", f.intrinsics, "Camera intrinsics (JSON)")->check(CLI::ExistingFile);
  };
  auto video_opts = [&](CLI::App* sub) {
    sub->add_option("clips", f.clips, "Clip directories of PPM frames")->check(CLI::ExistingDirectory);
    sub->add_option("--fps", f.fps, "Frame rate of the clips");
    sub->add_option("--window", f.window, "Median window in frames");
    sub->add_option("--threshold", f.threshold, "Motion score threshold for paired clips");
    sub->add_option("--gap-s", f.gap_s, "Source/target gap in seconds");
  };

  auto* synth = app.add_subcommand("synth", "Seeded random kinematic parameters and camera");
  out_opt(synth);

  auto* fk = app.add_subcommand("fk", "Kinematic parameters -> 3D pose");
  fk->add_option("params", f.params_path, "Parameter JSON")->required()->check(CLI::ExistingFile);
  out_opt(fk);

  auto* proj = app.add_subcommand("project", "3D pose + camera -> 2D landmarks");
  proj->add_option("pose", f.pose_path, "Pose JSON")->required()->check(CLI::ExistingFile);
  proj->add_option("camera", f.camera_path, "Camera JSON")->required()->check(CLI::ExistingFile);
  intr_opt(proj);
  out_opt(proj);

  auto* render = app.add_subcommand("render", "2D landmarks -> heat and affinity maps");
  render->add_option("landmarks", f.landmarks_path, "Landmarks JSON")->required()->check(CLI::ExistingFile);
  render->add_option("--out-dir", f.out_dir, "Directory for PGM files and the map dump")->required();
  map_opts(render);
  out_opt(render);

  auto* fit = app.add_subcommand("fit", "Fit kinematic parameters to landmarks or heat maps");
  fit->add_option("--landmarks", f.landmarks_path, "Target landmarks JSON")->check(CLI::ExistingFile);
  fit->add_option("--maps", f.maps_path, "Target map dump")->check(CLI::ExistingFile);
  fit->add_option("--init", f.init_path, "Initial params/camera JSON")->check(CLI::ExistingFile);
  fit->add_option("--restarts", f.restarts, "Number of multi-start restarts");
  fit->add_option("--max-iters", f.max_iters, "Iteration cap per restart");
  fit->add_option("--step-size", f.step_size, "Initial step size");
  fit->add_option("--tol", f.tol, "Stop when a step improves less than this");
  fit->add_option("--objective", f.objective, "landmark_l2 | landmark_l1 | heatmap_l2");
  intr_opt(fit);
  map_opts(fit);
  out_opt(fit);

  auto* loss = app.add_subcommand("loss", "Evaluate the energy terms on JSON inputs");
  loss->add_option("input", f.input_path, "Loss input JSON")->required()->check(CLI::ExistingFile);
  loss->add_option("--lambda1", f.lambda1, "Paired pose weight");
  loss->add_option("--lambda2", f.lambda2, "Appearance weight");
  loss->add_option("--w3", f.w3, "Prior 3D weight");
  loss->add_option("--w2", f.w2, "Prior 2D weight");
  out_opt(loss);

  auto* bg = app.add_subcommand("bgextract", "Median background around one frame");
  video_opts(bg);
  bg->add_option("--center", f.center, "Centre frame (default: middle)");
  bg->add_option("-o,--out", f.out_path, "Output PPM (default background.ppm)");

  auto* score = app.add_subcommand("score", "Motion score per clip");
  video_opts(score);
  out_opt(score);

  auto* classify = app.add_subcommand("classify", "Paired/unpaired class per clip");
  video_opts(classify);
  out_opt(classify);

  auto* manifest = app.add_subcommand("manifest", "Build the training tuple manifest");
  video_opts(manifest);
  manifest->add_option("--target-stride", f.target_stride, "Use every n-th frame as a target");
  manifest->add_option("--bg-dir", f.bg_dir, "Directory for extracted backgrounds");
  out_opt(manifest);

  auto* grad = app.add_subcommand("gradcheck", "Analytic vs finite-difference gradients");
  grad->add_option("stages", f.stages, "fk | project | maps | full_chain (default all)");
  grad->add_option("--eps", f.eps, "Finite-difference step");
  grad->add_option("--seeds", f.seeds, "Number of consecutive seeds from --seed");
  intr_opt(grad);
  map_opts(grad);

  std::vector<std::string> argv_store{"ksp"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    const Settings s = resolve(f, err);
    if (synth->parsed()) return cmd_synth(f, s, out);
    if (fk->parsed()) return cmd_fk(f, s, out, err);
    if (proj->parsed()) return cmd_project(f, s, out);
    if (render->parsed()) return cmd_render(f, s, out);
    if (fit->parsed()) return cmd_fit(f, s, out);
    if (loss->parsed()) return cmd_loss(f, s, out);
    if (bg->parsed()) return cmd_bgextract(f, s, out);
    if (score->parsed()) return cmd_score(f, s, out, false);
    if (classify->parsed()) return cmd_score(f, s, out, true);
    if (manifest->parsed()) return cmd_manifest(f, s, out, err);
    if (grad->parsed()) return cmd_gradcheck(f, s, out);
    err << "error: no subcommand\n";
    return 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace ksp::cli
