#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ksp {

/// 8-bit RGB frame, row-major, interleaved.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Frame() = default;
  Frame(int width, int height) : width(width), height(height), data(static_cast<std::size_t>(width) * height * 3, 0) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::uint8_t& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  bool operator==(const Frame&) const = default;
};

struct Clip {
  std::vector<Frame> frames;
  double fps = 25.0;
  std::string source_id;
  std::vector<std::string> frame_refs;  // optional, one per frame (file paths)

  double duration_s() const { return fps > 0.0 ? static_cast<double>(frames.size()) / fps : 0.0; }
  /// Throws ValidationError on mixed frame sizes, bad fps or ref count.
  void validate() const;
  std::string frame_ref(std::size_t index) const;
};

/// Per-pixel, per-channel lower median over `window` frames around `center`.
/// The window is shifted inward at the clip ends; clips shorter than the
/// window use every frame.
Frame median_background(const Clip& clip, int center, int window);

/// Root-mean-square temporal deviation of each pixel's RGB vector, scaled to
/// [0, 1] by the largest possible deviation (127.5 * sqrt(3)).
std::vector<double> pixel_temporal_std(const Clip& clip);

struct MotionStats {
  double score = 0.0;    // 30th percentile of pixel_temporal_std
  double mean_l2 = 0.0;  // mean RGB distance to the clip's median frame, scaled to [0, 1]
};

inline constexpr double kMotionPercentile = 0.30;

MotionStats clip_motion_stats(const Clip& clip);
double clip_motion_score(const Clip& clip);

enum class ClipClass { paired, unpaired };

/// Paired iff score < threshold; threshold must lie in (0, 1).
ClipClass classify_clip(double score, double threshold);
const char* to_string(ClipClass c);

struct ManifestOptions {
  double threshold = 0.02;
  double gap_s = 1.0;
  int window = 121;
  int target_stride = 1;
  double min_duration_s = 5.0;
  std::string background_dir = "backgrounds";
};

struct PairedTuple {
  std::string source, target, background;
  bool operator==(const PairedTuple&) const = default;
};

struct UnpairedTuple {
  std::string source, target;
  bool operator==(const UnpairedTuple&) const = default;
};

struct TupleManifest {
  std::vector<PairedTuple> paired;
  std::vector<UnpairedTuple> unpaired;
};

struct ClipReport {
  std::string source_id;
  double duration_s = 0.0;
  MotionStats stats;
  ClipClass clip_class = ClipClass::unpaired;
  bool skipped = false;
};

struct NamedFrame {
  std::string ref;
  Frame frame;
};

struct ManifestBuild {
  TupleManifest manifest;
  std::vector<NamedFrame> backgrounds;  // to be written at their refs
  std::vector<ClipReport> clips;
  std::vector<std::string> warnings;
  ManifestOptions options;
};

/// Classifies every clip and emits (source, target, background) tuples for
/// static clips and (source, target) pairs for dynamic ones. Every frame with
/// index multiple of target_stride is a target; its source sits gap frames
/// later (or earlier near the end of the clip).
ManifestBuild build_manifest(const std::vector<Clip>& clips, const ManifestOptions& options);

/// Frame index distance corresponding to gap_s at the given rate, at least 1.
int gap_frames(double gap_s, double fps);

namespace serial {

Frame median_background(const Clip& clip, int center, int window);
std::vector<double> pixel_temporal_std(const Clip& clip);

}  // namespace serial

}  // namespace ksp
