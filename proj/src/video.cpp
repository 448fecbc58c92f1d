#include "ksp/video.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "video_detail.hpp"

namespace ksp {

void Clip::validate() const {
  if (!(fps > 0.0) || !std::isfinite(fps)) throw ValidationError("clip fps must be positive");
  if (!frame_refs.empty() && frame_refs.size() != frames.size()) {
    throw ValidationError("clip " + source_id + " has " + std::to_string(frame_refs.size()) + " refs for " +
                          std::to_string(frames.size()) + " frames");
  }
  for (const auto& f : frames) {
    if (f.width != frames.front().width || f.height != frames.front().height) {
      throw ValidationError("clip " + source_id + " mixes frame sizes");
    }
    if (f.data.size() != f.pixel_count() * 3) throw ValidationError("frame data length is not width*height*3");
  }
}

std::string Clip::frame_ref(std::size_t index) const {
  if (!frame_refs.empty()) return frame_refs.at(index);
  return source_id + "#" + std::to_string(index);
}

Frame median_background(const Clip& clip, int center, int window) {
  const auto range = detail::median_window(clip, center, window);
  clip.validate();
  Frame out(clip.frames.front().width, clip.frames.front().height);
  const auto count = static_cast<std::ptrdiff_t>(out.data.size());

#pragma omp parallel
  {
    std::vector<std::uint8_t> scratch;
    scratch.reserve(range.end - range.begin);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      out.data[i] = detail::lower_median(clip, range, static_cast<std::size_t>(i), scratch);
    }
  }
  return out;
}

std::vector<double> pixel_temporal_std(const Clip& clip) {
  clip.validate();
  if (clip.frames.empty()) return {};
  std::vector<double> out(clip.frames.front().pixel_count());
  const auto count = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < count; ++p) out[p] = detail::pixel_std(clip, static_cast<std::size_t>(p));
  return out;
}

MotionStats clip_motion_stats(const Clip& clip) {
  if (clip.frames.size() < 2) throw ValidationError("motion score needs at least two frames");
  clip.validate();

  MotionStats stats;
  auto stds = pixel_temporal_std(clip);
  const std::size_t rank = static_cast<std::size_t>(std::ceil(kMotionPercentile * stds.size()));
  const auto nth = stds.begin() + (rank > 0 ? rank - 1 : 0);
  std::nth_element(stds.begin(), nth, stds.end());
  stats.score = *nth;

  // Squared RGB distances are small integers; count them instead of summing
  // square roots so the mean does not depend on frame order.
  const Frame median = median_background(clip, 0, std::max<int>(3, static_cast<int>(clip.frames.size())));
  constexpr int kMaxSq = 3 * 255 * 255;
  std::vector<std::uint64_t> hist(kMaxSq + 1, 0);
  const auto pixels = static_cast<std::ptrdiff_t>(median.pixel_count());
#pragma omp parallel
  {
    std::vector<std::uint64_t> local(kMaxSq + 1, 0);
#pragma omp for schedule(static)
    for (std::ptrdiff_t p = 0; p < pixels; ++p) {
      for (const auto& f : clip.frames) {
        int sq = 0;
        for (int c = 0; c < 3; ++c) {
          const int d = static_cast<int>(f.data[p * 3 + c]) - static_cast<int>(median.data[p * 3 + c]);
          sq += d * d;
        }
        ++local[sq];
      }
    }
#pragma omp critical
    for (int i = 0; i <= kMaxSq; ++i) hist[i] += local[i];
  }
  double total = 0.0;
  for (int i = 1; i <= kMaxSq; ++i) {
    if (hist[i]) total += static_cast<double>(hist[i]) * std::sqrt(static_cast<double>(i));
  }
  const double samples = static_cast<double>(pixels) * static_cast<double>(clip.frames.size());
  stats.mean_l2 = total / samples / (255.0 * std::sqrt(3.0));
  return stats;
}

double clip_motion_score(const Clip& clip) { return clip_motion_stats(clip).score; }

ClipClass classify_clip(double score, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("threshold must lie in (0, 1)");
  return score < threshold ? ClipClass::paired : ClipClass::unpaired;
}

const char* to_string(ClipClass c) { return c == ClipClass::paired ? "paired" : "unpaired"; }

int gap_frames(double gap_s, double fps) {
  if (!(gap_s >= 0.0) || !(fps > 0.0)) throw ValidationError("gap and fps must be nonnegative/positive");
  return std::max(1, static_cast<int>(std::ceil(gap_s * fps - 1e-9)));
}

namespace {

struct ClipOutcome {
  ClipReport report;
  std::vector<PairedTuple> paired;
  std::vector<UnpairedTuple> unpaired;
  std::vector<NamedFrame> backgrounds;
  std::string warning;
};

std::string background_ref(const ManifestOptions& o, const std::string& source_id, int t) {
  char idx[16];
  std::snprintf(idx, sizeof idx, "%06d", t);
  return o.background_dir + "/" + source_id + "_" + idx + ".ppm";
}

ClipOutcome process_clip(const Clip& clip, const ManifestOptions& o) {
  ClipOutcome out;
  out.report.source_id = clip.source_id;
  out.report.duration_s = clip.duration_s();
  if (out.report.duration_s < o.min_duration_s || clip.frames.size() < 2) {
    out.report.skipped = true;
    out.warning = "skipping clip " + clip.source_id + ": " + std::to_string(out.report.duration_s) +
                  " s is shorter than " + std::to_string(o.min_duration_s) + " s";
    return out;
  }
  out.report.stats = clip_motion_stats(clip);
  out.report.clip_class = classify_clip(out.report.stats.score, o.threshold);

  const int n = static_cast<int>(clip.frames.size());
  const int gap = gap_frames(o.gap_s, clip.fps);
  for (int t = 0; t < n; t += o.target_stride) {
    int s = t + gap;
    if (s >= n) s = t - gap;
    if (s < 0) continue;
    if (out.report.clip_class == ClipClass::paired) {
      const auto ref = background_ref(o, clip.source_id, t);
      out.paired.push_back({clip.frame_ref(s), clip.frame_ref(t), ref});
      out.backgrounds.push_back({ref, median_background(clip, t, o.window)});
    } else {
      out.unpaired.push_back({clip.frame_ref(s), clip.frame_ref(t)});
    }
  }
  return out;
}

}  // namespace

ManifestBuild build_manifest(const std::vector<Clip>& clips, const ManifestOptions& options) {
  classify_clip(0.0, options.threshold);  // validates the threshold
  if (options.window < 3) throw ValidationError("median window must be at least 3 frames");
  if (options.target_stride < 1) throw ValidationError("target stride must be positive");
  for (const auto& c : clips) c.validate();

  std::vector<ClipOutcome> outcomes(clips.size());
  const auto count = static_cast<std::ptrdiff_t>(clips.size());
  // Clips are independent; results are merged below in input order.
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) outcomes[i] = process_clip(clips[i], options);

  ManifestBuild build;
  build.options = options;
  for (auto& o : outcomes) {
    if (!o.warning.empty()) build.warnings.push_back(std::move(o.warning));
    build.clips.push_back(o.report);
    for (auto& p : o.paired) build.manifest.paired.push_back(std::move(p));
    for (auto& u : o.unpaired) build.manifest.unpaired.push_back(std::move(u));
    for (auto& b : o.backgrounds) build.backgrounds.push_back(std::move(b));
  }
  return build;
}

}  // namespace ksp
