#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ksp/skeleton.hpp"
#include "ksp/video.hpp"

namespace ksp::detail {

struct FrameRange {
  int begin = 0;
  int end = 0;
};

inline FrameRange median_window(const Clip& clip, int center, int window) {
  if (clip.frames.empty()) throw ValidationError("median_background of an empty clip");
  if (window < 3) throw ValidationError("median window must be at least 3 frames");
  const int n = static_cast<int>(clip.frames.size());
  if (center < 0 || center >= n) throw ValidationError("median centre frame out of range");
  if (n <= window) return {0, n};
  const int start = std::clamp(center - window / 2, 0, n - window);
  return {start, start + window};
}

/// Lower median of the values at byte offset `offset` across the range.
inline std::uint8_t lower_median(const Clip& clip, FrameRange range, std::size_t offset,
                                 std::vector<std::uint8_t>& scratch) {
  scratch.clear();
  for (int t = range.begin; t < range.end; ++t) scratch.push_back(clip.frames[t].data[offset]);
  const auto mid = scratch.begin() + (scratch.size() - 1) / 2;
  std::nth_element(scratch.begin(), mid, scratch.end());
  return *mid;
}

/// Exact integer moments, so the result is independent of frame order.
inline double pixel_std(const Clip& clip, std::size_t pixel) {
  const auto n = static_cast<std::int64_t>(clip.frames.size());
  std::int64_t spread = 0;
  for (int c = 0; c < 3; ++c) {
    std::int64_t sum = 0, sq = 0;
    for (const auto& f : clip.frames) {
      const std::int64_t v = f.data[pixel * 3 + c];
      sum += v;
      sq += v * v;
    }
    spread += n * sq - sum * sum;
  }
  const double var = static_cast<double>(spread) / static_cast<double>(n * n);
  return std::sqrt(var) / (127.5 * std::sqrt(3.0));
}

}  // namespace ksp::detail
