#include "ksp/video.hpp"

#include "video_detail.hpp"

namespace ksp::serial {

Frame median_background(const Clip& clip, int center, int window) {
  const auto range = detail::median_window(clip, center, window);
  clip.validate();
  Frame out(clip.frames.front().width, clip.frames.front().height);
  std::vector<std::uint8_t> scratch;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = detail::lower_median(clip, range, i, scratch);
  return out;
}

std::vector<double> pixel_temporal_std(const Clip& clip) {
  clip.validate();
  if (clip.frames.empty()) return {};
  std::vector<double> out(clip.frames.front().pixel_count());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = detail::pixel_std(clip, p);
  return out;
}

}  // namespace ksp::serial
