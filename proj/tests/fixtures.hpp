#pragma once

// Shared synthetic data for the unit and acceptance tests.

#include <algorithm>
#include <cstdint>
#include <random>

#include "ksp/losses.hpp"
#include "ksp/spatial_maps.hpp"
#include "ksp/video.hpp"

namespace ksp::fixtures {

inline Frame random_frame(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  Frame f(width, height);
  for (auto& v : f.data) v = static_cast<std::uint8_t>(byte(rng));
  return f;
}

inline void paint_square(Frame& f, int x0, int y0, int side, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  for (int y = y0; y < y0 + side; ++y) {
    for (int x = x0; x < x0 + side; ++x) {
      const int xx = ((x % f.width) + f.width) % f.width;
      if (y < 0 || y >= f.height) continue;
      f.at(xx, y, 0) = r;
      f.at(xx, y, 1) = g;
      f.at(xx, y, 2) = b;
    }
  }
}

/// Static background with a square that slides one pixel per frame and wraps
/// around horizontally, so each pixel is covered in side/width of the frames.
inline Clip moving_square_clip(int frames, int width, int height, int side, std::uint64_t seed, Frame* background) {
  const Frame bg = random_frame(width, height, seed);
  if (background) *background = bg;
  Clip clip;
  clip.source_id = "square" + std::to_string(seed);
  for (int t = 0; t < frames; ++t) {
    Frame f = bg;
    paint_square(f, t, height / 3, side, 250, 10, 250);
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

inline std::uint8_t jitter(std::uint8_t v, int d) { return static_cast<std::uint8_t>(std::clamp(v + d, 0, 255)); }

/// Tripod shot: fixed background, sensor noise of +-1 and a small moving subject.
inline Clip static_camera_clip(int frames, int width, int height, std::uint64_t seed) {
  const Frame bg = random_frame(width, height, seed);
  std::mt19937_64 rng(seed + 1);
  std::uniform_int_distribution<int> noise(-1, 1);
  Clip clip;
  clip.source_id = "static" + std::to_string(seed);
  for (int t = 0; t < frames; ++t) {
    Frame f = bg;
    for (auto& v : f.data) v = jitter(v, noise(rng));
    paint_square(f, width / 4 + (t % (width / 2)), height / 3, std::max(2, width / 8), 200, 40, 40);
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

/// Camera panning across a textured scene at one pixel per frame.
inline Clip panning_clip(int frames, int width, int height, std::uint64_t seed) {
  const Frame scene = random_frame(width + frames, height, seed);
  Clip clip;
  clip.source_id = "pan" + std::to_string(seed);
  for (int t = 0; t < frames; ++t) {
    Frame f(width, height);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        for (int c = 0; c < 3; ++c) f.at(x, y, c) = scene.at(x + t, y, c);
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

/// Stand-in energy model on J-channel "images" that are heat maps.
///
/// The pose encoder takes the soft-argmax of every channel and then labels
/// each mirror pair by its handedness about the pelvis->neck axis, so a
/// mirrored image swaps left and right labels while a rotated one does not.
/// The appearance code is the mean intensity, and reconstruct scales the heat
/// maps to reproduce it. `bias` is added to every decoded landmark to break
/// equivariance on purpose.
class BlobModel : public EnergyModel {
 public:
  BlobModel(KinematicTree tree, Lattice lattice, Vec2 bias = Vec2::Zero())
      : tree_(std::move(tree)), lattice_(lattice), bias_(bias) {}

  Image reconstruct(const SpatialMaps& maps, const FeatureVector& appearance, const Image& background) const override {
    double gain = 1.0;
    if (appearance.values.size() > 0) {
      double mean = 0.0;
      for (double v : maps.heat.data) mean += v;
      gain = appearance.values[0] * static_cast<double>(maps.heat.data.size()) / mean;
    }
    Image img(maps.heat.width, maps.heat.height, maps.heat.channels);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = gain * maps.heat.data[i];
    if (background.data.size() == img.data.size()) {
      for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] += background.data[i];
    }
    return img;
  }

  Landmarks2D encode_pose(const Image& image) const override {
    const int j_count = tree_.joint_count();
    const std::size_t plane = static_cast<std::size_t>(image.width) * image.height;
    Landmarks2D raw;
    raw.points.resize(j_count, 2);
    for (int j = 0; j < j_count; ++j) {
      const Vec2 c = soft_argmax(std::span<const double>(image.data.data() + j * plane, plane), lattice_);
      raw.points.row(j) = c.transpose();
    }
    const Vec2 pelvis = raw.points.row(tree_.root.pelvis).transpose();
    const Vec2 axis = Vec2(raw.points.row(tree_.root.neck).transpose()) - pelvis;
    auto hand = [&](int j) {
      const Vec2 d = Vec2(raw.points.row(j).transpose()) - pelvis;
      return axis.x() * d.y() - axis.y() * d.x();
    };
    Landmarks2D out = raw;
    for (int a = 0; a < j_count; ++a) {
      const int b = tree_.mirror[a];
      if (b <= a) continue;
      const bool keep = hand(a) >= hand(b);
      out.points.row(a) = raw.points.row(keep ? a : b);
      out.points.row(b) = raw.points.row(keep ? b : a);
    }
    out.points.rowwise() += bias_.transpose();
    return out;
  }

  FeatureVector encode_appearance(const Image& image) const override {
    double sum = 0.0;
    for (double v : image.data) sum += v;
    FeatureVector f;
    f.values = Eigen::VectorXd::Constant(1, sum / static_cast<double>(image.data.size()));
    return f;
  }

 private:
  KinematicTree tree_;
  Lattice lattice_;
  Vec2 bias_;
};

inline Image image_from_maps(const MapStack& maps) {
  Image img(maps.width, maps.height, maps.channels);
  img.data = maps.data;
  return img;
}

}  // namespace ksp::fixtures
