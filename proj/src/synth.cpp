// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ufo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ufo/errors.hpp"

namespace ufo {

std::string to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::square: return "square";
    case ShapeKind::disk: return "disk";
    case ShapeKind::bar: return "bar";
  }
  return "?";
}

std::string to_string(MotionKind k) {
  switch (k) {
    case MotionKind::translate: return "translate";
    case MotionKind::oscillate: return "oscillate";
    case MotionKind::grow: return "grow";
  }
  return "?";
}

std::string to_string(Style s) {
  switch (s) {
    case Style::invert: return "invert";
    case Style::posterize: return "posterize";
    case Style::grayscale: return "grayscale";
    case Style::vignette: return "vignette";
  }
  return "?";
}

Style style_from_string(const std::string& name) {
  if (name == "invert") return Style::invert;
  if (name == "posterize") return Style::posterize;
  if (name == "grayscale") return Style::grayscale;
  if (name == "vignette") return Style::vignette;
  throw ConditionError("unknown style '" + name + "'");
}

ConditionSpec condition_spec(int id, int num_conditions) {
  if (num_conditions < 1 || num_conditions > kMaxConditions) {
    throw ConditionError("condition table size must lie in 1.." + std::to_string(kMaxConditions));
  }
  if (id < 0 || id >= num_conditions) {
    throw ConditionError("unsupported condition id " + std::to_string(id));
  }
  ConditionSpec spec;
  spec.id = id;
  spec.shape = static_cast<ShapeKind>(id % 3);
  spec.motion = static_cast<MotionKind>((id / 3) % 3);
  spec.palette = (id / 9 + id) % 4;
  return spec;
}

namespace {

constexpr double kQuantum = 1.0 / 65536.0;

double quantize(double v) { return std::round(std::clamp(v, 0.0, 1.0) / kQuantum) * kQuantum; }

std::mt19937_64 scene_rng(const ConditionSpec& cond, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(cond.id), 0x5eedu};
  return std::mt19937_64(seq);
}

struct Palette {
  double bg, fg;
};

constexpr Palette kPalettes[4] = {{0.20, 0.85}, {0.75, 0.15}, {0.35, 0.95}, {0.60, 0.05}};

bool inside_shape(ShapeKind shape, int size, int dy, int dx) {
  switch (shape) {
    case ShapeKind::square: return dy >= 0 && dy < size && dx >= 0 && dx < size;
    case ShapeKind::disk: {
      const double c = (size - 1) / 2.0;
      const double r = size / 2.0;
      return (dy - c) * (dy - c) + (dx - c) * (dx - c) <= r * r;
    }
    case ShapeKind::bar: return dy >= 0 && dy < size && dx >= 0 && dx < std::max(1, size / 2);
  }
  return false;
}

}  // namespace

SceneLayout scene_layout(const ConditionSpec& cond, int frames, int height, int width, std::uint64_t seed) {
  if (height < 8 || width < 8) throw ContractError("scene needs H, W >= 8");
  if (frames < 1) throw ContractError("scene needs F >= 1");
  std::mt19937_64 rng = scene_rng(cond, seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SceneLayout L;
  L.size = std::max(2, std::min(height, width) / 4);
  const Palette pal = kPalettes[cond.palette % 4];
  L.bg_level = pal.bg;
  L.fg_level = pal.fg;
  L.bg_tilt_x = (unit(rng) - 0.5) * 0.16;
  L.bg_tilt_y = (unit(rng) - 0.5) * 0.16;
  L.bg_wave = unit(rng) * 0.05;
  L.bg_wave_phase = unit(rng) * 2.0 * std::numbers::pi;
  L.phase = unit(rng) * 2.0 * std::numbers::pi;

  const int travel = frames - 1;
  auto pick = [&](int lo, int hi) {
    if (hi < lo) return lo;
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  if (cond.motion == MotionKind::translate) {
    // Velocity in {-1, +1} per axis when the path fits, else 0.
    L.vx = (rng() & 1) ? 1 : -1;
    L.vy = static_cast<int>(rng() % 3) - 1;
    if (width - L.size - travel < 0) L.vx = 0;
    if (height - L.size - travel < 0) L.vy = 0;
    const int span_x = width - L.size - std::abs(L.vx) * travel;
    const int span_y = height - L.size - std::abs(L.vy) * travel;
    const int sx = pick(0, span_x);
    const int sy = pick(0, span_y);
    L.x0 = L.vx < 0 ? sx + travel : sx;
    L.y0 = L.vy < 0 ? sy + travel : sy;
  } else {
    L.x0 = pick(2, width - L.size - 2);
    L.y0 = pick(2, height - L.size - 2);
  }
  return L;
}

Clip gen_moving_scene(const ConditionSpec& cond, int frames, int height, int width, std::uint64_t seed,
                      const SceneOptions& opts) {
  if (frames < 2) throw ContractError("moving scenes need F >= 2");
  if (opts.channels < 1) throw ContractError("scene needs at least one channel");
  const SceneLayout L = scene_layout(cond, frames, height, width, seed);
  std::mt19937_64 rng = scene_rng(cond, seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> jitter(-opts.jitter, opts.jitter);

  Clip clip;
  clip.condition = cond.id;
  clip.seed = seed;
  clip.video = VideoTensor(frames, height, width, opts.channels, 0.0, opts.fps);
  clip.mask.assign(static_cast<std::size_t>(frames) * height * width, 0);

  const int C = opts.channels;
  for (int f = 0; f < frames; ++f) {
    int ox = L.x0, oy = L.y0, size = L.size;
    switch (cond.motion) {
      case MotionKind::translate:
        ox = L.x0 + L.vx * f;
        oy = L.y0 + L.vy * f;
        break;
      case MotionKind::oscillate:
        ox = L.x0 + static_cast<int>(std::lround(2.0 * std::sin(L.phase + 2.0 * std::numbers::pi * f / 6.0)));
        break;
      case MotionKind::grow: {
        size = std::min(L.size + f / 2, std::min(height, width) / 2);
        const int shift = (size - L.size) / 2;
        ox = std::max(0, L.x0 - shift);
        oy = std::max(0, L.y0 - shift);
        break;
      }
    }
    const double fg = L.fg_level + jitter(rng);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double u = static_cast<double>(x) / width;
        const double v = static_cast<double>(y) / height;
        double bg = L.bg_level + L.bg_tilt_x * (u - 0.5) + L.bg_tilt_y * (v - 0.5) +
                    L.bg_wave * std::sin(2.0 * std::numbers::pi * u + L.bg_wave_phase);
        const bool in = inside_shape(cond.shape, size, y - oy, x - ox);
        const bool edge = in && (!inside_shape(cond.shape, size, y - oy - 1, x - ox) ||
                                 !inside_shape(cond.shape, size, y - oy + 1, x - ox) ||
                                 !inside_shape(cond.shape, size, y - oy, x - ox - 1) ||
                                 !inside_shape(cond.shape, size, y - oy, x - ox + 1));
        double val = bg;
        if (in) {
          val = fg;
          if (edge) val += jitter(rng);
          clip.mask[(static_cast<std::size_t>(f) * height + y) * width + x] = 1;
        }
        for (int c = 0; c < C; ++c) {
          // Color channels tint the object and background differently.
          const double tint = C == 1 ? 0.0 : 0.1 * (static_cast<double>(c) / (C - 1) - 0.5) * (in ? 1.0 : -1.0);
          clip.video.at(f, y, x, c) = quantize(val + tint);
        }
      }
    }
  }
  return clip;
}

VideoTensor make_static_video(const VideoTensor& image, int frames) {
  if (frames < 1) throw ContractError("make_static_video: F must be >= 1");
  VideoTensor out(frames, image.height(), image.width(), image.channels(), 0.0, image.fps());
  const std::size_t fs = image.frame_size();
  for (int f = 0; f < frames; ++f) {
    std::copy_n(image.data().begin(), fs, out.data().begin() + static_cast<std::ptrdiff_t>(f * fs));
  }
  return out;
}

VideoTensor apply_style(const VideoTensor& clip, Style style) {
  VideoTensor out = clip;
  const int C = clip.channels();
  switch (style) {
    case Style::invert:
      for (double& v : out.data()) v = 1.0 - v;
      break;
    case Style::posterize:
      for (double& v : out.data()) v = std::round(std::clamp(v, 0.0, 1.0) * 3.0) / 3.0;
      break;
    case Style::grayscale:
      for (int f = 0; f < clip.frames(); ++f)
        for (int y = 0; y < clip.height(); ++y)
          for (int x = 0; x < clip.width(); ++x) {
            double acc = 0.0;
            for (int c = 0; c < C; ++c) acc += clip.at(f, y, x, c);
            const double g = acc / C;
            for (int c = 0; c < C; ++c) out.at(f, y, x, c) = g;
          }
      break;
    case Style::vignette: {
      const double cy = (clip.height() - 1) / 2.0, cx = (clip.width() - 1) / 2.0;
      const double rmax2 = cy * cy + cx * cx;
      for (int f = 0; f < clip.frames(); ++f)
        for (int y = 0; y < clip.height(); ++y)
          for (int x = 0; x < clip.width(); ++x) {
            const double r2 = rmax2 > 0 ? ((y - cy) * (y - cy) + (x - cx) * (x - cx)) / rmax2 : 0.0;
            for (int c = 0; c < C; ++c) out.at(f, y, x, c) = clip.at(f, y, x, c) * (1.0 - 0.6 * r2);
          }
      break;
    }
  }
  return out;
}

}  // namespace ufo
