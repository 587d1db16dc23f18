// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef UFO_SYNTH_HPP
#define UFO_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ufo/video.hpp"

namespace ufo {

enum class ShapeKind { square, disk, bar };
enum class MotionKind { translate, oscillate, grow };
enum class Style { invert, posterize, grayscale, vignette };

std::string to_string(ShapeKind k);
std::string to_string(MotionKind k);
std::string to_string(Style s);
Style style_from_string(const std::string& name);

/// Stand-in for a text prompt: a condition id names what moves and how.
struct ConditionSpec {
  int id = 0;
  ShapeKind shape = ShapeKind::square;
  MotionKind motion = MotionKind::translate;
  int palette = 0;
};

inline constexpr int kMaxConditions = 32;

/// Deterministic id -> spec mapping; ids outside [0, num_conditions) raise
/// ConditionError.
ConditionSpec condition_spec(int id, int num_conditions = 16);

/// Where the object sits in each frame. Positions are integer pixel
/// coordinates of the object's top-left corner.
struct SceneLayout {
  int size = 4;
  int x0 = 0, y0 = 0;
  int vx = 0, vy = 0;  // translate: pixels per frame
  double phase = 0.0;  // oscillate
  double bg_level = 0.2, fg_level = 0.85;
  double bg_tilt_x = 0.0, bg_tilt_y = 0.0, bg_wave = 0.0, bg_wave_phase = 0.0;
};

SceneLayout scene_layout(const ConditionSpec& cond, int frames, int height, int width, std::uint64_t seed);

/// A generated clip plus the ground-truth object mask (F x H x W, 1 = object).
struct Clip {
  VideoTensor video;
  std::vector<std::uint8_t> mask;
  int condition = 0;
  std::uint64_t seed = 0;
};

struct SceneOptions {
  int channels = 1;
  double jitter = 0.05;
  double fps = 24.0;
};

/// Moving object over a smooth background. Values are multiples of 2^-16 in
/// [0, 1], so `invert` is an exact involution and float32 storage is lossless.
Clip gen_moving_scene(const ConditionSpec& cond, int frames, int height, int width, std::uint64_t seed,
                      const SceneOptions& opts = {});

/// Every frame equals `image` (a one-frame video).
VideoTensor make_static_video(const VideoTensor& image, int frames);

VideoTensor apply_style(const VideoTensor& clip, Style style);

}  // namespace ufo

#endif  // UFO_SYNTH_HPP
