// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef UFO_VIDEO_HPP
#define UFO_VIDEO_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ufo {

/// Frame sequence of shape F x H x W x C, row-major. Also carries latents,
/// since the frame encoder is the identity.
class VideoTensor {
 public:
  VideoTensor() = default;
  VideoTensor(int frames, int height, int width, int channels, double fill = 0.0, double fps = 24.0);

  int frames() const noexcept { return frames_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  double fps() const noexcept { return fps_; }
  void set_fps(double fps) noexcept { fps_ = fps; }

  std::size_t size() const noexcept { return data_.size(); }
  std::size_t frame_size() const noexcept {
    return static_cast<std::size_t>(height_) * width_ * channels_;
  }

  double& at(int f, int y, int x, int c) { return data_[index(f, y, x, c)]; }
  double at(int f, int y, int x, int c) const { return data_[index(f, y, x, c)]; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const VideoTensor& other) const noexcept {
    return frames_ == other.frames_ && height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }
  std::string shape_string() const;

  /// True when every value lies in [0, 1].
  bool in_unit_range() const;
  /// Copy of frame f as a one-frame video.
  VideoTensor frame(int f) const;
  /// Values clamped into [0, 1].
  VideoTensor clamped() const;

  bool operator==(const VideoTensor& other) const = default;

 private:
  std::size_t index(int f, int y, int x, int c) const noexcept {
    return ((static_cast<std::size_t>(f) * height_ + y) * width_ + x) * channels_ + c;
  }

  int frames_ = 0;
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  double fps_ = 24.0;
  std::vector<double> data_;
};

/// Identity stand-in for a latent encoder: encode(V) == V and
/// decode(encode(V)) == V exactly.
struct FrameEncoder {
  VideoTensor encode(const VideoTensor& v) const { return v; }
  VideoTensor decode(const VideoTensor& z) const { return z; }
};

/// Free-form tags written to a clip's sidecar (condition, seed, alpha, ...).
using ClipTags = std::map<std::string, std::string>;

/// `path` holds the float32 little-endian payload; `path + ".json"` holds the
/// shape sidecar. Both are written atomically.
void write_vclip(const std::filesystem::path& path, const VideoTensor& video, const ClipTags& tags = {});
VideoTensor read_vclip(const std::filesystem::path& path, ClipTags* tags = nullptr);

/// Payload bytes for a clip (float32 LE, row-major F,H,W,C).
std::vector<std::uint8_t> encode_vclip_payload(const VideoTensor& video);

}  // namespace ufo

#endif  // UFO_VIDEO_HPP
