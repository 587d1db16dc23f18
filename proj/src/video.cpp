// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ufo/video.hpp"

#include <algorithm>
#include <json.hpp>

#include "ufo/binary_io.hpp"
#include "ufo/errors.hpp"

namespace ufo {

VideoTensor::VideoTensor(int frames, int height, int width, int channels, double fill, double fps)
    : frames_(frames), height_(height), width_(width), channels_(channels), fps_(fps) {
  if (frames < 1 || height < 1 || width < 1 || channels < 1) {
    throw DimensionError("video extents must be positive, got " + std::to_string(frames) + "x" +
                         std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(channels));
  }
  data_.assign(static_cast<std::size_t>(frames) * height * width * channels, fill);
}

std::string VideoTensor::shape_string() const {
  return std::to_string(frames_) + "x" + std::to_string(height_) + "x" + std::to_string(width_) + "x" +
         std::to_string(channels_);
}

bool VideoTensor::in_unit_range() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

VideoTensor VideoTensor::frame(int f) const {
  if (f < 0 || f >= frames_) throw ContractError("frame index " + std::to_string(f) + " out of range");
  VideoTensor out(1, height_, width_, channels_, 0.0, fps_);
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(f * frame_size()), frame_size(), out.data_.begin());
  return out;
}

VideoTensor VideoTensor::clamped() const {
  VideoTensor out = *this;
  for (double& v : out.data_) v = std::clamp(v, 0.0, 1.0);
  return out;
}

std::vector<std::uint8_t> encode_vclip_payload(const VideoTensor& video) {
  io::ByteWriter w;
  for (double v : video.data()) w.f32(static_cast<float>(v));
  return std::move(w.buffer());
}

void write_vclip(const std::filesystem::path& path, const VideoTensor& video, const ClipTags& tags) {
  nlohmann::ordered_json side;
  side["F"] = video.frames();
  side["H"] = video.height();
  side["W"] = video.width();
  side["C"] = video.channels();
  side["fps"] = video.fps();
  side["dtype"] = "float32-le";
  if (!tags.empty()) side["tags"] = tags;
  io::write_file_atomic(path, encode_vclip_payload(video));
  std::filesystem::path sidecar = path;
  sidecar += ".json";
  io::write_file_atomic(sidecar, side.dump(2) + "\n");
}

VideoTensor read_vclip(const std::filesystem::path& path, ClipTags* tags) {
  std::filesystem::path sidecar = path;
  sidecar += ".json";
  const auto side_bytes = io::read_file(sidecar);
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(side_bytes.begin(), side_bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("bad .vclip sidecar " + sidecar.string() + ": " + e.what(), e.byte);
  }
  int F = 0, H = 0, W = 0, C = 0;
  double fps = 24.0;
  try {
    F = side.at("F").get<int>();
    H = side.at("H").get<int>();
    W = side.at("W").get<int>();
    C = side.at("C").get<int>();
    fps = side.value("fps", 24.0);
    if (tags && side.contains("tags")) *tags = side["tags"].get<ClipTags>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("incomplete .vclip sidecar " + sidecar.string() + ": " + e.what(), 0);
  }
  VideoTensor video(F, H, W, C, 0.0, fps);
  const auto payload = io::read_file(path);
  io::ByteReader r(payload);
  for (double& v : video.data()) v = r.f32("clip payload");
  if (r.remaining() != 0) throw FormatError("trailing bytes in " + path.string(), r.offset());
  return video;
}

}  // namespace ufo
