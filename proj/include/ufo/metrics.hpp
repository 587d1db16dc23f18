// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef UFO_METRICS_HPP
#define UFO_METRICS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ufo/video.hpp"

namespace ufo {

/// Mean over consecutive frame pairs of the mean absolute pixel difference.
double mean_interframe_abs_diff(const VideoTensor& v);

/// 1 - mean_interframe_abs_diff; 1.0 for a static clip. Needs F >= 2.
double temporal_flicker_score(const VideoTensor& v);

enum class Region { subject, background };

/// Block-level partition of the frame into subject and background.
struct RegionMask {
  int block = 4;
  int blocks_y = 0, blocks_x = 0;
  std::vector<std::uint8_t> subject;  // blocks_y * blocks_x, 1 = subject
};

/// A block is subject when any object pixel of any frame falls inside it.
RegionMask region_mask_from_pixels(const VideoTensor& v, std::span<const std::uint8_t> pixel_mask, int block = 4);

/// Fallback without ground truth: the top quartile of blocks by temporal
/// variance of their pooled value form the subject.
RegionMask region_mask_from_variance(const VideoTensor& v, int block = 4);

/// Mean cosine similarity between consecutive frames' pooled block features
/// restricted to `region`. Uses the variance heuristic when `mask` is null.
double consistency_score(const VideoTensor& v, Region region, const RegionMask* mask = nullptr);

struct FlowOptions {
  int block = 4;
  int radius = 3;
};

/// Block-matching flow between every consecutive pair of frames.
struct FlowField {
  int pairs = 0, blocks_y = 0, blocks_x = 0;
  std::vector<int> dx, dy;
  std::vector<double> magnitude;        // pixels, Euclidean
  std::vector<std::uint8_t> saturated;  // best match on the search boundary

  std::size_t index(int pair, int by, int bx) const {
    return (static_cast<std::size_t>(pair) * blocks_y + by) * blocks_x + bx;
  }
};

FlowField estimate_flow(const VideoTensor& v, const FlowOptions& opts = {});

/// Mean of the top 5% (rounded up) of `magnitudes`; 0 for an empty span.
double top_fraction_mean(std::span<const double> magnitudes);

/// Optical Flow Threshold statistic of a clip.
double oft(const VideoTensor& v, const FlowOptions& opts = {});

/// Near-static rule: treated OFT < 1 and base/treated > 1.5. A zero
/// treated OFT counts when the base OFT is positive.
bool is_excluded(double base_oft, double treated_oft);

struct ExclusionResult {
  std::vector<bool> flags;
  int count = 0;
};

ExclusionResult excluded_count(const std::vector<VideoTensor>& base, const std::vector<VideoTensor>& treated);
ExclusionResult excluded_count_from_oft(std::span<const double> base_oft, std::span<const double> treated_oft);

/// One clip to score, with the tags reported in metrics.csv.
struct EvalItem {
  VideoTensor video;
  std::string id;
  int condition = -1;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  std::optional<std::vector<std::uint8_t>> pixel_mask;
};

struct VideoMetrics {
  std::string id;
  int condition = -1;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  double flicker = 0.0;
  double subject_consistency = 0.0;
  double background_consistency = 0.0;
  double oft = 0.0;
  std::optional<bool> excluded;
};

struct MetricsAggregate {
  double flicker = 0.0;
  double subject_consistency = 0.0;
  double background_consistency = 0.0;
  double oft = 0.0;
};

/// Per-video proxies and their means. Flicker and the consistency scores are
/// pixel-space proxies, not learned quality predictors.
struct MetricsReport {
  std::vector<VideoMetrics> videos;
  std::optional<MetricsAggregate> aggregate;
  std::optional<int> excluded_count;
};

/// Scores every item; with `baselines` (index-aligned) also flags exclusions.
MetricsReport evaluate_set(const std::vector<EvalItem>& items, const std::vector<VideoTensor>* baselines = nullptr);

/// Header, one row per video, then an aggregate footer row when non-empty.
std::string to_csv(const MetricsReport& report);

}  // namespace ufo

#endif  // UFO_METRICS_HPP
