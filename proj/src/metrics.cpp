// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ufo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "ufo/errors.hpp"

namespace ufo {

namespace {

void require_frames(const VideoTensor& v, const char* what) {
  if (v.frames() < 2) throw ContractError(std::string(what) + " needs at least 2 frames, got " + std::to_string(v.frames()));
}

/// Mean over a (possibly partial) block, per channel.
double pooled(const VideoTensor& v, int f, int by, int bx, int c, int block) {
  const int y1 = std::min(v.height(), (by + 1) * block);
  const int x1 = std::min(v.width(), (bx + 1) * block);
  double acc = 0.0;
  int n = 0;
  for (int y = by * block; y < y1; ++y)
    for (int x = bx * block; x < x1; ++x) {
      acc += v.at(f, y, x, c);
      ++n;
    }
  return acc / n;
}

int blocks_along(int extent, int block) { return (extent + block - 1) / block; }

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace

double mean_interframe_abs_diff(const VideoTensor& v) {
  require_frames(v, "mean_interframe_abs_diff");
  const std::size_t fs = v.frame_size();
  const auto& d = v.data();
  double total = 0.0;
  for (int f = 0; f + 1 < v.frames(); ++f) {
    double pair = 0.0;
    const std::size_t a = static_cast<std::size_t>(f) * fs, b = a + fs;
    for (std::size_t i = 0; i < fs; ++i) pair += std::abs(d[b + i] - d[a + i]);
    total += pair / static_cast<double>(fs);
  }
  return total / (v.frames() - 1);
}

double temporal_flicker_score(const VideoTensor& v) { return 1.0 - mean_interframe_abs_diff(v); }

RegionMask region_mask_from_pixels(const VideoTensor& v, std::span<const std::uint8_t> pixel_mask, int block) {
  const std::size_t expected = static_cast<std::size_t>(v.frames()) * v.height() * v.width();
  if (pixel_mask.size() != expected) {
    throw DimensionError("pixel mask has " + std::to_string(pixel_mask.size()) + " entries, clip needs " +
                         std::to_string(expected));
  }
  RegionMask m;
  m.block = block;
  m.blocks_y = blocks_along(v.height(), block);
  m.blocks_x = blocks_along(v.width(), block);
  m.subject.assign(static_cast<std::size_t>(m.blocks_y) * m.blocks_x, 0);
  for (int f = 0; f < v.frames(); ++f)
    for (int y = 0; y < v.height(); ++y)
      for (int x = 0; x < v.width(); ++x) {
        if (pixel_mask[(static_cast<std::size_t>(f) * v.height() + y) * v.width() + x]) {
          m.subject[static_cast<std::size_t>(y / block) * m.blocks_x + x / block] = 1;
        }
      }
  return m;
}

RegionMask region_mask_from_variance(const VideoTensor& v, int block) {
  RegionMask m;
  m.block = block;
  m.blocks_y = blocks_along(v.height(), block);
  m.blocks_x = blocks_along(v.width(), block);
  const int nb = m.blocks_y * m.blocks_x;
  std::vector<double> variance(static_cast<std::size_t>(nb), 0.0);
  for (int by = 0; by < m.blocks_y; ++by)
    for (int bx = 0; bx < m.blocks_x; ++bx) {
      double acc = 0.0;
      for (int c = 0; c < v.channels(); ++c) {
        double mean = 0.0;
        std::vector<double> vals(static_cast<std::size_t>(v.frames()));
        for (int f = 0; f < v.frames(); ++f) {
          vals[static_cast<std::size_t>(f)] = pooled(v, f, by, bx, c, block);
          mean += vals[static_cast<std::size_t>(f)];
        }
        mean /= v.frames();
        double var = 0.0;
        for (double x : vals) var += (x - mean) * (x - mean);
        acc += var / v.frames();
      }
      variance[static_cast<std::size_t>(by * m.blocks_x + bx)] = acc / v.channels();
    }
  std::vector<int> order(static_cast<std::size_t>(nb));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return variance[a] > variance[b]; });
  const int k = (nb + 3) / 4;
  m.subject.assign(static_cast<std::size_t>(nb), 0);
  for (int i = 0; i < k; ++i) m.subject[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
  return m;
}

double consistency_score(const VideoTensor& v, Region region, const RegionMask* mask) {
  require_frames(v, "consistency_score");
  RegionMask fallback;
  if (!mask) {
    fallback = region_mask_from_variance(v);
    mask = &fallback;
  }
  if (mask->blocks_y != blocks_along(v.height(), mask->block) || mask->blocks_x != blocks_along(v.width(), mask->block)) {
    throw DimensionError("region mask does not match clip " + v.shape_string());
  }
  const std::uint8_t want = region == Region::subject ? 1 : 0;
  std::vector<std::pair<int, int>> blocks;
  for (int by = 0; by < mask->blocks_y; ++by)
    for (int bx = 0; bx < mask->blocks_x; ++bx)
      if (mask->subject[static_cast<std::size_t>(by * mask->blocks_x + bx)] == want) blocks.emplace_back(by, bx);
  if (blocks.empty()) {
    throw MetricError(std::string("empty ") + (region == Region::subject ? "subject" : "background") + " region");
  }
  auto features = [&](int f) {
    std::vector<double> out;
    out.reserve(blocks.size() * static_cast<std::size_t>(v.channels()));
    for (auto [by, bx] : blocks)
      for (int c = 0; c < v.channels(); ++c) out.push_back(pooled(v, f, by, bx, c, mask->block));
    return out;
  };
  double total = 0.0;
  std::vector<double> prev = features(0);
  for (int f = 1; f < v.frames(); ++f) {
    std::vector<double> cur = features(f);
    total += cosine(prev, cur);
    prev = std::move(cur);
  }
  return total / (v.frames() - 1);
}

FlowField estimate_flow(const VideoTensor& v, const FlowOptions& opts) {
  require_frames(v, "estimate_flow");
  const int B = opts.block, R = opts.radius;
  if (B < 1 || R < 0) throw ContractError("flow block must be >= 1 and radius >= 0");
  if (v.height() < B || v.width() < B) {
    throw ContractError("frame " + std::to_string(v.height()) + "x" + std::to_string(v.width()) +
                        " is smaller than one " + std::to_string(B) + "x" + std::to_string(B) + " block");
  }
  FlowField flow;
  flow.pairs = v.frames() - 1;
  flow.blocks_y = v.height() / B;
  flow.blocks_x = v.width() / B;
  const std::size_t n = static_cast<std::size_t>(flow.pairs) * flow.blocks_y * flow.blocks_x;
  flow.dx.assign(n, 0);
  flow.dy.assign(n, 0);
  flow.magnitude.assign(n, 0.0);
  flow.saturated.assign(n, 0);
  for (int p = 0; p < flow.pairs; ++p)
    for (int by = 0; by < flow.blocks_y; ++by)
      for (int bx = 0; bx < flow.blocks_x; ++bx) {
        const int y0 = by * B, x0 = bx * B;
        double best = std::numeric_limits<double>::infinity();
        int best_dx = 0, best_dy = 0;
        for (int dy = -R; dy <= R; ++dy)
          for (int dx = -R; dx <= R; ++dx) {
            if (y0 + dy < 0 || x0 + dx < 0 || y0 + dy + B > v.height() || x0 + dx + B > v.width()) continue;
            double sad = 0.0;
            for (int i = 0; i < B; ++i)
              for (int j = 0; j < B; ++j)
                for (int c = 0; c < v.channels(); ++c)
                  sad += std::abs(v.at(p + 1, y0 + dy + i, x0 + dx + j, c) - v.at(p, y0 + i, x0 + j, c));
            const int mag2 = dx * dx + dy * dy;
            const int best2 = best_dx * best_dx + best_dy * best_dy;
            if (sad < best || (sad == best && mag2 < best2)) {
              best = sad;
              best_dx = dx;
              best_dy = dy;
            }
          }
        const std::size_t k = flow.index(p, by, bx);
        flow.dx[k] = best_dx;
        flow.dy[k] = best_dy;
        flow.magnitude[k] = std::sqrt(static_cast<double>(best_dx * best_dx + best_dy * best_dy));
        flow.saturated[k] = (R > 0 && (std::abs(best_dx) == R || std::abs(best_dy) == R)) ? 1 : 0;
      }
  return flow;
}

double top_fraction_mean(std::span<const double> magnitudes) {
  if (magnitudes.empty()) return 0.0;
  std::vector<double> sorted(magnitudes.begin(), magnitudes.end());
  const std::size_t k = (5 * sorted.size() + 99) / 100;
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end(), std::greater<>());
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += sorted[i];
  return acc / static_cast<double>(k);
}

double oft(const VideoTensor& v, const FlowOptions& opts) {
  const FlowField flow = estimate_flow(v, opts);
  return top_fraction_mean(flow.magnitude);
}

bool is_excluded(double base_oft, double treated_oft) {
  if (!(treated_oft < 1.0)) return false;
  if (treated_oft == 0.0) return base_oft > 0.0;
  return base_oft / treated_oft > 1.5;
}

ExclusionResult excluded_count_from_oft(std::span<const double> base_oft, std::span<const double> treated_oft) {
  if (base_oft.size() != treated_oft.size()) {
    throw ContractError("excluded_count: " + std::to_string(base_oft.size()) + " baselines vs " +
                        std::to_string(treated_oft.size()) + " treated clips");
  }
  ExclusionResult r;
  r.flags.resize(base_oft.size());
  for (std::size_t i = 0; i < base_oft.size(); ++i) {
    r.flags[i] = is_excluded(base_oft[i], treated_oft[i]);
    r.count += r.flags[i] ? 1 : 0;
  }
  return r;
}

ExclusionResult excluded_count(const std::vector<VideoTensor>& base, const std::vector<VideoTensor>& treated) {
  if (base.size() != treated.size()) {
    throw ContractError("excluded_count: " + std::to_string(base.size()) + " baselines vs " +
                        std::to_string(treated.size()) + " treated clips");
  }
  std::vector<double> b, t;
  for (const auto& v : base) b.push_back(oft(v));
  for (const auto& v : treated) t.push_back(oft(v));
  return excluded_count_from_oft(b, t);
}

MetricsReport evaluate_set(const std::vector<EvalItem>& items, const std::vector<VideoTensor>* baselines) {
  if (baselines && baselines->size() != items.size()) {
    throw ContractError("evaluate_set: " + std::to_string(items.size()) + " videos but " +
                        std::to_string(baselines->size()) + " baselines");
  }
  MetricsReport report;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const EvalItem& it = items[i];
    VideoMetrics m;
    m.id = it.id;
    m.condition = it.condition;
    m.seed = it.seed;
    m.alpha = it.alpha;
    m.flicker = temporal_flicker_score(it.video);
    RegionMask mask = it.pixel_mask ? region_mask_from_pixels(it.video, *it.pixel_mask)
                                    : region_mask_from_variance(it.video);
    m.subject_consistency = consistency_score(it.video, Region::subject, &mask);
    m.background_consistency = consistency_score(it.video, Region::background, &mask);
    m.oft = oft(it.video);
    if (baselines) m.excluded = is_excluded(oft((*baselines)[i]), m.oft);
    report.videos.push_back(std::move(m));
  }
  if (!report.videos.empty()) {
    MetricsAggregate agg;
    for (const auto& m : report.videos) {
      agg.flicker += m.flicker;
      agg.subject_consistency += m.subject_consistency;
      agg.background_consistency += m.background_consistency;
      agg.oft += m.oft;
    }
    const double n = static_cast<double>(report.videos.size());
    agg.flicker /= n;
    agg.subject_consistency /= n;
    agg.background_consistency /= n;
    agg.oft /= n;
    report.aggregate = agg;
  }
  if (baselines) {
    int ec = 0;
    for (const auto& m : report.videos) ec += *m.excluded ? 1 : 0;
    report.excluded_count = ec;
  }
  return report;
}

std::string to_csv(const MetricsReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "id,condition,seed,alpha,flicker,sc,bc,oft,excluded\n";
  for (const auto& m : report.videos) {
    os << m.id << ',' << m.condition << ',' << m.seed << ',' << m.alpha << ',' << m.flicker << ','
       << m.subject_consistency << ',' << m.background_consistency << ',' << m.oft << ',';
    if (m.excluded) os << (*m.excluded ? 1 : 0);
    os << '\n';
  }
  if (report.aggregate) {
    const auto& a = *report.aggregate;
    os << "mean,,,," << a.flicker << ',' << a.subject_consistency << ',' << a.background_consistency << ','
       << a.oft << ',';
    if (report.excluded_count) os << *report.excluded_count;
    os << '\n';
  }
  return os.str();
}

}  // namespace ufo
