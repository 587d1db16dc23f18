// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef UFO_EXPERIMENT_HPP
#define UFO_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ufo/binary_io.hpp"
#include "ufo/diffusion.hpp"
#include "ufo/metrics.hpp"

namespace ufo {

/// One generation of a matched-seed grid.
struct GridPoint {
  int condition = 0;
  std::uint64_t seed = 0;
};

/// Cross product of seeds (outer) and conditions (inner), truncated to
/// `limit` points when positive. Every alpha of a sweep reuses it unchanged.
std::vector<GridPoint> matched_grid(std::span<const int> conditions, std::span<const std::uint64_t> seeds, int limit = 0);

/// All condition ids of a model, in order.
std::vector<int> all_conditions(int num_conditions);

/// Samples every grid point with the given adapters, in batches.
template <typename Scalar>
std::vector<VideoTensor> generate_grid(const ModelGraph<Scalar>& model, std::span<const AppliedAdapter<Scalar>> adapters,
                                       std::span<const GridPoint> grid, int steps, int batch = 8) {
  const NoiseSchedule sched = make_schedule(model.config().timesteps, model.config().schedule);
  std::vector<VideoTensor> out;
  out.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); i += static_cast<std::size_t>(batch)) {
    std::vector<int> conds;
    std::vector<std::uint64_t> seeds;
    for (std::size_t j = i; j < std::min(grid.size(), i + static_cast<std::size_t>(batch)); ++j) {
      conds.push_back(grid[j].condition);
      seeds.push_back(grid[j].seed);
    }
    for (auto& v : sample_batch<Scalar>(model, conds, seeds, adapters, steps, sched)) out.push_back(std::move(v));
  }
  return out;
}

/// Aggregate row of a sweep at one intensity.
struct SweepRow {
  double alpha = 0.0;
  int videos = 0;
  double flicker = 0.0;
  double subject_consistency = 0.0;
  double background_consistency = 0.0;
  double oft = 0.0;
  int excluded_count = 0;
  double mean_abs_diff = 0.0;
};

/// Scores clips generated at `alpha` against the alpha = 0 clips of the same
/// grid.
MetricsReport score_grid(const std::vector<VideoTensor>& clips, const std::vector<VideoTensor>& baseline,
                         std::span<const GridPoint> grid, double alpha);

SweepRow summarize(const MetricsReport& report, const std::vector<VideoTensor>& clips, double alpha);

std::string sweep_summary_csv(const std::vector<SweepRow>& rows);

/// Generates the grid at every alpha (alpha = 0 always runs first as the
/// baseline), scores each set, and when `out_dir` is given writes
/// `alpha_<a>/metrics.csv`, the clips, and `summary.csv`.
template <typename Scalar>
std::vector<SweepRow> run_sweep(const ModelGraph<Scalar>& model, const UfoAdapterSet<Scalar>& set,
                                std::span<const double> alphas, std::span<const GridPoint> grid, int steps,
                                const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                                bool write_clips = true);

void write_sweep_outputs(const std::filesystem::path& dir, double alpha, const MetricsReport& report,
                         const std::vector<VideoTensor>& clips, std::span<const GridPoint> grid, bool write_clips);

/// Directory name for one intensity, e.g. "alpha_0.1".
std::string alpha_dir_name(double alpha);

template <typename Scalar>
std::vector<SweepRow> run_sweep(const ModelGraph<Scalar>& model, const UfoAdapterSet<Scalar>& set,
                                std::span<const double> alphas, std::span<const GridPoint> grid, int steps,
                                const std::optional<std::filesystem::path>& out_dir, bool write_clips) {
  model.check_compatible(set);
  const std::vector<VideoTensor> baseline = generate_grid<Scalar>(model, {}, grid, steps);
  std::vector<SweepRow> rows;
  for (double alpha : alphas) {
    const AppliedAdapter<Scalar> applied{&set, alpha};
    const std::vector<VideoTensor> clips =
        alpha == 0.0 ? baseline : generate_grid<Scalar>(model, std::span(&applied, 1), grid, steps);
    const MetricsReport report = score_grid(clips, baseline, grid, alpha);
    rows.push_back(summarize(report, clips, alpha));
    if (out_dir) write_sweep_outputs(*out_dir, alpha, report, clips, grid, write_clips);
  }
  if (out_dir) io::write_file_atomic(*out_dir / "summary.csv", sweep_summary_csv(rows));
  return rows;
}

}  // namespace ufo

#endif  // UFO_EXPERIMENT_HPP
