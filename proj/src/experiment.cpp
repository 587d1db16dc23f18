// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ufo/experiment.hpp"

#include <iomanip>
#include <sstream>

#include "ufo/binary_io.hpp"
#include "ufo/errors.hpp"

namespace ufo {

std::vector<GridPoint> matched_grid(std::span<const int> conditions, std::span<const std::uint64_t> seeds, int limit) {
  if (conditions.empty() || seeds.empty()) throw ContractError("matched_grid: need at least one condition and one seed");
  std::vector<GridPoint> grid;
  for (std::uint64_t s : seeds)
    for (int c : conditions) grid.push_back({c, s});
  if (limit > 0 && static_cast<std::size_t>(limit) < grid.size()) grid.resize(static_cast<std::size_t>(limit));
  return grid;
}

std::vector<int> all_conditions(int num_conditions) {
  std::vector<int> ids;
  for (int c = 0; c < num_conditions; ++c) ids.push_back(c);
  return ids;
}

MetricsReport score_grid(const std::vector<VideoTensor>& clips, const std::vector<VideoTensor>& baseline,
                         std::span<const GridPoint> grid, double alpha) {
  if (clips.size() != grid.size() || baseline.size() != grid.size()) {
    throw ContractError("score_grid: clips, baselines and grid must align");
  }
  std::vector<EvalItem> items;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    items.push_back({clips[i], "clip" + std::to_string(i), grid[i].condition, grid[i].seed, alpha, std::nullopt});
  }
  return evaluate_set(items, &baseline);
}

SweepRow summarize(const MetricsReport& report, const std::vector<VideoTensor>& clips, double alpha) {
  SweepRow row;
  row.alpha = alpha;
  row.videos = static_cast<int>(report.videos.size());
  if (report.aggregate) {
    row.flicker = report.aggregate->flicker;
    row.subject_consistency = report.aggregate->subject_consistency;
    row.background_consistency = report.aggregate->background_consistency;
    row.oft = report.aggregate->oft;
  }
  row.excluded_count = report.excluded_count.value_or(0);
  double diff = 0.0;
  for (const auto& v : clips) diff += mean_interframe_abs_diff(v);
  row.mean_abs_diff = clips.empty() ? 0.0 : diff / static_cast<double>(clips.size());
  return row;
}

std::string sweep_summary_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << std::setprecision(17) << "alpha,videos,flicker,sc,bc,oft,ec,mean_abs_diff\n";
  for (const auto& r : rows) {
    os << r.alpha << ',' << r.videos << ',' << r.flicker << ',' << r.subject_consistency << ','
       << r.background_consistency << ',' << r.oft << ',' << r.excluded_count << ',' << r.mean_abs_diff << '\n';
  }
  return os.str();
}

std::string alpha_dir_name(double alpha) {
  std::ostringstream os;
  os << "alpha_" << alpha;
  return os.str();
}

void write_sweep_outputs(const std::filesystem::path& dir, double alpha, const MetricsReport& report,
                         const std::vector<VideoTensor>& clips, std::span<const GridPoint> grid, bool write_clips) {
  const auto sub = dir / alpha_dir_name(alpha);
  std::filesystem::create_directories(sub);
  io::write_file_atomic(sub / "metrics.csv", to_csv(report));
  if (!write_clips) return;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    std::ostringstream name;
    name << "clip" << std::setw(4) << std::setfill('0') << i << ".vclip";
    write_vclip(sub / name.str(), clips[i],
                {{"condition", std::to_string(grid[i].condition)},
                 {"seed", std::to_string(grid[i].seed)},
                 {"alpha", std::to_string(alpha)}});
  }
}

}  // namespace ufo
