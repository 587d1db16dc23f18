// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef UFO_CONFIG_HPP
#define UFO_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ufo/adapter.hpp"
#include "ufo/model.hpp"
#include "ufo/synth.hpp"
#include "ufo/trainer.hpp"

namespace ufo {

/// Video shape and the conditions training draws from.
struct DataConfig {
  int frames = 8;
  int height = 16;
  int width = 16;
  int channels = 1;
  std::vector<int> conditions;  // empty: all ids
  double jitter = 0.05;
};

struct EvalConfig {
  std::vector<double> alphas{0.0, 0.1, 0.2};
  std::vector<std::uint64_t> seeds{0};
  std::vector<int> conditions;  // empty: all ids
  int videos = 32;              // clips per alpha, cycling conditions and seeds
  int sampling_steps = 30;
};

struct PathsConfig {
  std::filesystem::path checkpoints = "checkpoints";
  std::filesystem::path reports = "reports";
};

/// Adapter construction plus the training overrides that differ from the
/// base run.
struct UfoConfig {
  int d = 4;
  std::uint64_t init_seed = 0;
  Style style = Style::invert;
  TrainConfig train;
};

/// One experiment. Model extents (F, H, W, C) come from the data section.
struct ExperimentConfig {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
  EvalConfig eval;
  PathsConfig paths;
  UfoConfig ufo;

  DataSpec data_spec() const { return {data.conditions, data.jitter}; }
};

/// Root for relative output paths: $UFO_OUTPUT_ROOT when set, else the
/// current directory.
std::filesystem::path output_root();

/// Parses YAML text against the strict schema. Unknown keys, wrong types and
/// out-of-range values raise ConfigError naming the key path and the line.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");

/// Reads and parses a file, resolves relative paths against output_root()
/// and creates the checkpoint and report directories.
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace ufo

#endif  // UFO_CONFIG_HPP
