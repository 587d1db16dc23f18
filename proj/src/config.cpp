// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ufo/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <set>
#include <utility>

#include "ufo/binary_io.hpp"
#include "ufo/errors.hpp"

namespace ufo {

namespace {

[[noreturn]] void fail_at(const std::string& source, const YAML::Mark& mark, const std::string& what) {
  std::string where = source;
  if (!mark.is_null()) where += ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1);
  throw ConfigError(where + ": " + what);
}

/// One mapping of the document. Every key read through `get` is recorded;
/// `finish` rejects the rest.
class Section {
 public:
  Section(YAML::Node node, std::string path, const std::string& source)
      : node_(std::move(node)), path_(std::move(path)), source_(source) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) fail_at(source_, node_.Mark(), "'" + path_ + "' must be a mapping");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    known_.insert(key);
    if (!node_ || node_.IsNull()) return;
    const YAML::Node v = std::as_const(node_)[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      fail_at(source_, v.Mark(), "'" + qualified(key) + "' has the wrong type");
    }
  }

  YAML::Node child(const std::string& key) {
    known_.insert(key);
    if (!node_ || node_.IsNull()) return YAML::Node();
    return std::as_const(node_)[key];
  }

  YAML::Mark mark(const std::string& key) const {
    if (!key.empty() && node_ && node_.IsMap() && std::as_const(node_)[key]) return std::as_const(node_)[key].Mark();
    return node_ ? node_.Mark() : YAML::Mark::null_mark();
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    fail_at(source_, mark(key), "'" + qualified(key) + "' " + what);
  }

  void finish() const {
    if (!node_ || node_.IsNull()) return;
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!known_.count(key)) fail_at(source_, kv.first.Mark(), "unknown key '" + qualified(key) + "'");
    }
  }

  std::string qualified(const std::string& key) const {
    if (key.empty()) return path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  YAML::Node node_;
  std::string path_;
  const std::string& source_;
  std::set<std::string> known_;
};

void read_train(Section& s, TrainConfig& t) {
  s.get("steps", t.steps);
  s.get("batch_size", t.batch_size);
  s.get("lr_peak", t.lr_peak);
  s.get("warmup_steps", t.warmup_steps);
  s.get("alpha_train", t.alpha_train);
  s.get("loss_lambda", t.loss_lambda);
  s.get("seed", t.seed);
  s.get("adam_beta1", t.adam_beta1);
  s.get("adam_beta2", t.adam_beta2);
  s.get("adam_eps", t.adam_eps);
  s.finish();
  try {
    t.validate();
  } catch (const ConfigError& e) {
    s.fail("", std::string("is invalid: ") + e.what());
  }
}

}  // namespace

std::filesystem::path output_root() {
  if (const char* env = std::getenv("UFO_OUTPUT_ROOT"); env && *env) return env;
  return std::filesystem::current_path();
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    fail_at(source, e.mark, "malformed YAML: " + e.msg);
  }
  ExperimentConfig cfg;
  Section top(root, "", source);

  Section data(top.child("data"), "data", source);
  data.get("frames", cfg.data.frames);
  data.get("height", cfg.data.height);
  data.get("width", cfg.data.width);
  data.get("channels", cfg.data.channels);
  data.get("conditions", cfg.data.conditions);
  data.get("jitter", cfg.data.jitter);
  data.finish();
  if (!(cfg.data.jitter >= 0.0)) data.fail("jitter", "must be >= 0");

  Section model(top.child("model"), "model", source);
  ModelConfig& m = cfg.model;
  model.get("patch", m.patch);
  model.get("hidden", m.hidden);
  model.get("blocks", m.blocks);
  model.get("heads", m.heads);
  model.get("mlp_ratio", m.mlp_ratio);
  model.get("num_conditions", m.num_conditions);
  model.get("timesteps", m.timesteps);
  std::string schedule = to_string(m.schedule);
  model.get("schedule", schedule);
  model.get("init_seed", m.init_seed);
  model.finish();
  if (schedule == "cosine") {
    m.schedule = ScheduleKind::cosine;
  } else if (schedule == "linear") {
    m.schedule = ScheduleKind::linear;
  } else {
    model.fail("schedule", "must be 'cosine' or 'linear', got '" + schedule + "'");
  }
  m.frames = cfg.data.frames;
  m.height = cfg.data.height;
  m.width = cfg.data.width;
  m.channels = cfg.data.channels;
  try {
    m.validate();
    if (m.height < 8 || m.width < 8) throw ContractError("synthetic scenes need height and width >= 8");
  } catch (const ContractError& e) {
    model.fail("", std::string("is invalid: ") + e.what());
  }
  for (int c : cfg.data.conditions) {
    if (c < 0 || c >= m.num_conditions) data.fail("conditions", "lists id " + std::to_string(c) + " outside the model");
  }

  Section train(top.child("train"), "train", source);
  read_train(train, cfg.train);

  Section eval(top.child("eval"), "eval", source);
  eval.get("alphas", cfg.eval.alphas);
  eval.get("seeds", cfg.eval.seeds);
  eval.get("conditions", cfg.eval.conditions);
  eval.get("videos", cfg.eval.videos);
  eval.get("sampling_steps", cfg.eval.sampling_steps);
  eval.finish();
  for (double a : cfg.eval.alphas) {
    if (!(a >= 0.0)) eval.fail("alphas", "must be >= 0");
  }
  if (cfg.eval.seeds.empty()) eval.fail("seeds", "must not be empty");
  if (cfg.eval.videos < 1) eval.fail("videos", "must be >= 1");
  if (cfg.eval.sampling_steps < 1 || cfg.eval.sampling_steps > m.timesteps) {
    eval.fail("sampling_steps", "must lie in 1..model.timesteps");
  }
  for (int c : cfg.eval.conditions) {
    if (c < 0 || c >= m.num_conditions) eval.fail("conditions", "lists id " + std::to_string(c) + " outside the model");
  }

  Section paths(top.child("paths"), "paths", source);
  std::string ckpt = cfg.paths.checkpoints.string(), reports = cfg.paths.reports.string();
  paths.get("checkpoints", ckpt);
  paths.get("reports", reports);
  paths.finish();
  if (ckpt.empty()) paths.fail("checkpoints", "must not be empty");
  if (reports.empty()) paths.fail("reports", "must not be empty");
  cfg.paths.checkpoints = ckpt;
  cfg.paths.reports = reports;

  Section ufo(top.child("ufo"), "ufo", source);
  ufo.get("d", cfg.ufo.d);
  ufo.get("init_seed", cfg.ufo.init_seed);
  std::string style = to_string(cfg.ufo.style);
  ufo.get("style", style);
  Section ufo_train(ufo.child("train"), "ufo.train", source);
  read_train(ufo_train, cfg.ufo.train);
  ufo.finish();
  if (cfg.ufo.d < 1) ufo.fail("d", "must be >= 1");
  try {
    cfg.ufo.style = style_from_string(style);
  } catch (const ConditionError& e) {
    ufo.fail("style", e.what());
  }

  top.finish();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = io::read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  ExperimentConfig cfg = parse_config(std::string(bytes.begin(), bytes.end()), path.string());
  const auto root = output_root();
  for (auto* p : {&cfg.paths.checkpoints, &cfg.paths.reports}) {
    if (p->is_relative()) *p = root / *p;
    std::error_code ec;
    std::filesystem::create_directories(*p, ec);
    if (ec) throw ConfigError(path.string() + ": cannot create '" + p->string() + "': " + ec.message());
  }
  return cfg;
}

}  // namespace ufo
