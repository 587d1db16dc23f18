// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ufo/trainer.hpp"

#include <iomanip>
#include <sstream>

namespace ufo {

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("train config: " + m); };
  if (steps < 0) fail("steps must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(lr_peak > 0.0)) fail("lr_peak must be positive");
  if (warmup_steps < 0 || warmup_steps > std::max(steps, 0)) fail("warmup_steps must lie in [0, steps]");
  if (!(alpha_train > 0.0 && alpha_train <= 1.0)) fail("alpha_train must lie in (0, 1]");
  if (!(loss_lambda >= 0.0)) fail("loss_lambda must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    fail("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) fail("adam_eps must be positive");
}

double lr_schedule(long step, const TrainConfig& cfg) {
  if (step < 0) throw ContractError("lr_schedule: step must be >= 0");
  if (step == 0) return 0.0;
  if (step >= cfg.warmup_steps) return cfg.lr_peak;
  return cfg.lr_peak * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
}

std::string loss_csv(const std::vector<StepLog>& log) {
  std::ostringstream os;
  os << "step,loss_simple,loss_vlb,lr\n" << std::setprecision(17);
  for (const auto& e : log) os << e.step << ',' << e.loss_simple << ',' << e.loss_vlb << ',' << e.lr << '\n';
  return os.str();
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<StepLog>& log) {
  io::write_file_atomic(path, loss_csv(log));
}

namespace {

std::vector<int> condition_pool(const ModelConfig& model, const DataSpec& data) {
  std::vector<int> pool = data.conditions;
  if (pool.empty()) {
    for (int c = 0; c < model.num_conditions; ++c) pool.push_back(c);
  }
  for (int c : pool) condition_spec(c, model.num_conditions);
  return pool;
}

Clip draw_scene(const ModelConfig& model, const DataSpec& data, const std::vector<int>& pool, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  const int c = pool[pick(rng)];
  const std::uint64_t seed = rng();
  SceneOptions opts;
  opts.channels = model.channels;
  opts.jitter = data.jitter;
  return gen_moving_scene(condition_spec(c, model.num_conditions), model.frames, model.height, model.width, seed, opts);
}

}  // namespace

BatchSource moving_scene_source(const ModelConfig& model, const DataSpec& data) {
  const std::vector<int> pool = condition_pool(model, data);
  return [model, data, pool](std::mt19937_64& rng, int batch) {
    TrainingBatch out;
    for (int b = 0; b < batch; ++b) {
      Clip clip = draw_scene(model, data, pool, rng);
      out.clips.push_back(std::move(clip.video));
      out.conditions.push_back(clip.condition);
    }
    return out;
  };
}

BatchSource static_scene_source(const ModelConfig& model, const DataSpec& data) {
  const std::vector<int> pool = condition_pool(model, data);
  return [model, data, pool](std::mt19937_64& rng, int batch) {
    TrainingBatch out;
    std::uniform_int_distribution<int> pick_frame(0, model.frames - 1);
    for (int b = 0; b < batch; ++b) {
      Clip clip = draw_scene(model, data, pool, rng);
      out.clips.push_back(make_static_video(clip.video.frame(pick_frame(rng)), model.frames));
      out.conditions.push_back(clip.condition);
    }
    return out;
  };
}

BatchSource styled_scene_source(const ModelConfig& model, const DataSpec& data, Style style) {
  const std::vector<int> pool = condition_pool(model, data);
  return [model, data, pool, style](std::mt19937_64& rng, int batch) {
    TrainingBatch out;
    for (int b = 0; b < batch; ++b) {
      Clip clip = draw_scene(model, data, pool, rng);
      out.clips.push_back(apply_style(clip.video, style));
      out.conditions.push_back(clip.condition);
    }
    return out;
  };
}

}  // namespace ufo
