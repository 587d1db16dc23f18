// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef UFO_TRAINER_HPP
#define UFO_TRAINER_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ufo/binary_io.hpp"
#include "ufo/diffusion.hpp"
#include "ufo/injection.hpp"
#include "ufo/model.hpp"
#include "ufo/synth.hpp"

namespace ufo {

struct TrainConfig {
  int steps = 3000;
  int batch_size = 8;
  double lr_peak = 2e-4;
  int warmup_steps = 500;
  double alpha_train = 1.0;
  double loss_lambda = 1e-3;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

/// 0 at step 0, lr_peak * step / warmup_steps during warm-up, lr_peak after.
double lr_schedule(long step, const TrainConfig& cfg);

struct StepLog {
  long step = 0;
  double loss_simple = 0.0;
  double loss_vlb = 0.0;
  double lr = 0.0;
};

/// CSV with header `step,loss_simple,loss_vlb,lr`, one row per step.
std::string loss_csv(const std::vector<StepLog>& log);
void write_loss_csv(const std::filesystem::path& path, const std::vector<StepLog>& log);

/// Clips (already in latent space) with one condition id each.
struct TrainingBatch {
  std::vector<VideoTensor> clips;
  std::vector<int> conditions;
};

/// Produces the batch for a step, drawing any randomness from `rng`.
using BatchSource = std::function<TrainingBatch(std::mt19937_64& rng, int batch_size)>;

/// Which synthetic scenes a source draws from.
struct DataSpec {
  std::vector<int> conditions;  // empty: every id below the model's num_conditions
  double jitter = 0.05;
};

/// Moving scenes for base pretraining.
BatchSource moving_scene_source(const ModelConfig& model, const DataSpec& data);
/// Single frames of moving scenes, duplicated across all F frames.
BatchSource static_scene_source(const ModelConfig& model, const DataSpec& data);
/// Moving scenes passed through a fixed style.
BatchSource styled_scene_source(const ModelConfig& model, const DataSpec& data, Style style);

/// Adam over a fixed list of tensors. Gradients are consumed and cleared by
/// `step`.
template <typename Scalar>
class Adam {
 public:
  Adam(std::vector<Tensor<Scalar>*> params, double beta1, double beta2, double eps)
      : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const Tensor<Scalar>* p : params_) {
      m_.push_back(Matrix<Scalar>::Zero(p->rows(), p->cols()));
      v_.push_back(Matrix<Scalar>::Zero(p->rows(), p->cols()));
    }
  }

  void step(double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const Scalar b1 = static_cast<Scalar>(beta1_), b2 = static_cast<Scalar>(beta2_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor<Scalar>& p = *params_[i];
      if (!p.grad()) continue;
      const Matrix<Scalar>& g = *p.grad();
      m_[i] = b1 * m_[i] + (Scalar(1) - b1) * g;
      v_[i] = b2 * v_[i] + (Scalar(1) - b2) * g.cwiseProduct(g);
      const auto mhat = m_[i].array() / static_cast<Scalar>(c1);
      const auto vhat = v_[i].array() / static_cast<Scalar>(c2);
      p.matrix().array() -= static_cast<Scalar>(lr) * mhat / (vhat.sqrt() + static_cast<Scalar>(eps_));
      p.zero_grad();
    }
  }

  long steps_taken() const noexcept { return t_; }

 private:
  std::vector<Tensor<Scalar>*> params_;
  std::vector<Matrix<Scalar>> m_, v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

/// Per-tensor checksums of the base model taken when armed. `check` throws
/// FreezeViolation naming the first tensor whose bytes changed.
template <typename Scalar>
class FreezeGuard {
 public:
  explicit FreezeGuard(const ModelGraph<Scalar>& model) : model_(&model) {
    for (const auto& [name, t] : model.parameters()) sums_.emplace_back(name, checksum(*t));
  }

  void check(long step = -1) const {
    const auto params = model_->parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (checksum(*params[i].second) != sums_[i].second) {
        throw FreezeViolation("frozen base parameter '" + params[i].first + "' changed" +
                              (step >= 0 ? " at step " + std::to_string(step) : std::string()));
      }
    }
  }

  std::uint64_t combined() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [name, s] : sums_) h = io::fnv1a64(name + ":" + std::to_string(s) + ";", h);
    return h;
  }

 private:
  static std::uint64_t checksum(const Tensor<Scalar>& t) {
    return io::fnv1a64(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(t.data()),
                                                     static_cast<std::size_t>(t.size()) * sizeof(Scalar)));
  }

  const ModelGraph<Scalar>* model_;
  std::vector<std::pair<std::string, std::uint64_t>> sums_;
};

/// Called after every optimizer step with the step's log entry.
using StepCallback = std::function<void(const StepLog&)>;

namespace detail {

/// One run of L_simple + lambda L_vlb. The optimizer updates `trainable`
/// only; when `guard` is set the frozen base is checked after every step.
template <typename Scalar>
std::vector<StepLog> train_loop(const ModelGraph<Scalar>& model, const UfoAdapterSet<Scalar>* set,
                                std::vector<Tensor<Scalar>*> trainable, const TrainConfig& cfg,
                                const BatchSource& source, const FreezeGuard<Scalar>* guard,
                                const StepCallback& on_step) {
  cfg.validate();
  const ModelConfig& mc = model.config();
  const NoiseSchedule sched = make_schedule(mc.timesteps, mc.schedule);
  Adam<Scalar> opt(std::move(trainable), cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> pick_t(1, mc.timesteps);
  std::vector<AppliedAdapter<Scalar>> adapters;
  if (set) adapters.push_back({set, cfg.alpha_train});

  std::vector<StepLog> log;
  log.reserve(static_cast<std::size_t>(cfg.steps));
  for (long step = 1; step <= cfg.steps; ++step) {
    TrainingBatch batch = source(rng, cfg.batch_size);
    const std::size_t B = batch.clips.size();
    if (B == 0 || batch.conditions.size() != B) throw ContractError("training batch is empty or unlabeled");
    std::vector<int> ts(B);
    std::vector<VideoTensor> eps, zt;
    for (std::size_t b = 0; b < B; ++b) {
      ts[b] = pick_t(rng);
      eps.push_back(gaussian_like(batch.clips[b], rng));
      zt.push_back(forward_diffuse(batch.clips[b], ts[b], eps.back(), sched));
    }
    auto ptrs = [](const std::vector<VideoTensor>& v) {
      std::vector<const VideoTensor*> p;
      for (const auto& x : v) p.push_back(&x);
      return p;
    };
    const Matrix<Scalar> x0 = patchify<Scalar>(ptrs(batch.clips), mc.patch);
    const Matrix<Scalar> xt = patchify<Scalar>(ptrs(zt), mc.patch);
    const Matrix<Scalar> e = patchify<Scalar>(ptrs(eps), mc.patch);

    Tape<Scalar> tape;
    auto out = model.forward(tape, xt, ts, batch.conditions, adapters);
    Var<Scalar> ls = loss_simple<Scalar>(out.eps, e);
    Var<Scalar> lv = ls;
    try {
      lv = loss_vlb<Scalar>(out.eps, out.sigma, x0, xt, ts, static_cast<Index>(mc.frames) * mc.tokens_per_frame(), sched);
    } catch (const NumericError& err) {
      throw NumericError(std::string(err.what()) + " at step " + std::to_string(step), step);
    }
    Var<Scalar> loss = ad::add(ls, ad::scale(lv, static_cast<Scalar>(cfg.loss_lambda)));
    const double total = static_cast<double>(loss.value()(0, 0));
    if (!std::isfinite(total)) {
      throw NumericError("training loss is not finite at step " + std::to_string(step), step);
    }
    tape.backward(loss);
    const double lr = lr_schedule(step, cfg);
    opt.step(lr);
    if (guard) guard->check(step);
    StepLog entry{step, static_cast<double>(ls.value()(0, 0)), static_cast<double>(lv.value()(0, 0)), lr};
    log.push_back(entry);
    if (on_step) on_step(entry);
  }
  return log;
}

}  // namespace detail

/// Pretrains every base parameter. Zero steps leave the model bit-exact.
template <typename Scalar>
std::vector<StepLog> train_base(ModelGraph<Scalar>& model, const BatchSource& data, const TrainConfig& cfg,
                                const StepCallback& on_step = {}) {
  std::vector<Tensor<Scalar>*> params;
  for (auto& [name, t] : model.parameters()) params.push_back(t);
  model.set_trainable(true);
  auto log = detail::train_loop<Scalar>(model, nullptr, params, cfg, data, nullptr, on_step);
  model.set_trainable(false);
  return log;
}

namespace detail {

template <typename Scalar>
std::vector<StepLog> train_adapter(const ModelGraph<Scalar>& model, UfoAdapterSet<Scalar>& set,
                                   const BatchSource& data, const TrainConfig& cfg, const StepCallback& on_step) {
  model.check_compatible(set);
  for (const auto& [name, t] : model.parameters()) {
    if (t->requires_grad()) throw ContractError("adapter training needs a frozen base; '" + name + "' requires grad");
  }
  const FreezeGuard<Scalar> guard(model);
  set.set_trainable(true);
  auto log = train_loop<Scalar>(model, &set, set.parameters(), cfg, data, &guard, on_step);
  set.set_trainable(false);
  return log;
}

}  // namespace detail

/// Trains `set` on static clips at full intensity against the frozen model.
template <typename Scalar>
std::vector<StepLog> train_ufo_consistency(const ModelGraph<Scalar>& model, UfoAdapterSet<Scalar>& set,
                                           const BatchSource& static_clips, const TrainConfig& cfg,
                                           const StepCallback& on_step = {}) {
  auto log = detail::train_adapter(model, set, static_clips, cfg, on_step);
  set.set_recommended_alpha(default_recommended_alpha(AdapterKind::consistency));
  return log;
}

/// Trains `set` on styled clips at the fixed `cfg.alpha_train`, which becomes
/// the set's recommended intensity.
template <typename Scalar>
std::vector<StepLog> train_ufo_style(const ModelGraph<Scalar>& model, UfoAdapterSet<Scalar>& set,
                                     const BatchSource& styled_clips, const TrainConfig& cfg,
                                     const StepCallback& on_step = {}) {
  auto log = detail::train_adapter(model, set, styled_clips, cfg, on_step);
  set.set_recommended_alpha(cfg.alpha_train);
  return log;
}

}  // namespace ufo

#endif  // UFO_TRAINER_HPP
