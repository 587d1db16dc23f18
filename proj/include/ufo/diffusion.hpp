// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef UFO_DIFFUSION_HPP
#define UFO_DIFFUSION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "ufo/autodiff.hpp"
#include "ufo/model.hpp"
#include "ufo/schedule.hpp"
#include "ufo/video.hpp"

namespace ufo {

inline constexpr int kDefaultSamplingSteps = 30;

/// z_t = sqrt(alpha_bar_t) z + sqrt(1 - alpha_bar_t) eps, elementwise.
VideoTensor forward_diffuse(const VideoTensor& z, int t, const VideoTensor& eps, const NoiseSchedule& sched);

/// Mean of (eps - eps_hat)^2 over all elements.
double loss_simple(const VideoTensor& eps, const VideoTensor& eps_hat);

/// KL(N(mean1, var1) || N(mean2, var2)) for scalars.
double gaussian_kl(double mean1, double var1, double mean2, double var2);

/// Standard normal draws in a clip-shaped tensor.
VideoTensor gaussian_like(const VideoTensor& shape, std::mt19937_64& rng);

/// Model prediction for one noisy clip. `sigma_params` holds the raw
/// coefficient v; the predicted log-variance is
///   ((v + 1) / 2) log beta_t + (1 - (v + 1) / 2) log posterior_variance_t.
struct DenoiseOutput {
  VideoTensor eps_hat;
  VideoTensor sigma_params;
};

/// Recorded L_simple on token layout.
template <typename Scalar>
Var<Scalar> loss_simple(Var<Scalar> eps_hat, const Matrix<Scalar>& eps) {
  return ad::mean(ad::square(ad::add_const(eps_hat, Matrix<Scalar>(-eps))));
}

/// Recorded variational-bound term, averaged over elements. Rows are grouped
/// per clip (`rows_per_clip` rows share timestep `t[b]`).
///
/// For t >= 2 this is KL(q(z_{t-1} | z_t, z_0) || p(z_{t-1} | z_t)); for t = 1
/// it is the Gaussian negative log-likelihood of z_0. The predicted mean is
/// built from a detached eps_hat, so only `sigma` receives gradient.
template <typename Scalar>
Var<Scalar> loss_vlb(Var<Scalar> eps_hat, Var<Scalar> sigma, const Matrix<Scalar>& z0, const Matrix<Scalar>& zt,
                     std::span<const int> t, Index rows_per_clip, const NoiseSchedule& sched) {
  const Index N = z0.rows(), D = z0.cols();
  if (zt.rows() != N || zt.cols() != D || eps_hat.rows() != N || eps_hat.cols() != D || sigma.rows() != N ||
      sigma.cols() != D) {
    throw DimensionError("loss_vlb: z0, z_t, eps_hat and sigma must share one shape");
  }
  if (rows_per_clip <= 0 || static_cast<Index>(t.size()) * rows_per_clip != N) {
    throw DimensionError("loss_vlb: timestep count does not match the row grouping");
  }
  const Matrix<Scalar>& eps = eps_hat.value();
  Matrix<Scalar> slope(N, D), offset(N, D), quad(N, D), constant(N, D);
  for (std::size_t b = 0; b < t.size(); ++b) {
    const int ts = t[b];
    if (ts < 1) throw ContractError("loss_vlb: t must be >= 1");
    const double ab = sched.alpha_bar(ts);
    const double log_beta = std::log(sched.beta(ts));
    const double log_post = sched.posterior_log_variance_clipped(ts);
    const double c0 = sched.posterior_coef_z0(ts), ct = sched.posterior_coef_zt(ts);
    const double post_var = sched.posterior_variance(ts);
    const Index r0 = static_cast<Index>(b) * rows_per_clip;
    for (Index r = r0; r < r0 + rows_per_clip; ++r) {
      for (Index c = 0; c < D; ++c) {
        const double z = static_cast<double>(zt(r, c));
        const double x0 = static_cast<double>(z0(r, c));
        const double x0_hat = (z - std::sqrt(1.0 - ab) * static_cast<double>(eps(r, c))) / std::sqrt(ab);
        const double mu = c0 * x0_hat + ct * z;
        slope(r, c) = static_cast<Scalar>(0.5 * (log_beta - log_post));
        offset(r, c) = static_cast<Scalar>(0.5 * (log_beta + log_post));
        if (ts >= 2) {
          const double mu_q = c0 * x0 + ct * z;
          quad(r, c) = static_cast<Scalar>(post_var + (mu_q - mu) * (mu_q - mu));
          constant(r, c) = static_cast<Scalar>(-0.5 * (1.0 + log_post));
        } else {
          quad(r, c) = static_cast<Scalar>((x0 - mu) * (x0 - mu));
          constant(r, c) = static_cast<Scalar>(0.5 * std::log(2.0 * std::numbers::pi));
        }
      }
    }
  }
  Var<Scalar> logvar = ad::add_const(ad::mul_const(sigma, slope), offset);
  const auto& lv = logvar.value();
  if (!lv.allFinite() || !(lv.array().exp() > Scalar(0)).all() || !lv.array().exp().allFinite()) {
    throw NumericError("loss_vlb: predicted variance is not positive and finite");
  }
  Var<Scalar> inv_var = ad::exp(ad::scale(logvar, Scalar(-1)));
  Var<Scalar> elem = ad::add(ad::scale(logvar, Scalar(0.5)), ad::scale(ad::mul_const(inv_var, quad), Scalar(0.5)));
  return ad::mean(ad::add_const(elem, constant));
}

/// Plain-value L_vlb for one clip.
double loss_vlb(const VideoTensor& z0, const VideoTensor& z_t, int t, const DenoiseOutput& out,
                const NoiseSchedule& sched);

/// Runs the denoiser on several noisy clips at once.
template <typename Scalar>
std::vector<DenoiseOutput> denoise_batch(const std::vector<const VideoTensor*>& z_t, std::span<const int> t,
                                         std::span<const int> conditions, const ModelGraph<Scalar>& model,
                                         std::span<const AppliedAdapter<Scalar>> adapters) {
  const ModelConfig& cfg = model.config();
  for (const VideoTensor* z : z_t) {
    if (z->frames() != cfg.frames || z->height() != cfg.height || z->width() != cfg.width ||
        z->channels() != cfg.channels) {
      throw DimensionError("denoise: clip " + z->shape_string() + " does not match the model's " +
                           std::to_string(cfg.frames) + "x" + std::to_string(cfg.height) + "x" +
                           std::to_string(cfg.width) + "x" + std::to_string(cfg.channels));
    }
  }
  Tape<Scalar> tape;
  const Matrix<Scalar> tokens = patchify<Scalar>(z_t, cfg.patch);
  auto out = model.forward(tape, tokens, t, conditions, adapters);
  const int B = static_cast<int>(z_t.size());
  auto eps = unpatchify<Scalar>(out.eps.value(), B, cfg.frames, cfg.height, cfg.width, cfg.channels, cfg.patch);
  auto sig = unpatchify<Scalar>(out.sigma.value(), B, cfg.frames, cfg.height, cfg.width, cfg.channels, cfg.patch);
  std::vector<DenoiseOutput> res;
  res.reserve(z_t.size());
  for (int b = 0; b < B; ++b) res.push_back({std::move(eps[static_cast<std::size_t>(b)]), std::move(sig[static_cast<std::size_t>(b)])});
  return res;
}

/// eps_hat and the covariance coefficients for one noisy clip.
template <typename Scalar>
DenoiseOutput denoise_step_params(const VideoTensor& z_t, int t, int condition, const ModelGraph<Scalar>& model,
                                  std::span<const AppliedAdapter<Scalar>> adapters = {}) {
  const int ts[1] = {t};
  const int cs[1] = {condition};
  return std::move(denoise_batch<Scalar>({&z_t}, ts, cs, model, adapters).front());
}

/// Ancestral sampling of one clip per (condition, seed) pair. Each clip's
/// noise comes from its own seeded stream. With `steps` < T the sampler
/// walks an evenly spaced subsequence of timesteps.
template <typename Scalar>
std::vector<VideoTensor> sample_batch(const ModelGraph<Scalar>& model, std::span<const int> conditions,
                                      std::span<const std::uint64_t> seeds,
                                      std::span<const AppliedAdapter<Scalar>> adapters, int steps,
                                      const NoiseSchedule& sched) {
  if (conditions.size() != seeds.size()) throw ContractError("sample: one seed per condition required");
  if (steps > sched.steps()) {
    throw ContractError("sample: " + std::to_string(steps) + " steps exceed T = " + std::to_string(sched.steps()));
  }
  const std::vector<int> ts = spaced_timesteps(sched.steps(), steps);
  const NoiseSchedule sub = sched.subsequence(ts);
  const ModelConfig& cfg = model.config();
  const std::size_t B = conditions.size();
  std::vector<std::mt19937_64> rngs;
  std::vector<VideoTensor> z;
  for (std::size_t b = 0; b < B; ++b) {
    rngs.emplace_back(seeds[b]);
    VideoTensor shape(cfg.frames, cfg.height, cfg.width, cfg.channels);
    z.push_back(gaussian_like(shape, rngs.back()));
  }
  std::vector<const VideoTensor*> ptrs;
  for (const auto& v : z) ptrs.push_back(&v);
  std::vector<int> tvec(B);
  for (int i = steps; i >= 1; --i) {
    std::fill(tvec.begin(), tvec.end(), ts[static_cast<std::size_t>(i - 1)]);
    auto outs = denoise_batch<Scalar>(ptrs, tvec, conditions, model, adapters);
    const double ab = sub.alpha_bar(i);
    const double c0 = sub.posterior_coef_z0(i), ct = sub.posterior_coef_zt(i);
    const double log_beta = std::log(sub.beta(i));
    const double log_post = sub.posterior_log_variance_clipped(i);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t b = 0; b < B; ++b) {
      auto& zb = z[b].data();
      const auto& eps = outs[b].eps_hat.data();
      const auto& v = outs[b].sigma_params.data();
      for (std::size_t k = 0; k < zb.size(); ++k) {
        const double x0 = std::clamp((zb[k] - std::sqrt(1.0 - ab) * eps[k]) / std::sqrt(ab), 0.0, 1.0);
        const double mean = c0 * x0 + ct * zb[k];
        if (i > 1) {
          const double frac = (v[k] + 1.0) / 2.0;
          const double logvar = frac * log_beta + (1.0 - frac) * log_post;
          zb[k] = mean + std::exp(0.5 * logvar) * normal(rngs[b]);
        } else {
          zb[k] = mean;
        }
      }
    }
  }
  std::vector<VideoTensor> out;
  out.reserve(B);
  for (auto& v : z) out.push_back(v.clamped());
  return out;
}

template <typename Scalar>
VideoTensor sample(const ModelGraph<Scalar>& model, int condition, std::span<const AppliedAdapter<Scalar>> adapters,
                   int steps, std::uint64_t seed, const NoiseSchedule& sched) {
  const int cs[1] = {condition};
  const std::uint64_t ss[1] = {seed};
  return std::move(sample_batch<Scalar>(model, cs, ss, adapters, steps, sched).front());
}

}  // namespace ufo

#endif  // UFO_DIFFUSION_HPP
