// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ufo/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ufo/errors.hpp"

namespace ufo {

std::string to_string(ScheduleKind kind) { return kind == ScheduleKind::cosine ? "cosine" : "linear"; }

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "cosine") return ScheduleKind::cosine;
  if (name == "linear") return ScheduleKind::linear;
  throw ContractError("unknown schedule kind '" + name + "'");
}

NoiseSchedule::NoiseSchedule(std::vector<double> alpha_bar, ScheduleKind kind)
    : kind_(kind), alpha_bar_(std::move(alpha_bar)) {
  const std::size_t T = alpha_bar_.size();
  if (T < 1) throw ContractError("noise schedule needs at least one step");
  for (std::size_t i = 0; i < T; ++i) {
    const double prev = i == 0 ? 1.0 : alpha_bar_[i - 1];
    if (!(alpha_bar_[i] > 0.0 && alpha_bar_[i] < prev)) {
      throw ContractError("alpha_bar must be strictly decreasing inside (0, 1)");
    }
  }
  beta_.resize(T);
  post_var_.resize(T);
  post_logvar_.resize(T);
  coef_z0_.resize(T);
  coef_zt_.resize(T);
  for (std::size_t i = 0; i < T; ++i) {
    const double ab = alpha_bar_[i];
    const double ab_prev = i == 0 ? 1.0 : alpha_bar_[i - 1];
    const double b = 1.0 - ab / ab_prev;
    beta_[i] = b;
    post_var_[i] = b * (1.0 - ab_prev) / (1.0 - ab);
    coef_z0_[i] = b * std::sqrt(ab_prev) / (1.0 - ab);
    coef_zt_[i] = (1.0 - ab_prev) * std::sqrt(1.0 - b) / (1.0 - ab);
  }
  for (std::size_t i = 0; i < T; ++i) {
    if (i == 0) {
      // Zero at the first step; borrow step 2 (or beta_1 for one-step schedules).
      post_logvar_[i] = std::log(T > 1 ? post_var_[1] : beta_[0]);
    } else {
      post_logvar_[i] = std::log(post_var_[i]);
    }
  }
}

void NoiseSchedule::check_step(int t) const {
  if (t < 1 || t > steps()) {
    throw ContractError("timestep " + std::to_string(t) + " outside 1.." + std::to_string(steps()));
  }
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t == 0) return 1.0;
  check_step(t);
  return alpha_bar_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::beta(int t) const {
  check_step(t);
  return beta_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::posterior_variance(int t) const {
  check_step(t);
  return post_var_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::posterior_log_variance_clipped(int t) const {
  check_step(t);
  return post_logvar_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::posterior_coef_z0(int t) const {
  check_step(t);
  return coef_z0_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::posterior_coef_zt(int t) const {
  check_step(t);
  return coef_zt_[static_cast<std::size_t>(t - 1)];
}

NoiseSchedule NoiseSchedule::subsequence(const std::vector<int>& timesteps) const {
  std::vector<double> ab;
  ab.reserve(timesteps.size());
  int last = 0;
  for (int t : timesteps) {
    check_step(t);
    if (t <= last) throw ContractError("subsequence timesteps must be strictly ascending");
    ab.push_back(alpha_bar(t));
    last = t;
  }
  return NoiseSchedule(std::move(ab), kind_);
}

namespace {

constexpr double kCosineOffset = 0.008;
constexpr double kMaxBeta = 0.999;
// First step sits where a 1000-step schedule would put it, so alpha_bar_1
// stays near 1 for short schedules too.
constexpr double kFirstStepFraction = 1e-3;

double cosine_curve(double u) {
  const double c = std::cos((u + kCosineOffset) / (1.0 + kCosineOffset) * std::numbers::pi / 2.0);
  const double c0 = std::cos(kCosineOffset / (1.0 + kCosineOffset) * std::numbers::pi / 2.0);
  return (c * c) / (c0 * c0);
}

}  // namespace

NoiseSchedule make_schedule(int T, ScheduleKind kind) {
  if (T < 2) throw ContractError("make_schedule: T must be at least 2, got " + std::to_string(T));
  std::vector<double> betas(static_cast<std::size_t>(T));
  if (kind == ScheduleKind::cosine) {
    double prev = 1.0;
    for (int t = 1; t <= T; ++t) {
      const double u = kFirstStepFraction + (1.0 - kFirstStepFraction) * (t - 1) / (T - 1);
      const double ab = cosine_curve(u);
      betas[static_cast<std::size_t>(t - 1)] = std::min(1.0 - ab / prev, kMaxBeta);
      prev = ab;
    }
  } else {
    const double beta_start = 1e-4;
    const double beta_end = std::min(kMaxBeta, 0.02 * 1000.0 / T);
    for (int t = 1; t <= T; ++t) {
      betas[static_cast<std::size_t>(t - 1)] = beta_start + (beta_end - beta_start) * (t - 1) / (T - 1);
    }
  }
  std::vector<double> alpha_bar(betas.size());
  double acc = 1.0;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    acc *= 1.0 - betas[i];
    alpha_bar[i] = acc;
  }
  return NoiseSchedule(std::move(alpha_bar), kind);
}

std::vector<int> spaced_timesteps(int T, int steps) {
  if (steps < 1 || steps > T) {
    throw ContractError("sampling steps " + std::to_string(steps) + " must lie in 1.." + std::to_string(T));
  }
  std::vector<int> out;
  if (steps == 1) return {T};
  out.reserve(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double pos = 1.0 + static_cast<double>(T - 1) * i / (steps - 1);
    out.push_back(static_cast<int>(std::lround(pos)));
  }
  return out;
}

}  // namespace ufo
