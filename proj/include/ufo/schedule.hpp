// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef UFO_SCHEDULE_HPP
#define UFO_SCHEDULE_HPP

#include <string>
#include <vector>

namespace ufo {

enum class ScheduleKind { cosine, linear };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

/// Cumulative signal retention alpha_bar_t for t = 1..T together with the
/// Gaussian posterior q(z_{t-1} | z_t, z_0). Steps are 1-based; alpha_bar(0)
/// is 1 by convention.
class NoiseSchedule {
 public:
  /// Builds a schedule directly from a strictly decreasing alpha_bar sequence.
  explicit NoiseSchedule(std::vector<double> alpha_bar, ScheduleKind kind = ScheduleKind::cosine);

  int steps() const noexcept { return static_cast<int>(alpha_bar_.size()); }
  ScheduleKind kind() const noexcept { return kind_; }

  double alpha_bar(int t) const;
  double beta(int t) const;
  double posterior_variance(int t) const;
  /// log of the posterior variance; at t = 1 (where it is zero) the t = 2
  /// value is used.
  double posterior_log_variance_clipped(int t) const;
  /// Posterior mean = coef_z0(t) * z_0 + coef_zt(t) * z_t.
  double posterior_coef_z0(int t) const;
  double posterior_coef_zt(int t) const;

  /// Sub-schedule over `timesteps` (ascending, in 1..T); its betas and
  /// posteriors are recomputed from the retained alpha_bar values.
  NoiseSchedule subsequence(const std::vector<int>& timesteps) const;

 private:
  void check_step(int t) const;

  ScheduleKind kind_;
  std::vector<double> alpha_bar_;
  std::vector<double> beta_;
  std::vector<double> post_var_;
  std::vector<double> post_logvar_;
  std::vector<double> coef_z0_;
  std::vector<double> coef_zt_;
};

/// T >= 2. alpha_bar_1 > 0.99 and alpha_bar_T < 0.05 for every T.
NoiseSchedule make_schedule(int T, ScheduleKind kind);

/// `steps` distinct timesteps spread evenly over 1..T, always including T.
std::vector<int> spaced_timesteps(int T, int steps);

}  // namespace ufo

#endif  // UFO_SCHEDULE_HPP
