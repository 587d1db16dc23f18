// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ufo/diffusion.hpp"

#include <cmath>

namespace ufo {

VideoTensor forward_diffuse(const VideoTensor& z, int t, const VideoTensor& eps, const NoiseSchedule& sched) {
  if (!z.same_shape(eps)) throw DimensionError("forward_diffuse: z " + z.shape_string() + " vs eps " + eps.shape_string());
  if (t < 1 || t > sched.steps()) {
    throw ContractError("forward_diffuse: t = " + std::to_string(t) + " outside 1.." + std::to_string(sched.steps()));
  }
  const double ab = sched.alpha_bar(t);
  const double a = std::sqrt(ab), s = std::sqrt(1.0 - ab);
  VideoTensor out = z;
  auto& d = out.data();
  const auto& e = eps.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a * d[i] + s * e[i];
  return out;
}

double loss_simple(const VideoTensor& eps, const VideoTensor& eps_hat) {
  if (!eps.same_shape(eps_hat)) throw DimensionError("loss_simple: " + eps.shape_string() + " vs " + eps_hat.shape_string());
  double acc = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double r = eps.data()[i] - eps_hat.data()[i];
    acc += r * r;
  }
  return acc / static_cast<double>(eps.size());
}

double gaussian_kl(double mean1, double var1, double mean2, double var2) {
  if (!(var1 > 0.0) || !(var2 > 0.0)) throw NumericError("gaussian_kl: variances must be positive");
  const double d = mean1 - mean2;
  return 0.5 * (std::log(var2 / var1) + (var1 + d * d) / var2 - 1.0);
}

VideoTensor gaussian_like(const VideoTensor& shape, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  VideoTensor out(shape.frames(), shape.height(), shape.width(), shape.channels(), 0.0, shape.fps());
  for (double& v : out.data()) v = normal(rng);
  return out;
}

namespace {

MatrixXd column(const VideoTensor& v) {
  return Eigen::Map<const MatrixXd>(v.data().data(), static_cast<Index>(v.size()), 1);
}

}  // namespace

double loss_vlb(const VideoTensor& z0, const VideoTensor& z_t, int t, const DenoiseOutput& out,
                const NoiseSchedule& sched) {
  if (!z0.same_shape(z_t) || !z0.same_shape(out.eps_hat) || !z0.same_shape(out.sigma_params)) {
    throw DimensionError("loss_vlb: clip shapes differ");
  }
  Tape<double> tape;
  const int ts[1] = {t};
  Var<double> loss = loss_vlb<double>(tape.constant(column(out.eps_hat)), tape.constant(column(out.sigma_params)),
                                      column(z0), column(z_t), ts, static_cast<Index>(z0.size()), sched);
  return loss.value()(0, 0);
}

}  // namespace ufo
