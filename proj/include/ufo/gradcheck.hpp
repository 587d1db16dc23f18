// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef UFO_GRADCHECK_HPP
#define UFO_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "ufo/autodiff.hpp"

namespace ufo {

/// Builds a scalar loss on the given tape. Must be deterministic.
template <typename Scalar>
using TapeObjective = std::function<Var<Scalar>(Tape<Scalar>&)>;

struct GradCheckOptions {
  double eps = 1e-5;
  /// Coordinates probed per tensor; <= 0 probes every coordinate.
  Index max_coords = 0;
  std::uint64_t seed = 0;
  /// Accuracy order of the difference stencil: 2 (central, two points) or 4
  /// (five points, truncation error O(eps^4)).
  int order = 2;
};

/// Compares reverse-mode gradients of `f` with central differences.
///
/// Returns max over probed coordinates of
/// |analytic - central| / (|central| + eps). Each tensor in `params` is
/// temporarily marked `requires_grad` and restored bit-exact afterwards.
template <typename Scalar>
double finite_diff_check(const TapeObjective<Scalar>& f, const std::vector<Tensor<Scalar>*>& params,
                         const GradCheckOptions& opts = {}) {
  if (!(opts.eps > 0.0)) throw ContractError("finite_diff_check: eps must be positive");
  if (opts.order != 2 && opts.order != 4) throw ContractError("finite_diff_check: order must be 2 or 4");
  std::vector<bool> saved_flags;
  for (Tensor<Scalar>* p : params) {
    saved_flags.push_back(p->requires_grad());
    p->set_requires_grad(true);
    p->zero_grad();
  }
  auto evaluate = [&f]() {
    Tape<Scalar> tape;
    return static_cast<double>(f(tape).value()(0, 0));
  };

  std::vector<Matrix<Scalar>> analytic;
  double f0 = 0.0;
  {
    Tape<Scalar> tape;
    Var<Scalar> loss = f(tape);
    f0 = static_cast<double>(loss.value()(0, 0));
    tape.backward(loss);
    for (Tensor<Scalar>* p : params) {
      analytic.push_back(p->grad() ? *p->grad() : Matrix<Scalar>::Zero(p->rows(), p->cols()));
    }
  }
  if (evaluate() != f0) throw OracleError("finite_diff_check: objective is not deterministic");

  const Scalar h = static_cast<Scalar>(opts.eps);
  std::mt19937_64 rng(opts.seed);
  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor<Scalar>& p = *params[pi];
    std::vector<Index> coords(static_cast<std::size_t>(p.size()));
    std::iota(coords.begin(), coords.end(), Index{0});
    if (opts.max_coords > 0 && p.size() > opts.max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<std::size_t>(opts.max_coords));
    }
    for (Index c : coords) {
      const Scalar orig = p[c];
      auto at = [&](Scalar offset) {
        p[c] = orig + offset;
        return evaluate();
      };
      double central = (at(h) - at(-h)) / (2.0 * opts.eps);
      if (opts.order == 4) central = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * opts.eps);
      p[c] = orig;
      const double a = static_cast<double>(analytic[pi].data()[c]);
      worst = std::max(worst, std::abs(a - central) / (std::abs(central) + opts.eps));
    }
  }
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    params[pi]->zero_grad();
    params[pi]->set_requires_grad(saved_flags[pi]);
  }
  return worst;
}

/// Single-input form: `f` maps the recorded input to a scalar.
template <typename Scalar>
double finite_diff_check(const std::function<Var<Scalar>(Tape<Scalar>&, Var<Scalar>)>& f, const Tensor<Scalar>& x,
                         double eps) {
  Tensor<Scalar> probe = x;
  TapeObjective<Scalar> obj = [&](Tape<Scalar>& tape) { return f(tape, tape.leaf(probe)); };
  GradCheckOptions opts;
  opts.eps = eps;
  return finite_diff_check<Scalar>(obj, {&probe}, opts);
}

}  // namespace ufo

#endif  // UFO_GRADCHECK_HPP
