// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef UFO_INJECTION_HPP
#define UFO_INJECTION_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ufo/adapter.hpp"
#include "ufo/model.hpp"

namespace ufo {

/// One entry per adaptable layer of `model`: v_det ~ N(0, 1/n), v_cor = 0,
/// beta = 1. The fresh set leaves the model's output unchanged at any alpha.
template <typename Scalar>
UfoAdapterSet<Scalar> init_adapter_set(const ModelGraph<Scalar>& model, int d, std::uint64_t seed,
                                       AdapterKind kind = AdapterKind::consistency) {
  if (d < 1) throw ContractError("init_adapter_set: d must be >= 1, got " + std::to_string(d));
  bool any = false;
  for (const auto& l : model.layers()) any = any || l.adaptable;
  if (!any) throw ContractError("init_adapter_set: model has no adaptable mapping layers");
  UfoAdapterSet<Scalar> set(model.fingerprint(), d, kind, default_recommended_alpha(kind));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& l : model.layers()) {
    if (!l.adaptable) continue;
    auto& e = set.add_entry(l.name, l.out_features(), l.in_features());
    const double scale = 1.0 / std::sqrt(static_cast<double>(e.n));
    for (Index i = 0; i < e.v_det.size(); ++i) e.v_det[i] = static_cast<Scalar>(scale * normal(rng));
  }
  return set;
}

/// Attaches `set` to `target` at intensity `alpha`. Succeeds iff the target's
/// layer registry matches the set's fingerprint; otherwise TransferError.
template <typename Scalar>
AppliedAdapter<Scalar> transfer(const UfoAdapterSet<Scalar>& set, const ModelGraph<Scalar>& target, double alpha) {
  target.check_compatible(set);
  return {&set, alpha};
}

/// Validates every (set, alpha) pair against one model; the error names the
/// offending list position.
template <typename Scalar>
std::vector<AppliedAdapter<Scalar>> compose(const ModelGraph<Scalar>& model,
                                            std::span<const AppliedAdapter<Scalar>> adapters) {
  std::vector<AppliedAdapter<Scalar>> out;
  for (std::size_t i = 0; i < adapters.size(); ++i) {
    try {
      out.push_back(transfer(*adapters[i].set, model, adapters[i].alpha));
    } catch (const TransferError& e) {
      throw TransferError("adapter #" + std::to_string(i) + " (" + to_string(adapters[i].set->kind()) +
                          "): " + e.what());
    }
  }
  return out;
}

}  // namespace ufo

#endif  // UFO_INJECTION_HPP
