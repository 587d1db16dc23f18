// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef UFO_TESTS_FIXTURES_HPP
#define UFO_TESTS_FIXTURES_HPP

#include <random>
#include <string>

#include "ufo/adapter.hpp"
#include "ufo/model.hpp"

namespace ufo::testing {

/// An adapter set with random names, shapes, rank, kind and values.
inline UfoAdapterSet<float> random_adapter_set(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(1, 12), count(0, 6), rank(1, 5), len(1, 20);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  const AdapterKind kind = rng() % 2 ? AdapterKind::stylization : AdapterKind::consistency;
  UfoAdapterSet<float> set(rng(), rank(rng), kind, std::uniform_real_distribution<double>(0.0, 1.0)(rng));
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    std::string name = "layer" + std::to_string(i) + ".";
    for (int k = len(rng); k > 0; --k) name.push_back(static_cast<char>('a' + rng() % 26));
    auto& e = set.add_entry(name, dim(rng), dim(rng));
    for (Tensor<float>* t : {&e.v_det, &e.v_cor, &e.beta})
      for (Index k = 0; k < t->size(); ++k) (*t)[k] = normal(rng);
  }
  return set;
}

/// A small valid architecture drawn at random, with random weights.
inline ModelGraph<float> random_model(std::mt19937_64& rng) {
  ModelConfig c;
  c.frames = 1 + static_cast<int>(rng() % 3);
  c.patch = 1 + static_cast<int>(rng() % 2);
  c.height = c.patch * (1 + static_cast<int>(rng() % 3));
  c.width = c.patch * (1 + static_cast<int>(rng() % 3));
  c.channels = 1 + static_cast<int>(rng() % 2);
  c.heads = 1 + static_cast<int>(rng() % 2);
  c.hidden = 2 * c.heads * (1 + static_cast<int>(rng() % 3));
  c.blocks = 1 + static_cast<int>(rng() % 2);
  c.mlp_ratio = 1 + static_cast<int>(rng() % 2);
  c.num_conditions = 1 + static_cast<int>(rng() % 8);
  c.timesteps = 2 + static_cast<int>(rng() % 50);
  c.schedule = rng() % 2 ? ScheduleKind::cosine : ScheduleKind::linear;
  c.init_seed = rng();
  ModelGraph<float> m(c);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (auto& [name, t] : m.parameters())
    for (Index k = 0; k < t->size(); ++k) (*t)[k] = normal(rng);
  return m;
}

}  // namespace ufo::testing

#endif  // UFO_TESTS_FIXTURES_HPP
