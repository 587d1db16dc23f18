// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "support.hpp"
#include "ufo/metrics.hpp"
#include "ufo/trainer.hpp"

using namespace ufo;

namespace {

ModelConfig tiny() {
  ModelConfig c;
  c.frames = 4;
  c.height = c.width = 8;
  c.patch = 4;
  c.hidden = 8;
  c.heads = 2;
  c.blocks = 1;
  c.mlp_ratio = 1;
  c.num_conditions = 4;
  c.timesteps = 20;
  c.init_seed = 1;
  return c;
}

TrainConfig quick(int steps, std::uint64_t seed = 0) {
  TrainConfig t;
  t.steps = steps;
  t.batch_size = 2;
  t.lr_peak = 1e-2;
  t.warmup_steps = std::min(steps, 2);
  t.seed = seed;
  return t;
}

template <typename Scalar>
std::vector<std::uint8_t> bytes_of(const ModelGraph<Scalar>& m) {
  std::vector<std::uint8_t> out;
  for (const auto& [name, t] : m.parameters()) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(t->data());
    out.insert(out.end(), p, p + sizeof(Scalar) * static_cast<std::size_t>(t->size()));
  }
  return out;
}

}  // namespace

TEST_CASE("learning-rate schedule") {
  TrainConfig cfg;
  CHECK(lr_schedule(0, cfg) == 0.0);
  CHECK(lr_schedule(1, cfg) == doctest::Approx(2e-4 / 500).epsilon(1e-15));
  CHECK(lr_schedule(250, cfg) == doctest::Approx(1e-4).epsilon(1e-15));
  CHECK(lr_schedule(500, cfg) == 2e-4);
  CHECK(lr_schedule(1000, cfg) == 2e-4);
  CHECK_THROWS_AS(lr_schedule(-1, cfg), ContractError);
  cfg.warmup_steps = 0;
  CHECK(lr_schedule(1, cfg) == 2e-4);
}

TEST_CASE("train config validation") {
  CHECK_NOTHROW(TrainConfig{}.validate());
  CHECK(TrainConfig{}.steps == 3000);
  CHECK(TrainConfig{}.alpha_train == 1.0);
  auto bad = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  };
  bad([](TrainConfig& c) { c.steps = -1; });
  bad([](TrainConfig& c) { c.lr_peak = 0.0; });
  bad([](TrainConfig& c) { c.warmup_steps = 4000; });
  bad([](TrainConfig& c) { c.alpha_train = 0.0; });
  bad([](TrainConfig& c) { c.alpha_train = 1.5; });
  bad([](TrainConfig& c) { c.batch_size = 0; });
  bad([](TrainConfig& c) { c.adam_beta2 = 1.0; });
}

TEST_CASE("loss csv") {
  const std::vector<StepLog> log{{1, 0.5, 0.25, 1e-4}, {2, 0.125, 2.0, 2e-4}};
  CHECK(loss_csv(log) == "step,loss_simple,loss_vlb,lr\n1,0.5,0.25,0.0001\n2,0.125,2,0.00020000000000000001\n");
}

TEST_CASE("batch sources") {
  const ModelConfig c = tiny();
  std::mt19937_64 rng(3);
  const TrainingBatch moving = moving_scene_source(c, {})(rng, 3);
  REQUIRE(moving.clips.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(moving.clips[i].frames() == 4);
    CHECK(moving.conditions[i] >= 0);
    CHECK(moving.conditions[i] < 4);
  }
  const TrainingBatch still = static_scene_source(c, {{2}, 0.05})(rng, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(mean_interframe_abs_diff(still.clips[i]) == 0.0);
    CHECK(still.conditions[i] == 2);
  }
  std::mt19937_64 a(9), b(9);
  const TrainingBatch plain = moving_scene_source(c, {})(a, 2);
  const TrainingBatch styled = styled_scene_source(c, {}, Style::invert)(b, 2);
  for (std::size_t i = 0; i < 2; ++i) CHECK(styled.clips[i] == apply_style(plain.clips[i], Style::invert));
  CHECK_THROWS_AS(moving_scene_source(c, {{7}, 0.05}), ConditionError);
}

TEST_CASE("zero steps leave the model bit-exact") {
  ModelGraph<double> m(tiny());
  const auto before = bytes_of(m);
  const auto log = train_base(m, moving_scene_source(m.config(), {}), quick(0));
  CHECK(log.empty());
  CHECK(bytes_of(m) == before);
}

TEST_CASE("base training is deterministic and reduces the loss") {
  auto run = [](std::uint64_t seed) {
    ModelGraph<float> m(tiny());
    TrainConfig cfg = quick(60, seed);
    auto log = train_base(m, moving_scene_source(m.config(), {}), cfg);
    return std::pair{bytes_of(m), log};
  };
  const auto [a, log_a] = run(4);
  const auto [b, log_b] = run(4);
  const auto [c, log_c] = run(5);
  CHECK(a == b);
  CHECK(a != c);
  REQUIRE(log_a.size() == 60);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 6; ++i) {
    head += log_a[static_cast<std::size_t>(i)].loss_simple;
    tail += log_a[static_cast<std::size_t>(54 + i)].loss_simple;
  }
  CHECK(tail < head);
  CHECK(log_a[0].lr == doctest::Approx(5e-3));
  CHECK(log_a[59].lr == 1e-2);
  // The t = 1 term is a continuous negative log-likelihood, so L_vlb may be
  // negative; it must stay finite.
  for (const auto& e : log_a) CHECK(std::isfinite(e.loss_vlb));
}

TEST_CASE("base training leaves the model frozen and reports steps") {
  ModelGraph<float> m(tiny());
  std::vector<long> seen;
  train_base(m, moving_scene_source(m.config(), {}), quick(3), [&](const StepLog& s) { seen.push_back(s.step); });
  CHECK(seen == std::vector<long>{1, 2, 3});
  for (const auto& [name, t] : m.parameters()) CHECK_FALSE(t->requires_grad());
}

TEST_CASE("non-finite loss aborts with the step index") {
  ModelGraph<float> m(tiny());
  BatchSource inner = moving_scene_source(m.config(), {});
  int calls = 0;
  BatchSource poisoned = [&](std::mt19937_64& rng, int n) {
    TrainingBatch b = inner(rng, n);
    if (++calls == 3) b.clips[0].data()[5] = std::numeric_limits<double>::quiet_NaN();
    return b;
  };
  try {
    train_base(m, poisoned, quick(5));
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.step() == 3);
    CHECK(std::string(e.what()).find("step 3") != std::string::npos);
  }
}

TEST_CASE("adapter training touches only the adapter") {
  ModelGraph<float> m(tiny());
  train_base(m, moving_scene_source(m.config(), {}), quick(10));
  const auto base_bytes = bytes_of(m);
  auto set = init_adapter_set(m, 2, 7);
  const auto fresh = set;
  const auto log = train_ufo_consistency(m, set, static_scene_source(m.config(), {}), quick(10));
  CHECK(log.size() == 10);
  CHECK(bytes_of(m) == base_bytes);
  CHECK_FALSE(set == fresh);
  CHECK(set.recommended_alpha() == 0.1);
  for (Tensor<float>* p : set.parameters()) CHECK_FALSE(p->requires_grad());

  auto again = init_adapter_set(m, 2, 7);
  train_ufo_consistency(m, again, static_scene_source(m.config(), {}), quick(10));
  CHECK(again == set);

  // Alpha zero is the base model, bit for bit.
  const NoiseSchedule sched = make_schedule(m.config().timesteps, m.config().schedule);
  const AppliedAdapter<float> off{&set, 0.0};
  CHECK(sample<float>(m, 1, std::span(&off, 1), 5, 11, sched) == sample<float>(m, 1, {}, 5, 11, sched));
  const AppliedAdapter<float> on{&set, 1.0};
  CHECK_FALSE(sample<float>(m, 1, std::span(&on, 1), 5, 11, sched) == sample<float>(m, 1, {}, 5, 11, sched));
}

TEST_CASE("style training records its intensity and composes with consistency") {
  ModelGraph<float> m(tiny());
  auto style = init_adapter_set(m, 2, 1, AdapterKind::stylization);
  TrainConfig cfg = quick(4);
  cfg.alpha_train = 0.6;
  train_ufo_style(m, style, styled_scene_source(m.config(), {}, Style::invert), cfg);
  CHECK(style.recommended_alpha() == 0.6);
  CHECK(style.kind() == AdapterKind::stylization);
  auto cons = init_adapter_set(m, 2, 2);
  train_ufo_consistency(m, cons, static_scene_source(m.config(), {}), quick(4));
  const NoiseSchedule sched = make_schedule(m.config().timesteps, m.config().schedule);
  const std::vector<AppliedAdapter<float>> both{{&style, 1.0}, {&cons, 0.1}};
  const VideoTensor v = sample<float>(m, 2, both, 5, 3, sched);
  CHECK(v.frames() == 4);
  CHECK(v.in_unit_range());
}

TEST_CASE("adapter training refuses an unfrozen or mismatched base") {
  ModelGraph<float> m(tiny());
  auto set = init_adapter_set(m, 2, 1);
  m.set_trainable(true);
  CHECK_THROWS_AS(train_ufo_consistency(m, set, static_scene_source(m.config(), {}), quick(1)), ContractError);
  m.set_trainable(false);
  ModelConfig other = tiny();
  other.hidden = 12;
  other.heads = 2;
  const ModelGraph<float> o(other);
  CHECK_THROWS_AS(train_ufo_consistency(o, set, static_scene_source(o.config(), {}), quick(1)), TransferError);
}

TEST_CASE("freeze guard names the mutated tensor") {
  ModelGraph<float> m(tiny());
  const FreezeGuard<float> guard(m);
  CHECK_NOTHROW(guard.check(1));
  const auto sum = guard.combined();
  CHECK(FreezeGuard<float>(m).combined() == sum);
  m.layers()[4].weight[0] += 1.0f;
  try {
    guard.check(7);
    FAIL("expected FreezeViolation");
  } catch (const FreezeViolation& e) {
    CHECK(std::string(e.what()).find("'" + m.layers()[4].name + ".weight'") != std::string::npos);
    CHECK(std::string(e.what()).find("step 7") != std::string::npos);
  }
  CHECK(FreezeGuard<float>(m).combined() != sum);
}

TEST_CASE("a base mutated during adapter training is caught at that step") {
  ModelGraph<float> m(tiny());
  auto set = init_adapter_set(m, 2, 1);
  BatchSource inner = static_scene_source(m.config(), {});
  int calls = 0;
  BatchSource tamper = [&](std::mt19937_64& rng, int n) {
    if (++calls == 2) m.parameters().back().second->operator[](0) += 1.0f;
    return inner(rng, n);
  };
  try {
    train_ufo_consistency(m, set, tamper, quick(4));
    FAIL("expected FreezeViolation");
  } catch (const FreezeViolation& e) {
    CHECK(std::string(e.what()).find("'embed.frame'") != std::string::npos);
    CHECK(std::string(e.what()).find("step 2") != std::string::npos);
  }
}
