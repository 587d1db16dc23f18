// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef UFO_MODEL_HPP
#define UFO_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ufo/adapter.hpp"
#include "ufo/autodiff.hpp"
#include "ufo/binary_io.hpp"
#include "ufo/schedule.hpp"
#include "ufo/synth.hpp"
#include "ufo/tensor.hpp"
#include "ufo/video.hpp"

namespace ufo {

/// Architecture of the toy video denoiser plus the diffusion settings a
/// checkpoint carries with it.
struct ModelConfig {
  int frames = 8;
  int height = 16;
  int width = 16;
  int channels = 1;
  int patch = 2;
  int hidden = 64;
  int blocks = 2;
  int heads = 4;
  int mlp_ratio = 2;
  int num_conditions = 16;
  int timesteps = 100;
  ScheduleKind schedule = ScheduleKind::cosine;
  std::uint64_t init_seed = 0;

  int patches_y() const { return height / patch; }
  int patches_x() const { return width / patch; }
  int tokens_per_frame() const { return patches_y() * patches_x(); }
  int patch_dim() const { return patch * patch * channels; }

  void validate() const {
    auto fail = [](const std::string& m) { throw ContractError("model config: " + m); };
    if (frames < 1 || height < 1 || width < 1 || channels < 1) fail("video extents must be positive");
    if (patch < 1 || height % patch || width % patch) fail("patch must divide H and W");
    if (hidden < 2 || hidden % 2) fail("hidden width must be even");
    if (heads < 1 || hidden % heads) fail("heads must divide the hidden width");
    if (blocks < 1) fail("need at least one block");
    if (mlp_ratio < 1) fail("mlp_ratio must be >= 1");
    if (num_conditions < 1 || num_conditions > kMaxConditions) fail("num_conditions must lie in 1..32");
    if (timesteps < 2) fail("timesteps must be >= 2");
  }

  bool operator==(const ModelConfig&) const = default;
};

/// A registered mapping layer y = W x + b with W [out x in].
template <typename Scalar>
struct AffineLayer {
  std::string name;
  Tensor<Scalar> weight;
  Tensor<Scalar> bias;
  bool adaptable = false;

  Index out_features() const { return weight.rows(); }
  Index in_features() const { return weight.cols(); }
};

/// Token layout for a batch of B clips: row (b * F + f) * P + p holds patch
/// p of frame f of clip b.
template <typename Scalar>
Matrix<Scalar> patchify(std::span<const VideoTensor* const> clips, int patch) {
  if (clips.empty()) throw ContractError("patchify: empty batch");
  const VideoTensor& first = *clips.front();
  const int F = first.frames(), H = first.height(), W = first.width(), C = first.channels();
  if (H % patch || W % patch) throw DimensionError("patchify: patch does not divide " + first.shape_string());
  const int py = H / patch, px = W / patch, P = py * px;
  Matrix<Scalar> out(static_cast<Index>(clips.size()) * F * P, patch * patch * C);
  for (std::size_t b = 0; b < clips.size(); ++b) {
    const VideoTensor& v = *clips[b];
    if (!v.same_shape(first)) throw DimensionError("patchify: clip " + v.shape_string() + " vs " + first.shape_string());
    for (int f = 0; f < F; ++f)
      for (int iy = 0; iy < py; ++iy)
        for (int ix = 0; ix < px; ++ix) {
          const Index row = (static_cast<Index>(b) * F + f) * P + iy * px + ix;
          Index col = 0;
          for (int dy = 0; dy < patch; ++dy)
            for (int dx = 0; dx < patch; ++dx)
              for (int c = 0; c < C; ++c) out(row, col++) = static_cast<Scalar>(v.at(f, iy * patch + dy, ix * patch + dx, c));
        }
  }
  return out;
}

template <typename Scalar>
std::vector<VideoTensor> unpatchify(const Matrix<Scalar>& tokens, int clips, int F, int H, int W, int C, int patch,
                                    double fps = 24.0) {
  const int py = H / patch, px = W / patch, P = py * px;
  if (tokens.rows() != static_cast<Index>(clips) * F * P || tokens.cols() != patch * patch * C) {
    throw DimensionError("unpatchify: token matrix does not match the requested layout");
  }
  std::vector<VideoTensor> out;
  out.reserve(static_cast<std::size_t>(clips));
  for (int b = 0; b < clips; ++b) {
    VideoTensor v(F, H, W, C, 0.0, fps);
    for (int f = 0; f < F; ++f)
      for (int iy = 0; iy < py; ++iy)
        for (int ix = 0; ix < px; ++ix) {
          const Index row = (static_cast<Index>(b) * F + f) * P + iy * px + ix;
          Index col = 0;
          for (int dy = 0; dy < patch; ++dy)
            for (int dx = 0; dx < patch; ++dx)
              for (int c = 0; c < C; ++c) v.at(f, iy * patch + dy, ix * patch + dx, c) = static_cast<double>(tokens(row, col++));
        }
    out.push_back(std::move(v));
  }
  return out;
}

/// Sinusoidal features of the integer timestep, one row per clip.
template <typename Scalar>
Matrix<Scalar> timestep_features(std::span<const int> timesteps, int width) {
  const int half = width / 2;
  Matrix<Scalar> out(static_cast<Index>(timesteps.size()), width);
  for (std::size_t b = 0; b < timesteps.size(); ++b) {
    for (int k = 0; k < half; ++k) {
      const double freq = std::exp(-std::log(10000.0) * k / half);
      const double arg = timesteps[b] * freq;
      out(static_cast<Index>(b), k) = static_cast<Scalar>(std::cos(arg));
      out(static_cast<Index>(b), half + k) = static_cast<Scalar>(std::sin(arg));
    }
  }
  return out;
}

/// The toy diffusion transformer. Every block applies, in order: condition
/// injection, spatial self-attention within a frame, temporal self-attention
/// across frames at one patch position, and a pointwise network. Heads
/// predict the noise and the log-variance interpolation coefficient.
template <typename Scalar>
class ModelGraph {
 public:
  struct Output {
    Var<Scalar> eps;
    Var<Scalar> sigma;
  };

  explicit ModelGraph(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const Index h = cfg_.hidden;
    const Index pd = cfg_.patch_dim();
    register_layer("patch_embed", h, pd, false);
    register_layer("time.fc1", h, h, false);
    register_layer("time.fc2", h, h, false);
    for (int b = 0; b < cfg_.blocks; ++b) {
      const std::string p = "blocks." + std::to_string(b) + ".";
      for (const char* part : {"spatial", "temporal"}) {
        for (const char* proj : {"q", "k", "v", "o"}) register_layer(p + part + "." + proj, h, h, true);
      }
      register_layer(p + "mlp.fc1", h * cfg_.mlp_ratio, h, true);
      register_layer(p + "mlp.fc2", h, h * cfg_.mlp_ratio, true);
    }
    register_layer("eps_head", pd, h, false);
    register_layer("cov_head", pd, h, false);
    cond_table_ = Tensor<Scalar>({static_cast<Index>(cfg_.num_conditions), h});
    pos_table_ = Tensor<Scalar>({static_cast<Index>(cfg_.tokens_per_frame()), h});
    frame_table_ = Tensor<Scalar>({static_cast<Index>(cfg_.frames), h});
    initialize(cfg_.init_seed);
  }

  const ModelConfig& config() const noexcept { return cfg_; }

  const std::vector<AffineLayer<Scalar>>& layers() const noexcept { return layers_; }
  std::vector<AffineLayer<Scalar>>& layers() noexcept { return layers_; }

  const AffineLayer<Scalar>* find_layer(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &layers_[it->second];
  }

  /// Adds a mapping layer to the registry. Names must be unique.
  AffineLayer<Scalar>& register_layer(const std::string& name, Index out, Index in, bool adaptable) {
    if (index_.count(name)) throw ContractError("layer '" + name + "' is already registered");
    AffineLayer<Scalar> layer;
    layer.name = name;
    layer.weight = Tensor<Scalar>({out, in});
    layer.bias = Tensor<Scalar>({out});
    layer.adaptable = adaptable;
    index_.emplace(name, layers_.size());
    layers_.push_back(std::move(layer));
    return layers_.back();
  }

  /// FNV-1a over the ordered (name, m, n) triples of the layer registry.
  /// Weight values do not enter, so models of one architecture share fingerprints.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& l : layers_) {
      h = io::fnv1a64(l.name + ":" + std::to_string(l.out_features()) + ":" + std::to_string(l.in_features()) + ";", h);
    }
    return h;
  }

  /// Every parameter tensor in registry order: each layer's weight and bias,
  /// then the condition, position and frame tables.
  std::vector<std::pair<std::string, Tensor<Scalar>*>> parameters() {
    std::vector<std::pair<std::string, Tensor<Scalar>*>> out;
    for (auto& l : layers_) {
      out.emplace_back(l.name + ".weight", &l.weight);
      out.emplace_back(l.name + ".bias", &l.bias);
    }
    out.emplace_back("embed.condition", &cond_table_);
    out.emplace_back("embed.position", &pos_table_);
    out.emplace_back("embed.frame", &frame_table_);
    return out;
  }

  std::vector<std::pair<std::string, const Tensor<Scalar>*>> parameters() const {
    std::vector<std::pair<std::string, const Tensor<Scalar>*>> out;
    for (auto& [name, t] : const_cast<ModelGraph*>(this)->parameters()) out.emplace_back(name, t);
    return out;
  }

  Index parameter_count() const {
    Index n = 0;
    for (const auto& [name, t] : parameters()) n += t->size();
    return n;
  }

  void set_trainable(bool on) {
    for (auto& [name, t] : parameters()) t->set_requires_grad(on);
  }

  template <typename Other>
  ModelGraph<Other> cast() const {
    ModelGraph<Other> out(cfg_);
    auto dst = out.parameters();
    auto src = parameters();
    for (std::size_t i = 0; i < src.size(); ++i) *dst[i].second = src[i].second->template cast<Other>();
    return out;
  }

  /// Rejects an adapter set built for a differently shaped model.
  void check_compatible(const UfoAdapterSet<Scalar>& set) const;

  /// Runs the denoiser on a token batch. `timesteps` and `conditions` hold
  /// one entry per clip; adapters at alpha == 0 are not evaluated at all.
  Output forward(Tape<Scalar>& tape, const Matrix<Scalar>& tokens, std::span<const int> timesteps,
                 std::span<const int> conditions, std::span<const AppliedAdapter<Scalar>> adapters = {}) const;

 private:
  void initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& l : layers_) {
      const bool head = l.name == "eps_head" || l.name == "cov_head";
      const double stddev = head ? 0.0 : 1.0 / std::sqrt(static_cast<double>(l.in_features()));
      for (Index i = 0; i < l.weight.size(); ++i) l.weight[i] = static_cast<Scalar>(stddev * normal(rng));
    }
    for (Tensor<Scalar>* table : {&cond_table_, &pos_table_, &frame_table_}) {
      for (Index i = 0; i < table->size(); ++i) table->operator[](i) = static_cast<Scalar>(0.5 * normal(rng));
    }
  }

  const AffineLayer<Scalar>& layer(const std::string& name) const {
    const AffineLayer<Scalar>* l = find_layer(name);
    if (!l) throw ContractError("no layer named '" + name + "'");
    return *l;
  }

  Var<Scalar> apply(const std::string& name, Var<Scalar> x, std::span<const AppliedAdapter<Scalar>> adapters) const {
    const AffineLayer<Scalar>& l = layer(name);
    std::vector<AppliedEntry<Scalar>> entries;
    if (l.adaptable) {
      for (const auto& a : adapters) {
        if (a.alpha == 0.0) continue;
        if (const AdapterEntry<Scalar>* e = a.set->find(name)) entries.push_back({e, static_cast<Scalar>(a.alpha)});
      }
    }
    return adapted_linear<Scalar>(x, l.weight, l.bias, entries);
  }

  ModelConfig cfg_;
  std::vector<AffineLayer<Scalar>> layers_;
  std::unordered_map<std::string, std::size_t> index_;
  Tensor<Scalar> cond_table_;
  Tensor<Scalar> pos_table_;
  Tensor<Scalar> frame_table_;
};

template <typename Scalar>
void ModelGraph<Scalar>::check_compatible(const UfoAdapterSet<Scalar>& set) const {
  for (const auto& e : set.entries()) {
    const AffineLayer<Scalar>* l = find_layer(e.name);
    if (!l || !l->adaptable) {
      throw TransferError("adapter entry '" + e.name + "' [" + std::to_string(e.m) + "x" + std::to_string(e.n) +
                          "] has no adaptable layer in the target model");
    }
    if (l->out_features() != e.m || l->in_features() != e.n) {
      throw TransferError("adapter entry '" + e.name + "' is [" + std::to_string(e.m) + "x" + std::to_string(e.n) +
                          "] but the target layer is [" + std::to_string(l->out_features()) + "x" +
                          std::to_string(l->in_features()) + "]");
    }
  }
  if (set.fingerprint() != fingerprint()) {
    // Entries agree; the registries differ elsewhere. Name the first layer
    // the set does not cover.
    std::string first = "(none)";
    for (const auto& l : layers_) {
      if (l.adaptable && !set.find(l.name)) {
        first = l.name + " [" + std::to_string(l.out_features()) + "x" + std::to_string(l.in_features()) + "]";
        break;
      }
    }
    throw TransferError("fingerprint mismatch: adapter set " + std::to_string(set.fingerprint()) + " vs model " +
                        std::to_string(fingerprint()) + "; first uncovered target layer " + first);
  }
}

template <typename Scalar>
typename ModelGraph<Scalar>::Output ModelGraph<Scalar>::forward(Tape<Scalar>& tape, const Matrix<Scalar>& tokens,
                                                                std::span<const int> timesteps,
                                                                std::span<const int> conditions,
                                                                std::span<const AppliedAdapter<Scalar>> adapters) const {
  const Index B = static_cast<Index>(timesteps.size());
  const Index F = cfg_.frames;
  const Index P = cfg_.tokens_per_frame();
  if (B == 0 || static_cast<Index>(conditions.size()) != B) {
    throw DimensionError("forward: need one timestep and one condition per clip");
  }
  if (tokens.rows() != B * F * P || tokens.cols() != cfg_.patch_dim()) {
    throw DimensionError("forward: token matrix [" + std::to_string(tokens.rows()) + "x" +
                         std::to_string(tokens.cols()) + "] does not match " + std::to_string(B) + " clips of " +
                         std::to_string(F * P) + " tokens x " + std::to_string(cfg_.patch_dim()));
  }
  for (int c : conditions) {
    if (c < 0 || c >= cfg_.num_conditions) throw ConditionError("unknown condition id " + std::to_string(c));
  }
  for (const auto& a : adapters) {
    if (!a.set) throw ContractError("forward: null adapter set");
    check_compatible(*a.set);
  }

  const Index N = B * F * P;
  std::vector<Index> pos_ids(static_cast<std::size_t>(N)), frame_ids(static_cast<std::size_t>(N));
  for (Index r = 0; r < N; ++r) {
    pos_ids[static_cast<std::size_t>(r)] = r % P;
    frame_ids[static_cast<std::size_t>(r)] = (r / P) % F;
  }
  ad::AttentionGroups spatial{P, {}};
  ad::AttentionGroups temporal{F, {}};
  spatial.rows.resize(static_cast<std::size_t>(N));
  temporal.rows.reserve(static_cast<std::size_t>(N));
  for (Index r = 0; r < N; ++r) spatial.rows[static_cast<std::size_t>(r)] = r;
  for (Index b = 0; b < B; ++b)
    for (Index p = 0; p < P; ++p)
      for (Index f = 0; f < F; ++f) temporal.rows.push_back((b * F + f) * P + p);

  Var<Scalar> h = apply("patch_embed", tape.constant(tokens), {});
  h = ad::add(h, ad::gather_rows(tape.leaf(pos_table_), std::move(pos_ids)));
  h = ad::add(h, ad::gather_rows(tape.leaf(frame_table_), std::move(frame_ids)));

  Var<Scalar> e = tape.constant(timestep_features<Scalar>(timesteps, cfg_.hidden));
  e = apply("time.fc2", ad::silu(apply("time.fc1", e, {})), {});
  std::vector<Index> cond_ids(conditions.begin(), conditions.end());
  e = ad::add(e, ad::gather_rows(tape.leaf(cond_table_), std::move(cond_ids)));

  for (int blk = 0; blk < cfg_.blocks; ++blk) {
    const std::string p = "blocks." + std::to_string(blk) + ".";
    h = ad::add_grouped_rows(h, e);
    for (const auto& [part, groups] : {std::pair{"spatial", &spatial}, std::pair{"temporal", &temporal}}) {
      const std::string base = p + part + ".";
      Var<Scalar> a = ad::layer_norm(h);
      Var<Scalar> q = apply(base + "q", a, adapters);
      Var<Scalar> k = apply(base + "k", a, adapters);
      Var<Scalar> v = apply(base + "v", a, adapters);
      Var<Scalar> att = ad::grouped_attention(q, k, v, *groups, static_cast<Index>(cfg_.heads));
      h = ad::add(h, apply(base + "o", att, adapters));
    }
    Var<Scalar> a = ad::layer_norm(h);
    h = ad::add(h, apply(p + "mlp.fc2", ad::silu(apply(p + "mlp.fc1", a, adapters)), adapters));
  }
  h = ad::add_grouped_rows(h, e);
  Var<Scalar> out = ad::layer_norm(h);
  return {apply("eps_head", out, {}), apply("cov_head", out, {})};
}

}  // namespace ufo

#endif  // UFO_MODEL_HPP
