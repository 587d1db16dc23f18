// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef UFO_ADAPTER_HPP
#define UFO_ADAPTER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ufo/autodiff.hpp"
#include "ufo/errors.hpp"
#include "ufo/tensor.hpp"

namespace ufo {

enum class AdapterKind : std::uint8_t { consistency = 0, stylization = 1 };

inline std::string to_string(AdapterKind k) { return k == AdapterKind::consistency ? "consistency" : "stylization"; }

inline AdapterKind adapter_kind_from_string(const std::string& s) {
  if (s == "consistency") return AdapterKind::consistency;
  if (s == "stylization" || s == "style") return AdapterKind::stylization;
  throw ContractError("unknown adapter kind '" + s + "'");
}

/// Inference intensity stored with a set: low for consistency sets, the
/// training intensity for stylization sets.
inline double default_recommended_alpha(AdapterKind k) { return k == AdapterKind::consistency ? 0.1 : 1.0; }

/// Detection/correction pair for one mapping layer W [m x n]:
///   y = W x + b + alpha * beta * v_cor (v_det^T x)
/// with v_det [n x d], v_cor [m x d] and a learned scalar beta.
template <typename Scalar>
struct AdapterEntry {
  std::string name;
  Index m = 0;
  Index n = 0;
  Tensor<Scalar> v_det;
  Tensor<Scalar> v_cor;
  Tensor<Scalar> beta;

  Index rank() const { return v_det.cols(); }
  Index parameter_count() const { return rank() * (m + n) + 1; }
  Scalar beta_value() const { return beta[0]; }
};

/// One UFO: adapter entries keyed by layer name plus the fingerprint of the
/// model they were built for.
template <typename Scalar>
class UfoAdapterSet {
 public:
  UfoAdapterSet() = default;
  UfoAdapterSet(std::uint64_t fingerprint, int rank, AdapterKind kind, double recommended_alpha)
      : fingerprint_(fingerprint), rank_(rank), kind_(kind), recommended_alpha_(recommended_alpha) {
    if (rank < 1) throw ContractError("adapter rank d must be >= 1, got " + std::to_string(rank));
  }

  std::uint64_t fingerprint() const noexcept { return fingerprint_; }
  int rank() const noexcept { return rank_; }
  AdapterKind kind() const noexcept { return kind_; }
  double recommended_alpha() const noexcept { return recommended_alpha_; }
  void set_recommended_alpha(double a) { recommended_alpha_ = a; }

  /// Appends a zero entry for a layer of shape m x n.
  AdapterEntry<Scalar>& add_entry(const std::string& name, Index m, Index n) {
    if (index_.count(name)) throw ContractError("duplicate adapter entry '" + name + "'");
    if (m < 1 || n < 1) throw DimensionError("adapter entry '" + name + "' has empty shape");
    AdapterEntry<Scalar> e;
    e.name = name;
    e.m = m;
    e.n = n;
    e.v_det = Tensor<Scalar>({n, static_cast<Index>(rank_)});
    e.v_cor = Tensor<Scalar>({m, static_cast<Index>(rank_)});
    e.beta = Tensor<Scalar>({1}, Scalar(1));
    index_.emplace(name, entries_.size());
    entries_.push_back(std::move(e));
    return entries_.back();
  }

  const std::vector<AdapterEntry<Scalar>>& entries() const noexcept { return entries_; }
  std::vector<AdapterEntry<Scalar>>& entries() noexcept { return entries_; }

  const AdapterEntry<Scalar>* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &entries_[it->second];
  }

  /// Sum over entries of d * (m + n) + 1.
  Index parameter_count() const {
    Index total = 0;
    for (const auto& e : entries_) total += e.parameter_count();
    return total;
  }

  std::vector<Tensor<Scalar>*> parameters() {
    std::vector<Tensor<Scalar>*> out;
    for (auto& e : entries_) {
      out.push_back(&e.beta);
      out.push_back(&e.v_det);
      out.push_back(&e.v_cor);
    }
    return out;
  }

  void set_trainable(bool on) {
    for (Tensor<Scalar>* p : parameters()) p->set_requires_grad(on);
  }

  /// Shapes agree with each entry's (m, n) and share one rank.
  void validate() const {
    for (const auto& e : entries_) {
      if (e.v_det.rows() != e.n || e.v_det.cols() != rank_ || e.v_cor.rows() != e.m || e.v_cor.cols() != rank_ ||
          e.beta.size() != 1) {
        throw DimensionError("adapter entry '" + e.name + "' does not match its declared shape");
      }
    }
  }

  template <typename Other>
  UfoAdapterSet<Other> cast() const {
    UfoAdapterSet<Other> out(fingerprint_, rank_, kind_, recommended_alpha_);
    for (const auto& e : entries_) {
      auto& o = out.add_entry(e.name, e.m, e.n);
      o.v_det = e.v_det.template cast<Other>();
      o.v_cor = e.v_cor.template cast<Other>();
      o.beta = e.beta.template cast<Other>();
    }
    return out;
  }

  /// Field-for-field, bit-exact equality.
  bool operator==(const UfoAdapterSet& o) const {
    if (fingerprint_ != o.fingerprint_ || rank_ != o.rank_ || kind_ != o.kind_ ||
        recommended_alpha_ != o.recommended_alpha_ || entries_.size() != o.entries_.size()) {
      return false;
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& a = entries_[i];
      const auto& b = o.entries_[i];
      if (a.name != b.name || a.m != b.m || a.n != b.n) return false;
      if (a.v_det.matrix() != b.v_det.matrix() || a.v_cor.matrix() != b.v_cor.matrix() ||
          a.beta.matrix() != b.beta.matrix()) {
        return false;
      }
    }
    return true;
  }

 private:
  std::uint64_t fingerprint_ = 0;
  int rank_ = 1;
  AdapterKind kind_ = AdapterKind::consistency;
  double recommended_alpha_ = 0.1;
  std::vector<AdapterEntry<Scalar>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// An adapter set attached at a global intensity.
template <typename Scalar>
struct AppliedAdapter {
  const UfoAdapterSet<Scalar>* set = nullptr;
  double alpha = 0.0;
};

/// One entry's contribution to a layer at intensity alpha.
template <typename Scalar>
struct AppliedEntry {
  const AdapterEntry<Scalar>* entry = nullptr;
  Scalar alpha = Scalar(0);
};

namespace detail {

template <typename Scalar>
void check_entry_shape(const AdapterEntry<Scalar>& e, Index m, Index n) {
  if (e.m != m || e.n != n) {
    throw DimensionError("adapter entry '" + e.name + "' is [" + std::to_string(e.m) + "x" + std::to_string(e.n) +
                         "] but the layer is [" + std::to_string(m) + "x" + std::to_string(n) + "]");
  }
}

}  // namespace detail

/// Adapted affine map on a batch of row vectors x [N x n]:
///   y = x W^T + bias + sum_i alpha_i beta_i (x v_det,i) v_cor,i^T.
/// Entries at alpha == 0 are skipped, so the result is then bit-identical to
/// the base layer.
template <typename Scalar>
Matrix<Scalar> composed_linear(const Matrix<Scalar>& W, const Matrix<Scalar>& bias, const Matrix<Scalar>& x,
                               std::span<const AppliedEntry<Scalar>> entries) {
  if (x.cols() != W.cols()) {
    throw DimensionError("adapted_linear: input width " + std::to_string(x.cols()) + " vs layer [" +
                         std::to_string(W.rows()) + "x" + std::to_string(W.cols()) + "]");
  }
  if (bias.rows() != 1 || bias.cols() != W.rows()) throw DimensionError("adapted_linear: bias must be 1 x m");
  Matrix<Scalar> y = x * W.transpose();
  y.rowwise() += bias.row(0);
  for (const auto& ae : entries) {
    if (ae.alpha == Scalar(0)) continue;
    detail::check_entry_shape(*ae.entry, W.rows(), W.cols());
    // Scale the rank-d detection, not the m-wide correction.
    Matrix<Scalar> detected = x * ae.entry->v_det.matrix();
    detected *= ae.entry->beta_value();
    detected *= ae.alpha;
    y.noalias() += detected * ae.entry->v_cor.matrix().transpose();
  }
  return y;
}

template <typename Scalar>
Matrix<Scalar> adapted_linear(const Matrix<Scalar>& W, const Matrix<Scalar>& bias, const Matrix<Scalar>& x,
                              const AdapterEntry<Scalar>& entry, Scalar alpha) {
  const AppliedEntry<Scalar> one{&entry, alpha};
  return composed_linear<Scalar>(W, bias, x, std::span<const AppliedEntry<Scalar>>(&one, 1));
}

/// Recorded version of `composed_linear`; gradients reach W, bias and every
/// entry tensor that requires grad.
template <typename Scalar>
Var<Scalar> adapted_linear(Var<Scalar> x, const Tensor<Scalar>& W, const Tensor<Scalar>& bias,
                           std::span<const AppliedEntry<Scalar>> entries) {
  Tape<Scalar>& tape = *x.tape;
  Var<Scalar> y = ad::add_row(ad::matmul_nt(x, tape.leaf(W)), tape.leaf(bias));
  for (const auto& ae : entries) {
    if (ae.alpha == Scalar(0)) continue;
    detail::check_entry_shape(*ae.entry, W.rows(), W.cols());
    Var<Scalar> detected = ad::matmul(x, tape.leaf(ae.entry->v_det));
    detected = ad::scale(ad::mul_scalar(detected, tape.leaf(ae.entry->beta)), ae.alpha);
    y = ad::add(y, ad::matmul_nt(detected, tape.leaf(ae.entry->v_cor)));
  }
  return y;
}

/// Checks dy = W dx + alpha beta ((v_det^T x_t) v_cor - (v_det^T x_tn) v_cor)
/// by evaluating both sides independently; returns the max abs residual.
template <typename Scalar>
Scalar delta_identity_check(const Matrix<Scalar>& x_t, const Matrix<Scalar>& x_tn, const Matrix<Scalar>& W,
                            const AdapterEntry<Scalar>& entry, Scalar alpha) {
  if (x_t.rows() != x_tn.rows() || x_t.cols() != x_tn.cols()) {
    throw DimensionError("delta_identity_check: inputs differ in shape");
  }
  const Matrix<Scalar> bias = Matrix<Scalar>::Zero(1, W.rows());
  const Matrix<Scalar> dy = adapted_linear<Scalar>(W, bias, x_t, entry, alpha) -
                            adapted_linear<Scalar>(W, bias, x_tn, entry, alpha);
  const Matrix<Scalar> dx = x_t - x_tn;
  const Scalar ab = alpha * entry.beta_value();
  const Matrix<Scalar> corr_t = (x_t * entry.v_det.matrix()) * entry.v_cor.matrix().transpose();
  const Matrix<Scalar> corr_tn = (x_tn * entry.v_det.matrix()) * entry.v_cor.matrix().transpose();
  const Matrix<Scalar> rhs = dx * W.transpose() + ab * (corr_t - corr_tn);
  if (dy.size() == 0) return Scalar(0);
  return (dy - rhs).cwiseAbs().maxCoeff();
}

}  // namespace ufo

#endif  // UFO_ADAPTER_HPP
