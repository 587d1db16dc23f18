// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef UFO_AUTODIFF_HPP
#define UFO_AUTODIFF_HPP

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ufo/errors.hpp"
#include "ufo/tensor.hpp"

namespace ufo {

template <typename Scalar>
class Tape;

/// Handle to a value recorded on a tape.
template <typename Scalar>
struct Var {
  Tape<Scalar>* tape = nullptr;
  Index id = -1;

  const Matrix<Scalar>& value() const { return tape->value(id); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool needs_grad() const { return tape->needs_grad(id); }
};

enum class BackwardStatus { ok, disconnected };

/// Define-by-run record of primitive operations. One tape per forward pass;
/// `clear()` releases every node.
template <typename Scalar>
class Tape {
 public:
  using MatrixType = Matrix<Scalar>;
  using BackwardFn = std::function<void(Tape&, const MatrixType&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Scalar> constant(MatrixType value) { return push(std::move(value), false, {}); }

  /// Records `t` as an input. Repeated calls with the same tensor return the
  /// same node so that gradients from every use accumulate.
  Var<Scalar> leaf(const Tensor<Scalar>& t) {
    if (auto it = leaves_.find(&t); it != leaves_.end()) return {this, it->second};
    Var<Scalar> v = push(t.matrix(), t.requires_grad(), {});
    nodes_[v.id].leaf = &t;
    leaves_.emplace(&t, v.id);
    return v;
  }

  /// Records an operation result. `fn` receives the gradient of this node and
  /// must route contributions to its inputs via `accumulate`.
  Var<Scalar> record(MatrixType value, bool needs_grad, BackwardFn fn) {
    if (!needs_grad) fn = {};
    return push(std::move(value), needs_grad, std::move(fn));
  }

  const MatrixType& value(Index id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool needs_grad(Index id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

  void accumulate(Index id, const MatrixType& g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  /// Propagates d(loss)/d(node) to every recorded node and deposits the
  /// result into the `grad` of each leaf tensor that requires grad.
  BackwardStatus backward(Var<Scalar> loss) {
    if (loss.tape != this) throw ContractError("backward: loss belongs to another tape");
    const MatrixType& lv = value(loss.id);
    if (lv.rows() != 1 || lv.cols() != 1) {
      throw ContractError("backward: loss must be scalar, got " + std::to_string(lv.rows()) + "x" +
                          std::to_string(lv.cols()));
    }
    visits_ = 0;
    if (!needs_grad(loss.id)) {
      for (Node& n : nodes_) {
        if (n.leaf && n.leaf->requires_grad()) {
          n.leaf->accumulate_grad(MatrixType::Zero(n.value.rows(), n.value.cols()));
        }
      }
      return BackwardStatus::disconnected;
    }
    for (Node& n : nodes_) n.grad.resize(0, 0);
    nodes_[static_cast<std::size_t>(loss.id)].grad = MatrixType::Ones(1, 1);
    for (Index i = loss.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      ++visits_;
      if (!n.needs_grad) continue;
      if (n.grad.size() == 0) n.grad = MatrixType::Zero(n.value.rows(), n.value.cols());
      if (n.backward) {
        // Closures write into other nodes' grads; pass a copy.
        MatrixType g = n.grad;
        n.backward(*this, g);
      }
    }
    for (Node& n : nodes_) {
      if (n.leaf && n.leaf->requires_grad()) {
        n.leaf->accumulate_grad(n.grad.size() ? n.grad
                                              : MatrixType::Zero(n.value.rows(), n.value.cols()));
      }
    }
    return BackwardStatus::ok;
  }

  void clear() {
    nodes_.clear();
    leaves_.clear();
    visits_ = 0;
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t last_backward_visits() const noexcept { return visits_; }

 private:
  struct Node {
    MatrixType value;
    MatrixType grad;
    bool needs_grad = false;
    const Tensor<Scalar>* leaf = nullptr;
    BackwardFn backward;
  };

  Var<Scalar> push(MatrixType value, bool needs_grad, BackwardFn fn) {
    nodes_.push_back(Node{std::move(value), {}, needs_grad, nullptr, std::move(fn)});
    return {this, static_cast<Index>(nodes_.size() - 1)};
  }

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor<Scalar>*, Index> leaves_;
  std::size_t visits_ = 0;
};

namespace ad {

namespace detail {

inline std::string dims(Index r, Index c) { return "[" + std::to_string(r) + "x" + std::to_string(c) + "]"; }

template <typename Scalar>
void require_same_shape(const char* op, const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + dims(a.rows(), a.cols()) + " vs " +
                         dims(b.rows(), b.cols()));
  }
}

template <typename Scalar>
bool any_grad(std::initializer_list<Var<Scalar>> vars) {
  for (const auto& v : vars) {
    if (v.needs_grad()) return true;
  }
  return false;
}

}  // namespace detail

/// a [m x k] * b [k x n].
template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree " + detail::dims(a.rows(), a.cols()) +
                         " * " + detail::dims(b.rows(), b.cols()));
  }
  Matrix<Scalar> out = a.value() * b.value();
  const Index ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), detail::any_grad({a, b}),
                        [ia, ib](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                          if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
                          if (t.needs_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
                        });
}

/// a [m x k] * b^T, with b [n x k]. The affine-layer product x W^T.
template <typename Scalar>
Var<Scalar> matmul_nt(Var<Scalar> a, Var<Scalar> b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: inner dimensions disagree " + detail::dims(a.rows(), a.cols()) +
                         " * " + detail::dims(b.rows(), b.cols()) + "^T");
  }
  Matrix<Scalar> out = a.value() * b.value().transpose();
  const Index ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), detail::any_grad({a, b}),
                        [ia, ib](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                          if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(ib));
                          if (t.needs_grad(ib)) t.accumulate(ib, g.transpose() * t.value(ia));
                        });
}

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_shape("add", a, b);
  Matrix<Scalar> out = a.value() + b.value();
  const Index ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), detail::any_grad({a, b}),
                        [ia, ib](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                          t.accumulate(ia, g);
                          t.accumulate(ib, g);
                        });
}

template <typename Scalar>
Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_shape("sub", a, b);
  Matrix<Scalar> out = a.value() - b.value();
  const Index ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), detail::any_grad({a, b}),
                        [ia, ib](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                          t.accumulate(ia, g);
                          if (t.needs_grad(ib)) t.accumulate(ib, -g);
                        });
}

/// Elementwise product.
template <typename Scalar>
Var<Scalar> mul(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_shape("mul", a, b);
  Matrix<Scalar> out = a.value().cwiseProduct(b.value());
  const Index ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), detail::any_grad({a, b}),
                        [ia, ib](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                          if (t.needs_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
                          if (t.needs_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
                        });
}

/// a * s for a constant s.
template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar s) {
  Matrix<Scalar> out = a.value() * s;
  const Index ia = a.id;
  return a.tape->record(std::move(out), a.needs_grad(),
                        [ia, s](Tape<Scalar>& t, const Matrix<Scalar>& g) { t.accumulate(ia, g * s); });
}

/// a * s where s is a recorded 1x1 value.
template <typename Scalar>
Var<Scalar> mul_scalar(Var<Scalar> a, Var<Scalar> s) {
  if (s.rows() != 1 || s.cols() != 1) {
    throw DimensionError("mul_scalar: scale must be 1x1, got " + detail::dims(s.rows(), s.cols()));
  }
  Matrix<Scalar> out = a.value() * s.value()(0, 0);
  const Index ia = a.id, is = s.id;
  return a.tape->record(std::move(out), detail::any_grad({a, s}),
                        [ia, is](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                          if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(is)(0, 0));
                          if (t.needs_grad(is)) {
                            Matrix<Scalar> gs(1, 1);
                            gs(0, 0) = g.cwiseProduct(t.value(ia)).sum();
                            t.accumulate(is, gs);
                          }
                        });
}

/// a + c and a (.) c for constant matrices c.
template <typename Scalar>
Var<Scalar> add_const(Var<Scalar> a, const Matrix<Scalar>& c) {
  if (a.rows() != c.rows() || a.cols() != c.cols()) {
    throw DimensionError("add_const: shape mismatch " + detail::dims(a.rows(), a.cols()) + " vs " +
                         detail::dims(c.rows(), c.cols()));
  }
  Matrix<Scalar> out = a.value() + c;
  const Index ia = a.id;
  return a.tape->record(std::move(out), a.needs_grad(),
                        [ia](Tape<Scalar>& t, const Matrix<Scalar>& g) { t.accumulate(ia, g); });
}

template <typename Scalar>
Var<Scalar> mul_const(Var<Scalar> a, const Matrix<Scalar>& c) {
  if (a.rows() != c.rows() || a.cols() != c.cols()) {
    throw DimensionError("mul_const: shape mismatch " + detail::dims(a.rows(), a.cols()) + " vs " +
                         detail::dims(c.rows(), c.cols()));
  }
  Matrix<Scalar> out = a.value().cwiseProduct(c);
  const Index ia = a.id;
  return a.tape->record(std::move(out), a.needs_grad(),
                        [ia, c](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                          t.accumulate(ia, g.cwiseProduct(c));
                        });
}

/// a [N x n] + row [1 x n] broadcast over rows.
template <typename Scalar>
Var<Scalar> add_row(Var<Scalar> a, Var<Scalar> row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw DimensionError("add_row: cannot broadcast " + detail::dims(row.rows(), row.cols()) + " over " +
                         detail::dims(a.rows(), a.cols()));
  }
  Matrix<Scalar> out = a.value().rowwise() + row.value().row(0);
  const Index ia = a.id, ir = row.id;
  return a.tape->record(std::move(out), detail::any_grad({a, row}),
                        [ia, ir](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                          t.accumulate(ia, g);
                          if (t.needs_grad(ir)) t.accumulate(ir, g.colwise().sum());
                        });
}

/// a [B*G x n] + rows [B x n]: row b of `rows` is added to the b-th
/// contiguous group of G rows (leading-batch broadcast).
template <typename Scalar>
Var<Scalar> add_grouped_rows(Var<Scalar> a, Var<Scalar> rows) {
  if (rows.cols() != a.cols() || rows.rows() == 0 || a.rows() % rows.rows() != 0) {
    throw DimensionError("add_grouped_rows: cannot broadcast " + detail::dims(rows.rows(), rows.cols()) +
                         " over " + detail::dims(a.rows(), a.cols()));
  }
  const Index groups = rows.rows();
  const Index group = a.rows() / groups;
  Matrix<Scalar> out = a.value();
  for (Index b = 0; b < groups; ++b) out.middleRows(b * group, group).rowwise() += rows.value().row(b);
  const Index ia = a.id, ir = rows.id;
  return a.tape->record(std::move(out), detail::any_grad({a, rows}),
                        [ia, ir, groups, group](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                          t.accumulate(ia, g);
                          if (t.needs_grad(ir)) {
                            Matrix<Scalar> gr(groups, g.cols());
                            for (Index b = 0; b < groups; ++b) gr.row(b) = g.middleRows(b * group, group).colwise().sum();
                            t.accumulate(ir, gr);
                          }
                        });
}

/// x * sigmoid(x).
template <typename Scalar>
Var<Scalar> silu(Var<Scalar> a) {
  const Matrix<Scalar>& x = a.value();
  Matrix<Scalar> out = x.unaryExpr([](Scalar v) { return v / (Scalar(1) + std::exp(-v)); });
  const Index ia = a.id;
  return a.tape->record(std::move(out), a.needs_grad(), [ia](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    const Matrix<Scalar>& xv = t.value(ia);
    Matrix<Scalar> d = xv.unaryExpr([](Scalar v) {
      const Scalar s = Scalar(1) / (Scalar(1) + std::exp(-v));
      return s * (Scalar(1) + v * (Scalar(1) - s));
    });
    t.accumulate(ia, g.cwiseProduct(d));
  });
}

template <typename Scalar>
Var<Scalar> exp(Var<Scalar> a) {
  Matrix<Scalar> out = a.value().array().exp().matrix();
  const Index ia = a.id;
  return a.tape->record(std::move(out), a.needs_grad(), [ia](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    t.accumulate(ia, g.cwiseProduct(t.value(ia).array().exp().matrix()));
  });
}

template <typename Scalar>
Var<Scalar> square(Var<Scalar> a) {
  Matrix<Scalar> out = a.value().cwiseAbs2();
  const Index ia = a.id;
  return a.tape->record(std::move(out), a.needs_grad(), [ia](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    t.accumulate(ia, Scalar(2) * g.cwiseProduct(t.value(ia)));
  });
}

/// Per-row standardization (no affine parameters).
template <typename Scalar>
Var<Scalar> layer_norm(Var<Scalar> a, Scalar eps = Scalar(1e-5)) {
  const Matrix<Scalar>& x = a.value();
  const Index n = x.cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std(x.rows());
  Matrix<Scalar> xhat(x.rows(), n);
  for (Index r = 0; r < x.rows(); ++r) {
    const Scalar mu = x.row(r).mean();
    const Scalar var = (x.row(r).array() - mu).square().mean();
    inv_std(r) = Scalar(1) / std::sqrt(var + eps);
    xhat.row(r) = (x.row(r).array() - mu) * inv_std(r);
  }
  const Index ia = a.id;
  Matrix<Scalar> saved = xhat;
  return a.tape->record(std::move(xhat), a.needs_grad(),
                        [ia, saved = std::move(saved), inv_std](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                          Matrix<Scalar> dx(g.rows(), g.cols());
                          for (Index r = 0; r < g.rows(); ++r) {
                            const Scalar gm = g.row(r).mean();
                            const Scalar gx = g.row(r).cwiseProduct(saved.row(r)).mean();
                            dx.row(r) = (g.row(r).array() - gm - saved.row(r).array() * gx) * inv_std(r);
                          }
                          t.accumulate(ia, dx);
                        });
}

/// Rows of `table` selected by `ids` (embedding lookup).
template <typename Scalar>
Var<Scalar> gather_rows(Var<Scalar> table, std::vector<Index> ids) {
  Matrix<Scalar> out(static_cast<Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) {
      throw DimensionError("gather_rows: index " + std::to_string(ids[i]) + " outside table of " +
                           std::to_string(table.rows()) + " rows");
    }
    out.row(static_cast<Index>(i)) = table.value().row(ids[i]);
  }
  const Index it = table.id;
  const Index trows = table.rows();
  return table.tape->record(std::move(out), table.needs_grad(),
                            [it, trows, ids = std::move(ids)](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                              Matrix<Scalar> gt = Matrix<Scalar>::Zero(trows, g.cols());
                              for (std::size_t i = 0; i < ids.size(); ++i) gt.row(ids[i]) += g.row(static_cast<Index>(i));
                              t.accumulate(it, gt);
                            });
}

template <typename Scalar>
Var<Scalar> sum(Var<Scalar> a) {
  Matrix<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  const Index ia = a.id, r = a.rows(), c = a.cols();
  return a.tape->record(std::move(out), a.needs_grad(), [ia, r, c](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    t.accumulate(ia, Matrix<Scalar>::Constant(r, c, g(0, 0)));
  });
}

template <typename Scalar>
Var<Scalar> mean(Var<Scalar> a) {
  return scale(sum(a), Scalar(1) / static_cast<Scalar>(a.value().size()));
}

/// Same value, no gradient path.
template <typename Scalar>
Var<Scalar> detach(Var<Scalar> a) {
  return a.tape->constant(a.value());
}

/// Rows of a token matrix partitioned into equal-size attention groups;
/// `rows[g * group_size + i]` is the i-th member of group g.
struct AttentionGroups {
  Index group_size = 0;
  std::vector<Index> rows;

  Index count() const { return group_size ? static_cast<Index>(rows.size()) / group_size : 0; }
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> gather(const Matrix<Scalar>& m, const std::vector<Index>& rows) {
  Matrix<Scalar> out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

template <typename Scalar>
Matrix<Scalar> scatter(const Matrix<Scalar>& m, const std::vector<Index>& rows) {
  Matrix<Scalar> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(rows[i]) = m.row(static_cast<Index>(i));
  return out;
}

inline bool is_identity(const std::vector<Index>& rows) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] != static_cast<Index>(i)) return false;
  }
  return true;
}

}  // namespace detail

/// Multi-head softmax attention restricted to each group. q, k, v are
/// [N x width]; heads split the columns evenly.
template <typename Scalar>
Var<Scalar> grouped_attention(Var<Scalar> q, Var<Scalar> k, Var<Scalar> v, const AttentionGroups& groups,
                              Index heads) {
  detail::require_same_shape("attention(q,k)", q, k);
  detail::require_same_shape("attention(q,v)", q, v);
  const Index width = q.cols();
  if (heads <= 0 || width % heads != 0) {
    throw DimensionError("attention: width " + std::to_string(width) + " not divisible by " +
                         std::to_string(heads) + " heads");
  }
  if (groups.group_size <= 0 || static_cast<Index>(groups.rows.size()) != q.rows()) {
    throw DimensionError("attention: groups cover " + std::to_string(groups.rows.size()) + " rows, tensor has " +
                         std::to_string(q.rows()));
  }
  if (q.rows() % groups.group_size != 0) {
    throw DimensionError("attention: " + std::to_string(q.rows()) + " rows do not split into groups of " +
                         std::to_string(groups.group_size));
  }
  const Index dh = width / heads;
  const Index gs = groups.group_size;
  const Index count = groups.count();
  const Scalar inv_sqrt = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
  // Work in group-contiguous row order so each (group, head) is a block.
  auto rows = std::make_shared<const std::vector<Index>>(groups.rows);
  const bool identity = detail::is_identity(*rows);
  auto order = [&](const Matrix<Scalar>& m) { return identity ? m : detail::gather(m, *rows); };
  const Matrix<Scalar> Q = order(q.value());
  const Matrix<Scalar> K = order(k.value());
  const Matrix<Scalar> V = order(v.value());
  Matrix<Scalar> out(Q.rows(), width);
  // Softmax weights for every (group, head), stacked gs rows at a time.
  Matrix<Scalar> probs(count * heads * gs, gs);
  for (Index g = 0; g < count; ++g) {
    for (Index h = 0; h < heads; ++h) {
      auto p = probs.middleRows((g * heads + h) * gs, gs);
      p.noalias() = Q.block(g * gs, h * dh, gs, dh) * K.block(g * gs, h * dh, gs, dh).transpose();
      p *= inv_sqrt;
      for (Index i = 0; i < gs; ++i) {
        const Scalar mx = p.row(i).maxCoeff();
        p.row(i) = (p.row(i).array() - mx).exp();
        p.row(i) /= p.row(i).sum();
      }
      out.block(g * gs, h * dh, gs, dh).noalias() = p * V.block(g * gs, h * dh, gs, dh);
    }
  }
  if (!identity) out = detail::scatter(out, *rows);
  const Index iq = q.id, ik = k.id, iv = v.id;
  const bool need = detail::any_grad({q, k, v});
  if (!need) return q.tape->record(std::move(out), false, {});
  return q.tape->record(
      std::move(out), true,
      [iq, ik, iv, rows, identity, heads, dh, gs, count, inv_sqrt, probs = std::move(probs)](
          Tape<Scalar>& t, const Matrix<Scalar>& gout) {
        auto order = [&](const Matrix<Scalar>& m) { return identity ? m : detail::gather(m, *rows); };
        const Matrix<Scalar> Q = order(t.value(iq));
        const Matrix<Scalar> K = order(t.value(ik));
        const Matrix<Scalar> V = order(t.value(iv));
        const Matrix<Scalar> G = order(gout);
        const bool gq = t.needs_grad(iq), gk = t.needs_grad(ik), gv = t.needs_grad(iv);
        Matrix<Scalar> dQ(Q.rows(), Q.cols()), dK(Q.rows(), Q.cols()), dV(Q.rows(), Q.cols());
        Matrix<Scalar> dp(gs, gs);
        for (Index g = 0; g < count; ++g) {
          for (Index h = 0; h < heads; ++h) {
            const auto p = probs.middleRows((g * heads + h) * gs, gs);
            const auto og = G.block(g * gs, h * dh, gs, dh);
            if (gv) dV.block(g * gs, h * dh, gs, dh).noalias() = p.transpose() * og;
            if (gq || gk) {
              dp.noalias() = og * V.block(g * gs, h * dh, gs, dh).transpose();
              for (Index i = 0; i < gs; ++i) {
                const Scalar dot = dp.row(i).dot(p.row(i));
                dp.row(i) = p.row(i).cwiseProduct((dp.row(i).array() - dot).matrix()) * inv_sqrt;
              }
              if (gq) dQ.block(g * gs, h * dh, gs, dh).noalias() = dp * K.block(g * gs, h * dh, gs, dh);
              if (gk) dK.block(g * gs, h * dh, gs, dh).noalias() = dp.transpose() * Q.block(g * gs, h * dh, gs, dh);
            }
          }
        }
        auto back = [&](const Matrix<Scalar>& m) { return identity ? m : detail::scatter(m, *rows); };
        if (gq) t.accumulate(iq, back(dQ));
        if (gk) t.accumulate(ik, back(dK));
        if (gv) t.accumulate(iv, back(dV));
      });
}

}  // namespace ad
}  // namespace ufo

#endif  // UFO_AUTODIFF_HPP
