// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef UFO_TENSOR_HPP
#define UFO_TENSOR_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ufo/errors.hpp"

namespace ufo {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

/// Row-major dense matrix; the storage type behind every tensor.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MatrixXd = Matrix<double>;
using MatrixXf = Matrix<float>;

inline std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

inline Index shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1},
                         [](Index a, Index b) { return a * b; });
}

/// Dense N-d array of reals, stored row-major as a (leading dims) x (last dim)
/// matrix. A 1-d tensor of length n is a 1 x n row.
///
/// Tensors that require grad receive a same-shape `grad()` after
/// `Tape::backward`.
template <typename Scalar>
class Tensor {
 public:
  using MatrixType = Matrix<Scalar>;

  Tensor() = default;

  explicit Tensor(Shape shape, Scalar fill = Scalar(0)) : shape_(std::move(shape)) {
    validate_shape(shape_);
    values_ = MatrixType::Constant(leading(shape_), shape_.back(), fill);
  }

  Tensor(Shape shape, const std::vector<Scalar>& data) : shape_(std::move(shape)) {
    validate_shape(shape_);
    if (static_cast<Index>(data.size()) != shape_numel(shape_)) {
      throw DimensionError("tensor data length " + std::to_string(data.size()) +
                           " does not match shape " + shape_to_string(shape_));
    }
    values_ = Eigen::Map<const MatrixType>(data.data(), leading(shape_), shape_.back());
  }

  /// Wraps a matrix as a 2-d tensor.
  static Tensor from_matrix(MatrixType m) {
    Tensor t;
    t.shape_ = {m.rows(), m.cols()};
    validate_shape(t.shape_);
    t.values_ = std::move(m);
    return t;
  }

  const Shape& shape() const noexcept { return shape_; }
  Index size() const noexcept { return values_.size(); }
  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }

  const MatrixType& matrix() const noexcept { return values_; }
  MatrixType& matrix() noexcept { return values_; }

  Scalar* data() noexcept { return values_.data(); }
  const Scalar* data() const noexcept { return values_.data(); }

  Scalar& operator[](Index i) { return values_.data()[i]; }
  Scalar operator[](Index i) const { return values_.data()[i]; }

  bool requires_grad() const noexcept { return requires_grad_; }
  void set_requires_grad(bool on) {
    requires_grad_ = on;
    if (!on) grad_.reset();
  }

  const std::optional<MatrixType>& grad() const noexcept { return grad_; }
  // Gradients are a side channel filled by Tape::backward; they do not count
  // as part of the tensor's value.
  void zero_grad() const { grad_.reset(); }
  void accumulate_grad(const MatrixType& g) const {
    if (g.rows() != values_.rows() || g.cols() != values_.cols()) {
      throw DimensionError("gradient shape does not match tensor " + shape_to_string(shape_));
    }
    if (grad_) {
      *grad_ += g;
    } else {
      grad_ = g;
    }
  }

  bool all_finite() const { return values_.allFinite(); }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out(shape_);
    out.matrix() = values_.template cast<Other>();
    return out;
  }

 private:
  static Index leading(const Shape& shape) {
    Index n = 1;
    for (std::size_t i = 0; i + 1 < shape.size(); ++i) n *= shape[i];
    return n;
  }

  static void validate_shape(const Shape& shape) {
    if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
    for (Index d : shape) {
      if (d <= 0) throw DimensionError("tensor shape " + shape_to_string(shape) + " has a non-positive extent");
    }
  }

  Shape shape_;
  MatrixType values_;
  bool requires_grad_ = false;
  mutable std::optional<MatrixType> grad_;
};

}  // namespace ufo

#endif  // UFO_TENSOR_HPP
