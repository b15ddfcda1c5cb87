// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace idr {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

class Tensor;

namespace detail {

struct Node;

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until something accumulates into it
  bool requires_grad = false;
  std::shared_ptr<Node> node;  // null for leaves
};

}  // namespace detail

/// Dense row-major array of doubles. Copies share storage (handle
/// semantics); use clone() for an independent value.
///
/// Tensors produced by an operation whose inputs require gradients carry the
/// node that created them, so backward() can walk the graph from any scalar.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  // Only leaves may be written; recorded outputs must stay reproducible.
  std::span<double> mutable_data();

  double at(std::size_t flat) const { return data()[flat]; }
  double at(std::size_t row, std::size_t col) const;
  double item() const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);
  bool is_leaf() const;

  std::span<const double> grad() const;
  void zero_grad();

  // Deep copy without graph history.
  Tensor clone() const;

  detail::TensorImpl* impl() const noexcept { return impl_.get(); }
  const std::shared_ptr<detail::TensorImpl>& impl_ptr() const noexcept { return impl_; }

 private:
  friend Tensor make_op_output(Shape, std::vector<double>);
  std::shared_ptr<detail::TensorImpl> impl_;
};

// ---------------------------------------------------------------------------
// Operation recording.

struct BackwardContext {
  std::span<const Tensor> inputs;
  std::span<const double> output;
  std::span<const double> grad_output;
  // One entry per input; empty when that input needs no gradient. Backward
  // functions must accumulate (+=): two entries may alias the same buffer.
  std::span<const std::span<double>> grad_inputs;

  bool needs(std::size_t i) const { return !grad_inputs[i].empty(); }
};

using ForwardFn = std::function<std::vector<double>(std::span<const Tensor>)>;
using BackwardFn = std::function<void(const BackwardContext&)>;

namespace detail {

struct Node {
  std::string name;
  std::vector<Tensor> inputs;
  ForwardFn forward;
  BackwardFn backward;
};

}  // namespace detail

/// Runs `forward` on the inputs and, when gradients are enabled and any input
/// requires them, attaches a node so the op participates in backward().
/// Throws kNonFinite if the forward produced NaN or Inf.
Tensor make_op(std::string_view name, std::vector<Tensor> inputs, Shape shape,
               ForwardFn forward, BackwardFn backward);

bool grad_enabled() noexcept;

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Topologically ordered record of the operations that produced a tensor.
class Tape {
 public:
  static Tape record(const Tensor& root);

  std::size_t size() const noexcept { return order_.size(); }
  std::vector<std::string> op_names() const;

  // Recomputes every recorded output from its recorded inputs; returns how
  // many differ from the stored values in any bit.
  std::size_t replay() const;

  // Accumulates d(root)/d(leaf) into every leaf that requires grad. Returns
  // the number of nodes visited.
  std::size_t backward() const;

 private:
  Tensor root_;
  std::vector<Tensor> order_;
};

/// Convenience: Tape::record(loss).backward(). `loss` must be a scalar.
void backward(const Tensor& loss);

}  // namespace idr
