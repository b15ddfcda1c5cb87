// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "core/error.hpp"

namespace idr {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void validate_shape(const Shape& shape) {
  for (std::size_t d : shape) {
    if (d == 0) throw Error(ErrorCode::kDimension, "zero-sized dimension in " + shape_string(shape));
  }
}

thread_local bool g_grad_enabled = true;

}  // namespace

Tensor::Tensor(Shape shape, double fill) {
  validate_shape(shape);
  impl_ = std::make_shared<detail::TensorImpl>();
  impl_->data.assign(shape_numel(shape), fill);
  impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> values) {
  validate_shape(shape);
  if (shape_numel(shape) != values.size()) {
    throw Error(ErrorCode::kDimension, "shape " + shape_string(shape) + " does not hold " +
                                           std::to_string(values.size()) + " values");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "tensor constructed from non-finite value");
  }
  impl_ = std::make_shared<detail::TensorImpl>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(values);
}

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw Error(ErrorCode::kDimension, "ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(values));
}

const Shape& Tensor::shape() const {
  if (!impl_) throw Error(ErrorCode::kContract, "use of undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw Error(ErrorCode::kDimension, "axis " + std::to_string(axis) + " out of range for " + shape_string(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return shape_numel(shape()); }

std::span<const double> Tensor::data() const {
  shape();
  return impl_->data;
}

std::span<double> Tensor::mutable_data() {
  shape();
  if (impl_->node) throw Error(ErrorCode::kContract, "cannot write to a recorded operation output");
  return impl_->data;
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2) throw Error(ErrorCode::kRank, "at(row, col) on tensor " + shape_string(shape()));
  return impl_->data[row * impl_->shape[1] + col];
}

double Tensor::item() const {
  if (numel() != 1) throw Error(ErrorCode::kRank, "item() on non-scalar tensor " + shape_string(shape()));
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  shape();
  if (impl_->node && !on) throw Error(ErrorCode::kContract, "recorded outputs always require grad");
  impl_->requires_grad = on;
  return *this;
}

bool Tensor::is_leaf() const { return impl_ && !impl_->node; }

std::span<const double> Tensor::grad() const {
  shape();
  return impl_->grad;
}

void Tensor::zero_grad() {
  shape();
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
  Tensor out;
  out.impl_ = std::make_shared<detail::TensorImpl>();
  out.impl_->shape = shape();
  out.impl_->data = impl_->data;
  return out;
}

Tensor make_op_output(Shape shape, std::vector<double> values) {
  Tensor t;
  t.impl_ = std::make_shared<detail::TensorImpl>();
  t.impl_->shape = std::move(shape);
  t.impl_->data = std::move(values);
  return t;
}

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor make_op(std::string_view name, std::vector<Tensor> inputs, Shape shape, ForwardFn forward,
               BackwardFn backward) {
  validate_shape(shape);
  std::vector<double> values = forward(inputs);
  if (values.size() != shape_numel(shape)) {
    throw Error(ErrorCode::kContract, std::string(name) + ": forward produced wrong element count");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, std::string(name) + " produced a non-finite value");
  }
  Tensor out = make_op_output(std::move(shape), std::move(values));
  bool track = false;
  if (g_grad_enabled) {
    for (const Tensor& in : inputs) track = track || in.requires_grad();
  }
  if (track) {
    auto node = std::make_shared<detail::Node>();
    node->name = std::string(name);
    node->inputs = std::move(inputs);
    node->forward = std::move(forward);
    node->backward = std::move(backward);
    out.impl()->node = std::move(node);
    out.impl()->requires_grad = true;
  }
  return out;
}

// ---------------------------------------------------------------------------

Tape Tape::record(const Tensor& root) {
  Tape tape;
  tape.root_ = root;
  if (!root.defined() || !root.impl()->node) return tape;

  // Iterative post-order DFS: inputs are emitted before their consumers.
  std::unordered_set<const detail::TensorImpl*> seen;
  std::vector<std::pair<Tensor, std::size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root.impl());
  while (!stack.empty()) {
    auto& [t, next] = stack.back();
    const auto& inputs = t.impl()->node->inputs;
    if (next < inputs.size()) {
      const Tensor& in = inputs[next++];
      if (in.impl()->node && seen.insert(in.impl()).second) stack.emplace_back(in, 0);
    } else {
      tape.order_.push_back(t);
      stack.pop_back();
    }
  }
  return tape;
}

std::vector<std::string> Tape::op_names() const {
  std::vector<std::string> names;
  names.reserve(order_.size());
  for (const Tensor& t : order_) names.push_back(t.impl()->node->name);
  return names;
}

std::size_t Tape::replay() const {
  std::size_t mismatches = 0;
  for (const Tensor& t : order_) {
    const auto& node = *t.impl()->node;
    const std::vector<double> again = node.forward(node.inputs);
    const auto& stored = t.impl()->data;
    if (again.size() != stored.size() ||
        std::memcmp(again.data(), stored.data(), stored.size() * sizeof(double)) != 0) {
      ++mismatches;
    }
  }
  return mismatches;
}

std::size_t Tape::backward() const {
  if (!root_.defined()) throw Error(ErrorCode::kContract, "backward on undefined tensor");
  if (root_.numel() != 1) {
    throw Error(ErrorCode::kRank, "backward requires a scalar loss, got " + shape_string(root_.shape()));
  }
  if (!root_.requires_grad()) return 0;
  if (!root_.impl()->node) {
    auto& g = root_.impl()->grad;
    if (g.empty()) g.assign(1, 0.0);
    g[0] += 1.0;
    return 0;
  }

  std::unordered_map<const detail::TensorImpl*, std::vector<double>> pending;
  pending[root_.impl()] = {1.0};
  std::size_t visited = 0;
  std::vector<std::span<double>> grad_spans;

  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    detail::TensorImpl* impl = it->impl();
    ++visited;
    auto found = pending.find(impl);
    if (found == pending.end()) continue;
    std::vector<double> grad_out = std::move(found->second);
    pending.erase(found);

    const detail::Node& node = *impl->node;
    grad_spans.assign(node.inputs.size(), {});
    for (std::size_t i = 0; i < node.inputs.size(); ++i) {
      detail::TensorImpl* in = node.inputs[i].impl();
      if (in->node) {
        auto& buf = pending[in];
        if (buf.empty()) buf.assign(in->data.size(), 0.0);
        grad_spans[i] = buf;
      } else if (in->requires_grad) {
        if (in->grad.empty()) in->grad.assign(in->data.size(), 0.0);
        grad_spans[i] = in->grad;
      }
    }
    BackwardContext ctx{node.inputs, impl->data, grad_out, grad_spans};
    node.backward(ctx);
  }
  return visited;
}

void backward(const Tensor& loss) { Tape::record(loss).backward(); }

}  // namespace idr
