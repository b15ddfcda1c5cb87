// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "train/optimizer.hpp"

#include <cmath>
#include <string>

#include "core/error.hpp"

namespace idr::train {

OptimizerState OptimizerState::for_params(std::span<const Tensor> params, const AdamWOptions& options) {
  OptimizerState s;
  s.options = options;
  for (const Tensor& p : params) {
    s.first_moment.emplace_back(p.numel(), 0.0);
    s.second_moment.emplace_back(p.numel(), 0.0);
  }
  return s;
}

void adamw_step(std::span<Tensor> params, std::span<const std::span<const double>> grads, OptimizerState& state) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw Error(ErrorCode::kContract, "optimizer holds " + std::to_string(state.first_moment.size()) +
                                          " moments for " + std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::size_t n = params[i].numel();
    if ((!grads[i].empty() && grads[i].size() != n) || state.first_moment[i].size() != n ||
        state.second_moment[i].size() != n) {
      throw Error(ErrorCode::kContract, "shape mismatch for parameter " + std::to_string(i));
    }
  }
  const AdamWOptions& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  const double decay = 1.0 - o.lr * o.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::span<double> p = params[i].mutable_data();
    std::vector<double>& m = state.first_moment[i];
    std::vector<double>& v = state.second_moment[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double g = grads[i].empty() ? 0.0 : grads[i][j];
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g;
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] = p[j] * decay - o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
}

void adamw_step(std::span<Tensor> params, OptimizerState& state) {
  std::vector<std::span<const double>> grads;
  grads.reserve(params.size());
  for (const Tensor& p : params) grads.push_back(p.grad());
  adamw_step(params, grads, state);
}

}  // namespace idr::train
