// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "core/tensor.hpp"

namespace idr::train {

struct AdamWOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct OptimizerState {
  AdamWOptions options;
  std::vector<std::vector<double>> first_moment;   // one per parameter
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;

  /// Zero moments mirroring `params`.
  static OptimizerState for_params(std::span<const Tensor> params, const AdamWOptions& options);
};

/// One AdamW update: p <- p * (1 - lr * wd), then the bias-corrected Adam
/// step. An empty gradient span counts as zeros. Throws kContract when the
/// parameter, gradient and moment shapes disagree.
void adamw_step(std::span<Tensor> params, std::span<const std::span<const double>> grads, OptimizerState& state);

/// Same, reading each parameter's accumulated gradient.
void adamw_step(std::span<Tensor> params, OptimizerState& state);

}  // namespace idr::train
