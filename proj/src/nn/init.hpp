// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "core/random.hpp"
#include "core/tensor.hpp"

namespace idr::nn {

inline constexpr double kInitStd = 0.02;

inline Tensor normal_param(Shape shape, Rng& rng, double stddev = kInitStd) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.normal(0.0, stddev);
  Tensor t(std::move(shape), std::move(v));
  t.set_requires_grad(true);
  return t;
}

inline Tensor constant_param(Shape shape, double value) {
  Tensor t(std::move(shape), value);
  t.set_requires_grad(true);
  return t;
}

}  // namespace idr::nn
