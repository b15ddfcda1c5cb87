// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "core/tensor.hpp"

namespace idr {

struct GradCheckOptions {
  double eps = 1e-5;
  // 0 checks every coordinate; otherwise a seeded sample of at most this
  // many coordinates per tensor.
  std::size_t max_coordinates_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst;  // "<tensor index>[<flat index>]" of the largest error
};

/// Compares backward() against central finite differences. The error per
/// coordinate is |analytic - fd| / max(1, |analytic|, |fd|).
///
/// `f` is evaluated with the current parameter values and must return a
/// scalar; parameters are perturbed in place and restored bit-exactly.
/// Leaves the analytic gradients in the parameters' grad buffers.
/// Throws kDeterminism if two unperturbed evaluations differ and
/// kParameter if eps is outside (0, 1e-3].
GradCheckResult grad_check(const std::function<Tensor()>& f, std::span<Tensor> params,
                           const GradCheckOptions& options);

double grad_check(const std::function<Tensor()>& f, std::span<Tensor> params, double eps);

}  // namespace idr
