// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "core/error.hpp"
#include "core/random.hpp"

namespace idr {

namespace {

double evaluate(const std::function<Tensor()>& f) {
  NoGradGuard no_grad;
  const Tensor y = f();
  if (y.numel() != 1) throw Error(ErrorCode::kRank, "grad_check function must return a scalar");
  return y.item();
}

std::vector<std::size_t> pick_coordinates(std::size_t n, const GradCheckOptions& options, std::size_t tensor_index) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (options.max_coordinates_per_tensor == 0 || n <= options.max_coordinates_per_tensor) return idx;
  Rng rng(mix_seed(options.seed, tensor_index));
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < options.max_coordinates_per_tensor; ++i) {
    const std::size_t j = i + rng.uniform_int(0, n - i - 1);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(options.max_coordinates_per_tensor);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor()>& f, std::span<Tensor> params,
                           const GradCheckOptions& options) {
  if (!(options.eps > 0.0 && options.eps <= 1e-3)) {
    throw Error(ErrorCode::kParameter, "grad_check eps must lie in (0, 1e-3]");
  }
  for (Tensor& p : params) {
    if (!p.is_leaf()) throw Error(ErrorCode::kContract, "grad_check parameters must be leaves");
    p.set_requires_grad(true);
    p.zero_grad();
  }

  const double first = evaluate(f);
  const double second = evaluate(f);
  if (first != second) {
    throw Error(ErrorCode::kDeterminism, "function returned different values for identical inputs");
  }

  {
    const Tensor y = f();
    if (y.numel() != 1) throw Error(ErrorCode::kRank, "grad_check function must return a scalar");
    backward(y);
  }

  GradCheckResult result;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor& p = params[t];
    const std::vector<double> analytic = p.grad().empty() ? std::vector<double>(p.numel(), 0.0)
                                                          : std::vector<double>(p.grad().begin(), p.grad().end());
    for (std::size_t i : pick_coordinates(p.numel(), options, t)) {
      auto values = p.mutable_data();
      const double saved = values[i];
      values[i] = saved + options.eps;
      const double up = evaluate(f);
      values[i] = saved - options.eps;
      const double down = evaluate(f);
      values[i] = saved;
      const double fd = (up - down) / (2.0 * options.eps);
      const double err =
          std::abs(analytic[i] - fd) / std::max({1.0, std::abs(analytic[i]), std::abs(fd)});
      ++result.coordinates;
      if (result.worst.empty() || err > result.max_error) {
        result.max_error = err;
        result.worst = std::to_string(t) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

double grad_check(const std::function<Tensor()>& f, std::span<Tensor> params, double eps) {
  GradCheckOptions options;
  options.eps = eps;
  return grad_check(f, params, options).max_error;
}

}  // namespace idr
