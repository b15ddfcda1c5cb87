// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "core/tensor.hpp"

namespace idr {

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kRopeBase = 10000.0;

// Linear algebra ------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Elementwise ---------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// x + s*y; when s == 0 the result is x bit for bit.
Tensor add_scaled(const Tensor& x, const Tensor& y, double s);
Tensor gelu(const Tensor& x);

// Broadcasting helpers for [rows x cols] matrices.
Tensor add_row(const Tensor& x, const Tensor& row);      // x[i, :] + row
Tensor mul_rows(const Tensor& x, const Tensor& weights);  // x[i, :] * weights[i]

// Structure -----------------------------------------------------------------

Tensor reshape(const Tensor& x, Shape shape);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
// Row i of a matrix as a rank-1 tensor.
Tensor row(const Tensor& x, std::size_t i);

// Reductions ----------------------------------------------------------------

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor mse(const Tensor& a, const Tensor& b);

// Normalization -------------------------------------------------------------

/// Softmax along `axis`, with max subtraction.
Tensor softmax(const Tensor& x, std::size_t axis);

/// Per-row layer norm of a [rows x d] matrix. Population variance, eps inside
/// the square root. Throws kDegenerate when d < 2.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = kLayerNormEps);

// Attention -----------------------------------------------------------------

struct AttentionMask {
  enum class Kind { kNone, kCausalByFrame };

  Kind kind = Kind::kNone;
  std::vector<int> query_frames;
  std::vector<int> key_frames;

  static AttentionMask none() { return {}; }
  // Self-attention: queries and keys share the frame map.
  static AttentionMask causal(std::vector<int> frames);
  static AttentionMask causal(std::vector<int> query_frames, std::vector<int> key_frames);

  // Key j is hidden from query i iff frame(j) > frame(i).
  bool blocked(std::size_t query, std::size_t key) const {
    return kind == Kind::kCausalByFrame && key_frames[key] > query_frames[query];
  }
};

/// softmax(q k^T / sqrt(d) + mask) v for a single head. Blocked keys are
/// skipped outright, so values behind the mask cannot leak into the result.
/// Throws kAllBlocked when some query sees no key (including an empty key
/// set) and kDimension on shape disagreement.
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionMask& mask);

/// Rotates channel pairs (2i, 2i+1) of each row by position * base^(-2i/d).
Tensor rope_apply(const Tensor& x, std::span<const int> positions, double base = kRopeBase);

}  // namespace idr
