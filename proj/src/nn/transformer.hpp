// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "core/ops.hpp"
#include "core/random.hpp"
#include "core/tensor.hpp"

namespace idr::nn {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

/// Pre-norm residual block: x + MHA(LN(x)), then h + FFN(LN(h)).
struct TransformerBlockParams {
  Tensor ln1_gain, ln1_bias;
  Tensor wq, wk, wv, wo;  // [d x d]
  Tensor ln2_gain, ln2_bias;
  Tensor ffn_w1, ffn_b1;  // [d x 4d], [4d]
  Tensor ffn_w2, ffn_b2;  // [4d x d], [d]

  std::size_t width() const { return wq.dim(0); }
  void append_named(const std::string& prefix, NamedTensors& out) const;
};

inline constexpr std::size_t kFfnExpansion = 4;

/// Projections ~ N(0, stddev). With `zero_output` the attention and FFN output
/// projections start at zero, which makes the block an exact identity.
TransformerBlockParams init_transformer_block(std::size_t width, Rng& rng, double stddev, bool zero_output);

/// Runs one block. `heads` must divide the width and the per-head width must
/// be even when `rope_positions` is given (RoPE on queries and keys).
Tensor transformer_block(const Tensor& x, const TransformerBlockParams& p, std::size_t heads,
                         const AttentionMask& mask, std::span<const int> rope_positions = {});

}  // namespace idr::nn
