// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "nn/transformer.hpp"

#include "core/error.hpp"
#include "nn/init.hpp"

namespace idr::nn {

void TransformerBlockParams::append_named(const std::string& prefix, NamedTensors& out) const {
  out.emplace_back(prefix + "ln1_gain", ln1_gain);
  out.emplace_back(prefix + "ln1_bias", ln1_bias);
  out.emplace_back(prefix + "wq", wq);
  out.emplace_back(prefix + "wk", wk);
  out.emplace_back(prefix + "wv", wv);
  out.emplace_back(prefix + "wo", wo);
  out.emplace_back(prefix + "ln2_gain", ln2_gain);
  out.emplace_back(prefix + "ln2_bias", ln2_bias);
  out.emplace_back(prefix + "ffn_w1", ffn_w1);
  out.emplace_back(prefix + "ffn_b1", ffn_b1);
  out.emplace_back(prefix + "ffn_w2", ffn_w2);
  out.emplace_back(prefix + "ffn_b2", ffn_b2);
}

TransformerBlockParams init_transformer_block(std::size_t width, Rng& rng, double stddev, bool zero_output) {
  const std::size_t hidden = kFfnExpansion * width;
  TransformerBlockParams p;
  p.ln1_gain = constant_param({width}, 1.0);
  p.ln1_bias = constant_param({width}, 0.0);
  p.wq = normal_param({width, width}, rng, stddev);
  p.wk = normal_param({width, width}, rng, stddev);
  p.wv = normal_param({width, width}, rng, stddev);
  p.wo = zero_output ? constant_param({width, width}, 0.0) : normal_param({width, width}, rng, stddev);
  p.ln2_gain = constant_param({width}, 1.0);
  p.ln2_bias = constant_param({width}, 0.0);
  p.ffn_w1 = normal_param({width, hidden}, rng, stddev);
  p.ffn_b1 = constant_param({hidden}, 0.0);
  p.ffn_w2 = zero_output ? constant_param({hidden, width}, 0.0) : normal_param({hidden, width}, rng, stddev);
  p.ffn_b2 = constant_param({width}, 0.0);
  return p;
}

Tensor transformer_block(const Tensor& x, const TransformerBlockParams& p, std::size_t heads,
                         const AttentionMask& mask, std::span<const int> rope_positions) {
  const std::size_t width = x.dim(1);
  if (width != p.width()) {
    throw Error(ErrorCode::kDimension, "transformer block of width " + std::to_string(p.width()) +
                                           " applied to tokens " + shape_string(x.shape()));
  }
  if (heads == 0 || width % heads != 0) {
    throw Error(ErrorCode::kParameter, "width " + std::to_string(width) + " not divisible into " +
                                           std::to_string(heads) + " heads");
  }
  const std::size_t head_width = width / heads;

  const Tensor normed = layer_norm(x, p.ln1_gain, p.ln1_bias);
  const Tensor q = matmul(normed, p.wq);
  const Tensor k = matmul(normed, p.wk);
  const Tensor v = matmul(normed, p.wv);
  std::vector<Tensor> head_out;
  head_out.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor qh = heads == 1 ? q : slice_cols(q, h * head_width, head_width);
    Tensor kh = heads == 1 ? k : slice_cols(k, h * head_width, head_width);
    const Tensor vh = heads == 1 ? v : slice_cols(v, h * head_width, head_width);
    if (!rope_positions.empty()) {
      qh = rope_apply(qh, rope_positions);
      kh = rope_apply(kh, rope_positions);
    }
    head_out.push_back(scaled_dot_attention(qh, kh, vh, mask));
  }
  const Tensor attended = heads == 1 ? head_out.front() : concat_cols(head_out);
  const Tensor h = add(x, matmul(attended, p.wo));

  const Tensor normed2 = layer_norm(h, p.ln2_gain, p.ln2_bias);
  const Tensor hidden = gelu(add_row(matmul(normed2, p.ffn_w1), p.ffn_b1));
  return add(h, add_row(matmul(hidden, p.ffn_w2), p.ffn_b2));
}

}  // namespace idr::nn
