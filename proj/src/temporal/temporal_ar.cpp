// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "temporal/temporal_ar.hpp"

#include <cmath>

#include "core/error.hpp"
#include "core/ops.hpp"
#include "nn/init.hpp"

namespace idr::temporal {

Tensor Chunk::tokens() const {
  if (!conditioned()) {
    throw Error(ErrorCode::kTeacherForcing, "chunk " + std::to_string(index) + " has no conditioning frame");
  }
  return concat_rows({conditioning, payload});
}

std::vector<int> Chunk::frame_indices() const {
  std::vector<int> out;
  out.reserve((frames.size() + 1) * tokens_per_frame);
  out.insert(out.end(), tokens_per_frame, frames.front() - 1);
  for (int f : frames) out.insert(out.end(), tokens_per_frame, f);
  return out;
}

void PsiParams::append_named(const std::string& prefix, nn::NamedTensors& out) const {
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].append_named(prefix + std::to_string(i) + ".", out);
}

void TamParams::append_named(const std::string& prefix, nn::NamedTensors& out) const {
  psi.append_named(prefix + "psi.", out);
  phi.append_named(prefix + "phi.", out);
  out.emplace_back(prefix + "start_tokens", start_tokens);
}

std::vector<std::pair<std::string, Shape>> tam_param_shapes(const TamDims& d) {
  const std::size_t w = d.latent_dim, h = nn::kFfnExpansion * w;
  std::vector<std::pair<std::string, Shape>> out;
  for (std::size_t i = 0; i < d.layers; ++i) {
    const std::string p = "psi." + std::to_string(i) + ".";
    for (const char* n : {"ln1_gain", "ln1_bias"}) out.push_back({p + n, {w}});
    for (const char* n : {"wq", "wk", "wv", "wo"}) out.push_back({p + n, {w, w}});
    for (const char* n : {"ln2_gain", "ln2_bias"}) out.push_back({p + n, {w}});
    out.push_back({p + "ffn_w1", {w, h}});
    out.push_back({p + "ffn_b1", {h}});
    out.push_back({p + "ffn_w2", {h, w}});
    out.push_back({p + "ffn_b2", {w}});
  }
  out.push_back({"phi.query", {w, d.inner_dim}});
  out.push_back({"phi.key", {w, d.inner_dim}});
  out.push_back({"phi.value", {w, w}});
  out.push_back({"phi.output", {w, w}});
  out.push_back({"start_tokens", {d.tokens_per_frame, w}});
  return out;
}

TamParams init_tam(const TamDims& d, Rng& rng, double stddev, double beta, bool zero_outputs) {
  if (d.heads == 0 || d.latent_dim % d.heads != 0) {
    throw Error(ErrorCode::kDimension, "latent width " + std::to_string(d.latent_dim) + " not divisible by " +
                                           std::to_string(d.heads) + " heads");
  }
  TamParams p;
  p.psi.heads = d.heads;
  for (std::size_t i = 0; i < d.layers; ++i) {
    p.psi.layers.push_back(nn::init_transformer_block(d.latent_dim, rng, stddev, zero_outputs));
  }
  p.phi = router::init_phi(d.latent_dim, d.latent_dim, d.inner_dim, rng, stddev, zero_outputs);
  p.start_tokens = nn::constant_param({d.tokens_per_frame, d.latent_dim}, 0.0);
  p.beta = beta;
  return p;
}

std::vector<Chunk> split_chunks(const LatentVideo& video, std::size_t chunks) {
  video.validate();
  if (chunks == 0 || video.frames % chunks != 0) {
    throw Error(ErrorCode::kChunking, "cannot split " + std::to_string(video.frames) + " frames into " +
                                          std::to_string(chunks) + " equal chunks");
  }
  const std::size_t per = video.frames / chunks, s = video.tokens_per_frame;
  std::vector<Chunk> out;
  out.reserve(chunks);
  for (std::size_t k = 0; k < chunks; ++k) {
    Chunk c;
    c.payload = slice_rows(video.tokens, k * per * s, per * s);
    for (std::size_t f = 0; f < per; ++f) c.frames.push_back(static_cast<int>(k * per + f));
    c.tokens_per_frame = s;
    c.index = k + 1;
    out.push_back(std::move(c));
  }
  return out;
}

LatentVideo join_chunks(const std::vector<Chunk>& chunks) {
  if (chunks.empty()) throw Error(ErrorCode::kChunking, "no chunks to join");
  std::vector<Tensor> parts;
  std::size_t frames = 0;
  for (const Chunk& c : chunks) {
    parts.push_back(c.payload);
    frames += c.payload_frames();
  }
  return {concat_rows(parts), frames, chunks.front().tokens_per_frame};
}

Tensor psi_forward(const Tensor& tokens, std::span<const int> frame_indices, const PsiParams& psi) {
  if (tokens.rank() != 2 || frame_indices.size() != tokens.dim(0)) {
    throw Error(ErrorCode::kDimension, "psi tokens " + shape_string(tokens.shape()) + " with " +
                                           std::to_string(frame_indices.size()) + " frame indices");
  }
  std::vector<int> positions(frame_indices.size());
  for (std::size_t i = 0; i < frame_indices.size(); ++i) {
    if (i > 0 && frame_indices[i] < frame_indices[i - 1]) {
      throw Error(ErrorCode::kOrdering, "frame index decreases at token " + std::to_string(i));
    }
    positions[i] = frame_indices[i] - kStartFrame;
  }
  const AttentionMask mask = AttentionMask::causal(std::vector<int>(frame_indices.begin(), frame_indices.end()));
  Tensor h = tokens;
  for (const nn::TransformerBlockParams& layer : psi.layers) h = nn::transformer_block(h, layer, psi.heads, mask, positions);
  return h;
}

RefinedChunk refine_chunk(const Tensor& context, std::span<const int> context_frames, const Chunk& current,
                          const TamParams& params) {
  if (!std::isfinite(params.beta)) throw Error(ErrorCode::kParameter, "beta must be finite");
  const Tensor queries = current.tokens();
  const Tensor bias = router::cross_attention_phi(psi_forward(context, context_frames, params.psi), queries, params.phi);
  const std::size_t s = current.tokens_per_frame;
  RefinedChunk out{current, bias};
  out.enhanced.payload = add_scaled(current.payload, slice_rows(bias, s, current.payload.dim(0)), params.beta);
  return out;
}

LatentVideo temporal_refine(const LatentVideo& video, const TamParams& params, std::size_t chunks) {
  std::vector<Chunk> parts = split_chunks(video, chunks);
  if (params.start_tokens.shape() != Shape{video.tokens_per_frame, video.channels()}) {
    throw Error(ErrorCode::kDimension, "start tokens " + shape_string(params.start_tokens.shape()) +
                                           " do not match one frame " +
                                           shape_string({video.tokens_per_frame, video.channels()}));
  }
  const std::size_t s = video.tokens_per_frame;
  Tensor context = params.start_tokens;
  std::vector<int> context_frames(s, kStartFrame);
  for (Chunk& c : parts) {
    c.conditioning = c.index == 1 ? params.start_tokens : slice_rows(context, context.dim(0) - s, s);
    RefinedChunk r = refine_chunk(context, context_frames, c, params);
    c = std::move(r.enhanced);
    context = c.tokens();
    context_frames = c.frame_indices();
  }
  return join_chunks(parts);
}

}  // namespace idr::temporal
