// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "core/latent_video.hpp"
#include "core/random.hpp"
#include "core/tensor.hpp"
#include "nn/transformer.hpp"
#include "router/local_router.hpp"

namespace idr::temporal {

/// Frame index carried by the learned start block that conditions chunk 1.
inline constexpr int kStartFrame = -1;

/// A run of consecutive frames plus the frame prepended in front of it.
struct Chunk {
  Tensor conditioning;  // [S x D']; undefined until teacher forcing fills it
  Tensor payload;       // [Fc*S x D']
  std::vector<int> frames;  // absolute index of each payload frame
  std::size_t tokens_per_frame = 0;
  std::size_t index = 0;  // 1-based position among the chunks

  std::size_t payload_frames() const { return frames.size(); }
  bool conditioned() const { return conditioning.defined(); }

  /// [conditioning; payload]. Throws kTeacherForcing if unconditioned.
  Tensor tokens() const;
  /// Frame index per token of tokens(); the conditioning frame is frames[0]-1.
  std::vector<int> frame_indices() const;
};

struct PsiParams {
  std::vector<nn::TransformerBlockParams> layers;
  std::size_t heads = 2;

  void append_named(const std::string& prefix, nn::NamedTensors& out) const;
};

struct TamParams {
  PsiParams psi;
  router::PhiParams phi;  // context D', queries D'
  Tensor start_tokens;    // [S x D']
  double beta = 0.2;

  void append_named(const std::string& prefix, nn::NamedTensors& out) const;
};

struct TamDims {
  std::size_t tokens_per_frame = 16;  // S
  std::size_t latent_dim = 32;        // D'
  std::size_t inner_dim = 16;         // phi attention width
  std::size_t layers = 2;             // N
  std::size_t heads = 2;              // H
};

std::vector<std::pair<std::string, Shape>> tam_param_shapes(const TamDims& dims);

/// Start tokens are zero. With `zero_outputs` every residual output
/// projection (psi blocks and phi) starts at zero, so the module is an exact
/// identity until trained.
TamParams init_tam(const TamDims& dims, Rng& rng, double stddev, double beta, bool zero_outputs = true);

/// Splits along frames into K chunks of F/K frames, conditioning unfilled.
/// Throws kChunking when K is 0 or does not divide F.
std::vector<Chunk> split_chunks(const LatentVideo& video, std::size_t chunks);

/// Concatenates payloads back into a video (conditioning rows are dropped).
LatentVideo join_chunks(const std::vector<Chunk>& chunks);

/// Causal pre-norm transformer over tokens tagged with frame indices: RoPE
/// on queries and keys at position frame + 1 (so the start frame sits at 0),
/// causal-by-frame masking in every layer. Throws kOrdering when frame
/// indices decrease.
Tensor psi_forward(const Tensor& tokens, std::span<const int> frame_indices, const PsiParams& psi);

struct RefinedChunk {
  Chunk enhanced;  // same conditioning, payload + beta * bias
  Tensor bias;     // [(1+Fc)S x D'] including the discarded conditioning rows
};

/// bias = phi(psi(context), current.tokens()); only payload rows are applied.
/// `context` is the previous enhanced chunk (or the start block).
RefinedChunk refine_chunk(const Tensor& context, std::span<const int> context_frames, const Chunk& current,
                          const TamParams& params);

/// Refines the chunks in order. Chunk 1 is conditioned on (and reads its
/// context from) the start block; chunk k > 1 on the last enhanced frame and
/// the whole enhanced chunk k-1.
LatentVideo temporal_refine(const LatentVideo& video, const TamParams& params, std::size_t chunks);

}  // namespace idr::temporal
