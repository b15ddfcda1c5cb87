// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "core/latent_video.hpp"
#include "core/random.hpp"
#include "core/tensor.hpp"
#include "nn/transformer.hpp"
#include "router/local_router.hpp"

namespace idr::diffusion {

struct DenoiserDims {
  std::size_t latent_dim = 32;     // D', also the hidden width
  std::size_t identity_dim = 32;   // length of the identity condition vector
  std::size_t feature_dim = 32;    // width of each component feature row
  std::size_t blocks = 2;          // B
  std::size_t heads = 2;
  std::size_t steps = 20;          // T
  router::RouterDims router;       // router.latent_dim must equal latent_dim
};

struct DenoiserParams {
  Tensor in_proj, in_bias;    // [D' x D'], [D']
  Tensor time_table;          // [(T+1) x D']
  Tensor cond_proj;           // [Di x D']
  std::vector<nn::TransformerBlockParams> blocks;
  Tensor out_proj, out_bias;  // [D' x D'], [D']
  router::RouterParams router;
  router::EncoderParams encoder;
  Tensor null_local;          // [(M*L) x D], component m is rows m*L .. m*L+L-1
  Tensor null_identity;       // [Di]
  std::size_t heads = 2;
  double alpha = 1.0;

  void append_named(const std::string& prefix, nn::NamedTensors& out) const;
};

std::vector<std::pair<std::string, Shape>> denoiser_param_shapes(const DenoiserDims& dims);

/// Output projection and bias start at zero (the prediction is 0 until
/// trained); so do the null embeddings and phi's output projection.
DenoiserParams init_denoiser(const DenoiserDims& dims, Rng& rng, double stddev, double alpha);

/// The subject condition. A null bundle carries no data; the learned null
/// embeddings stand in for it.
struct ConditionBundle {
  std::vector<Tensor> component_features;  // M x [L x Df]
  Tensor identity;                         // [Di]
  bool is_null = false;

  static ConditionBundle null_condition() { return {{}, {}, true}; }
};

struct ResolvedCondition {
  router::LocalTokenSet local;
  Tensor identity;
};

ResolvedCondition resolve_condition(const ConditionBundle& cond, const DenoiserParams& params);

struct DenoiserOutput {
  LatentVideo eps_hat;
  router::RouterOutput router;  // from block 1
};

/// Token embedding + timestep row + projected identity; block 1 routes the
/// hidden tokens through the local router before its attention, the other
/// blocks are plain full-attention blocks. Throws kContract on shape
/// mismatch and kStep when t > T.
DenoiserOutput denoiser_forward(const LatentVideo& z_t, std::size_t t, const ConditionBundle& cond,
                                const DenoiserParams& params);

}  // namespace idr::diffusion
