// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core/latent_video.hpp"
#include "core/random.hpp"
#include "core/tensor.hpp"
#include "nn/transformer.hpp"

namespace idr::router {

using nn::NamedTensors;

inline constexpr double kLogClamp = 1e-12;

/// M component token sequences, each [L x D].
struct LocalTokenSet {
  std::vector<Tensor> tokens;
  std::vector<std::string> component_names;

  std::size_t components() const { return tokens.size(); }
  std::size_t length() const { return tokens.at(0).dim(0); }
  std::size_t width() const { return tokens.at(0).dim(1); }
  void validate() const;
};

std::vector<std::string> default_component_names(std::size_t m);

struct RouterOutput {
  Tensor logits;   // [M x L']
  Tensor weights;  // [M x L'], each column a distribution over components
};

/// Dense y[m, i] indicators. Columns are one-hot (token i belongs to
/// component m) or all zero (background).
struct ComponentMasks {
  std::size_t components = 0;
  std::size_t tokens = 0;
  std::vector<std::uint8_t> y;  // row-major [components x tokens]

  static constexpr int kBackground = -1;

  static ComponentMasks from_labels(std::size_t components, const std::vector<int>& labels);
  // Per-token component index or kBackground. Throws kMaskConsistency on a
  // multi-hot column.
  std::vector<int> labels() const;
};

/// Cross-attention "reconstruct the queries from a set of basis tokens":
/// queries [Lq x Dq] -> [Lq x Dq], keys and values both taken from the context.
struct PhiParams {
  Tensor query;   // [Dq x inner]
  Tensor key;     // [Dc x inner]
  Tensor value;   // [Dc x Dq]
  Tensor output;  // [Dq x Dq]

  void append_named(const std::string& prefix, NamedTensors& out) const;
};

PhiParams init_phi(std::size_t context_dim, std::size_t query_dim, std::size_t inner_dim, Rng& rng,
                   double stddev, bool zero_output);

/// Shared linear embedding of component feature grids ([L x Df] -> [L x D]).
struct EncoderParams {
  Tensor weight;  // [Df x D]
  Tensor bias;    // [D]

  void append_named(const std::string& prefix, NamedTensors& out) const;
};

EncoderParams init_encoder(std::size_t feature_dim, std::size_t local_dim, Rng& rng, double stddev);

struct RouterDims {
  std::size_t components = 4;  // M
  std::size_t local_tokens = 8;  // L
  std::size_t local_dim = 16;  // D
  std::size_t latent_dim = 32;  // D'
  std::size_t inner_dim = 16;  // D''
};

struct RouterParams {
  Tensor aggregators;     // W_m stacked: [M x L]
  Tensor local_proj;      // W_l [D x D'']
  Tensor latent_proj;     // W_z [D' x D'']
  Tensor local_ln_gain, local_ln_bias;    // [D]
  Tensor latent_ln_gain, latent_ln_bias;  // [D']
  PhiParams phi;          // context D, queries D', inner D''

  void append_named(const std::string& prefix, NamedTensors& out) const;
};

/// Parameter names and shapes for the given dimensions, without allocating.
std::vector<std::pair<std::string, Shape>> router_param_shapes(const RouterDims& dims);

/// Projections ~ N(0, stddev); phi's output projection starts at zero when
/// `zero_phi_output`, so spatial_enhance is initially the identity.
RouterParams init_router(const RouterDims& dims, Rng& rng, double stddev = 0.02, bool zero_phi_output = true);

/// Embeds each component's feature grid. Throws kArity when the number of
/// grids is not `expected_components`.
LocalTokenSet encode_local_components(const std::vector<Tensor>& features, const EncoderParams& encoder,
                                      std::size_t expected_components);

/// Row m: W_m LN(l_m) W_l W_z^T LN(z)^T, i.e. [M x L'] pre-softmax scores.
Tensor router_logits(const LocalTokenSet& local, const Tensor& latent, const RouterParams& params);

/// Softmax over the component axis, per token. Throws kDegenerate for M < 2.
RouterOutput router_weights(const Tensor& logits);

/// Throws kAllBlocked for an undefined (empty) context.
Tensor cross_attention_phi(const Tensor& context, const Tensor& queries, const PhiParams& phi);

/// z + alpha * sum_m w_m^T (.) phi(l_m, z). alpha == 0 returns z unchanged.
Tensor spatial_enhance(const Tensor& latent, const LocalTokenSet& local, const RouterOutput& router, double alpha,
                       const PhiParams& phi);
LatentVideo spatial_enhance(const LatentVideo& latent, const LocalTokenSet& local, const RouterOutput& router,
                            double alpha, const PhiParams& phi);

/// Mean over foreground tokens of -log(max(w[label, i], 1e-12)). Background
/// columns contribute nothing; with no foreground tokens the loss is 0.
Tensor routing_loss(const RouterOutput& router, const ComponentMasks& masks);

struct RoutingAccuracy {
  std::size_t correct = 0;
  std::size_t foreground = 0;
  double value() const { return foreground ? static_cast<double>(correct) / static_cast<double>(foreground) : 0.0; }
};

/// Argmax over components vs ground truth, foreground tokens only.
RoutingAccuracy routing_accuracy(const RouterOutput& router, const ComponentMasks& masks);

}  // namespace idr::router
