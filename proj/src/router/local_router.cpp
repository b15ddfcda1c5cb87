// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "router/local_router.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/ops.hpp"
#include "nn/init.hpp"

namespace idr::router {

void LocalTokenSet::validate() const {
  if (tokens.empty()) throw Error(ErrorCode::kArity, "local token set has no components");
  if (!component_names.empty() && component_names.size() != tokens.size()) {
    throw Error(ErrorCode::kArity, "component names do not match component count");
  }
  const Shape& first = tokens.front().shape();
  if (first.size() != 2) throw Error(ErrorCode::kRank, "local tokens must be [L x D]");
  for (const Tensor& t : tokens) {
    if (t.shape() != first) {
      throw Error(ErrorCode::kDimension, "local token sequences disagree: " + shape_string(t.shape()) + " vs " +
                                             shape_string(first));
    }
  }
}

std::vector<std::string> default_component_names(std::size_t m) {
  static const char* kNames[] = {"eyebrows", "eyes", "mouth", "nose", "skin", "hair"};
  std::vector<std::string> names;
  for (std::size_t i = 0; i < m; ++i) names.push_back(i < 6 ? kNames[i] : "component_" + std::to_string(i));
  return names;
}

ComponentMasks ComponentMasks::from_labels(std::size_t components, const std::vector<int>& labels) {
  ComponentMasks masks;
  masks.components = components;
  masks.tokens = labels.size();
  masks.y.assign(components * labels.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kBackground) continue;
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= components) {
      throw Error(ErrorCode::kMaskConsistency, "label " + std::to_string(labels[i]) + " out of range");
    }
    masks.y[static_cast<std::size_t>(labels[i]) * labels.size() + i] = 1;
  }
  return masks;
}

std::vector<int> ComponentMasks::labels() const {
  if (y.size() != components * tokens) throw Error(ErrorCode::kMaskConsistency, "mask storage size mismatch");
  std::vector<int> out(tokens, kBackground);
  for (std::size_t i = 0; i < tokens; ++i) {
    for (std::size_t m = 0; m < components; ++m) {
      if (!y[m * tokens + i]) continue;
      if (out[i] != kBackground) {
        throw Error(ErrorCode::kMaskConsistency, "token " + std::to_string(i) + " belongs to several components");
      }
      out[i] = static_cast<int>(m);
    }
  }
  return out;
}

void PhiParams::append_named(const std::string& prefix, NamedTensors& out) const {
  out.emplace_back(prefix + "query", query);
  out.emplace_back(prefix + "key", key);
  out.emplace_back(prefix + "value", value);
  out.emplace_back(prefix + "output", output);
}

PhiParams init_phi(std::size_t context_dim, std::size_t query_dim, std::size_t inner_dim, Rng& rng, double stddev,
                   bool zero_output) {
  PhiParams p;
  p.query = nn::normal_param({query_dim, inner_dim}, rng, stddev);
  p.key = nn::normal_param({context_dim, inner_dim}, rng, stddev);
  p.value = nn::normal_param({context_dim, query_dim}, rng, stddev);
  p.output = zero_output ? nn::constant_param({query_dim, query_dim}, 0.0)
                         : nn::normal_param({query_dim, query_dim}, rng, stddev);
  return p;
}

void EncoderParams::append_named(const std::string& prefix, NamedTensors& out) const {
  out.emplace_back(prefix + "weight", weight);
  out.emplace_back(prefix + "bias", bias);
}

EncoderParams init_encoder(std::size_t feature_dim, std::size_t local_dim, Rng& rng, double stddev) {
  return {nn::normal_param({feature_dim, local_dim}, rng, stddev), nn::constant_param({local_dim}, 0.0)};
}

void RouterParams::append_named(const std::string& prefix, NamedTensors& out) const {
  out.emplace_back(prefix + "aggregators", aggregators);
  out.emplace_back(prefix + "local_proj", local_proj);
  out.emplace_back(prefix + "latent_proj", latent_proj);
  out.emplace_back(prefix + "local_ln_gain", local_ln_gain);
  out.emplace_back(prefix + "local_ln_bias", local_ln_bias);
  out.emplace_back(prefix + "latent_ln_gain", latent_ln_gain);
  out.emplace_back(prefix + "latent_ln_bias", latent_ln_bias);
  phi.append_named(prefix + "phi.", out);
}

std::vector<std::pair<std::string, Shape>> router_param_shapes(const RouterDims& d) {
  return {
      {"aggregators", {d.components, d.local_tokens}},
      {"local_proj", {d.local_dim, d.inner_dim}},
      {"latent_proj", {d.latent_dim, d.inner_dim}},
      {"local_ln_gain", {d.local_dim}},
      {"local_ln_bias", {d.local_dim}},
      {"latent_ln_gain", {d.latent_dim}},
      {"latent_ln_bias", {d.latent_dim}},
      {"phi.query", {d.latent_dim, d.inner_dim}},
      {"phi.key", {d.local_dim, d.inner_dim}},
      {"phi.value", {d.local_dim, d.latent_dim}},
      {"phi.output", {d.latent_dim, d.latent_dim}},
  };
}

RouterParams init_router(const RouterDims& d, Rng& rng, double stddev, bool zero_phi_output) {
  RouterParams p;
  p.aggregators = nn::normal_param({d.components, d.local_tokens}, rng, stddev);
  p.local_proj = nn::normal_param({d.local_dim, d.inner_dim}, rng, stddev);
  p.latent_proj = nn::normal_param({d.latent_dim, d.inner_dim}, rng, stddev);
  p.local_ln_gain = nn::constant_param({d.local_dim}, 1.0);
  p.local_ln_bias = nn::constant_param({d.local_dim}, 0.0);
  p.latent_ln_gain = nn::constant_param({d.latent_dim}, 1.0);
  p.latent_ln_bias = nn::constant_param({d.latent_dim}, 0.0);
  p.phi = init_phi(d.local_dim, d.latent_dim, d.inner_dim, rng, stddev, zero_phi_output);
  return p;
}

LocalTokenSet encode_local_components(const std::vector<Tensor>& features, const EncoderParams& encoder,
                                      std::size_t expected_components) {
  if (features.size() != expected_components) {
    throw Error(ErrorCode::kArity, "expected " + std::to_string(expected_components) + " component feature grids, got " +
                                       std::to_string(features.size()));
  }
  LocalTokenSet out;
  out.component_names = default_component_names(features.size());
  for (const Tensor& f : features) out.tokens.push_back(add_row(matmul(f, encoder.weight), encoder.bias));
  out.validate();
  return out;
}

Tensor router_logits(const LocalTokenSet& local, const Tensor& latent, const RouterParams& params) {
  local.validate();
  if (params.local_proj.dim(1) != params.latent_proj.dim(1)) {
    throw Error(ErrorCode::kProjectionSpace, "W_l " + shape_string(params.local_proj.shape()) + " and W_z " +
                                                 shape_string(params.latent_proj.shape()) +
                                                 " project into different spaces");
  }
  if (params.aggregators.dim(0) != local.components() || params.aggregators.dim(1) != local.length()) {
    throw Error(ErrorCode::kDimension, "aggregators " + shape_string(params.aggregators.shape()) + " for " +
                                           std::to_string(local.components()) + " components of length " +
                                           std::to_string(local.length()));
  }
  // W_z^T z~^T, shared by every component: [D'' x L'].
  const Tensor latent_normed = layer_norm(latent, params.latent_ln_gain, params.latent_ln_bias);
  const Tensor latent_keys = transpose(matmul(latent_normed, params.latent_proj));
  std::vector<Tensor> rows;
  rows.reserve(local.components());
  for (std::size_t m = 0; m < local.components(); ++m) {
    const Tensor local_normed = layer_norm(local.tokens[m], params.local_ln_gain, params.local_ln_bias);
    const Tensor projected = matmul(local_normed, params.local_proj);              // [L x D'']
    const Tensor aggregated = matmul(slice_rows(params.aggregators, m, 1), projected);  // [1 x D'']
    rows.push_back(matmul(aggregated, latent_keys));                               // [1 x L']
  }
  return concat_rows(rows);
}

RouterOutput router_weights(const Tensor& logits) {
  if (logits.rank() != 2) throw Error(ErrorCode::kRank, "router logits must be [M x L']");
  if (logits.dim(0) < 2) throw Error(ErrorCode::kDegenerate, "routing needs at least two components");
  return {logits, softmax(logits, 0)};
}

Tensor cross_attention_phi(const Tensor& context, const Tensor& queries, const PhiParams& phi) {
  if (!context.defined()) throw Error(ErrorCode::kAllBlocked, "cross-attention over an empty context");
  const Tensor q = matmul(queries, phi.query);
  const Tensor k = matmul(context, phi.key);
  const Tensor v = matmul(context, phi.value);
  return matmul(scaled_dot_attention(q, k, v, AttentionMask::none()), phi.output);
}

Tensor spatial_enhance(const Tensor& latent, const LocalTokenSet& local, const RouterOutput& router, double alpha,
                       const PhiParams& phi) {
  if (!std::isfinite(alpha)) throw Error(ErrorCode::kParameter, "alpha must be finite");
  if (router.weights.dim(0) != local.components() || router.weights.dim(1) != latent.dim(0)) {
    throw Error(ErrorCode::kDimension, "router weights " + shape_string(router.weights.shape()) +
                                           " do not match latent tokens " + shape_string(latent.shape()));
  }
  if (alpha == 0.0) return latent;
  Tensor total;
  for (std::size_t m = 0; m < local.components(); ++m) {
    const Tensor term = mul_rows(cross_attention_phi(local.tokens[m], latent, phi), row(router.weights, m));
    total = total.defined() ? add(total, term) : term;
  }
  return add_scaled(latent, total, alpha);
}

LatentVideo spatial_enhance(const LatentVideo& latent, const LocalTokenSet& local, const RouterOutput& router,
                            double alpha, const PhiParams& phi) {
  return {spatial_enhance(latent.tokens, local, router, alpha, phi), latent.frames, latent.tokens_per_frame};
}

Tensor routing_loss(const RouterOutput& router, const ComponentMasks& masks) {
  const Tensor& w = router.weights;
  if (w.rank() != 2 || w.dim(0) != masks.components || w.dim(1) != masks.tokens) {
    throw Error(ErrorCode::kDimension, "router weights " + shape_string(w.shape()) + " vs masks [" +
                                           std::to_string(masks.components) + "x" + std::to_string(masks.tokens) + "]");
  }
  const std::vector<int> labels = masks.labels();
  const std::size_t n = masks.tokens;
  std::size_t foreground = 0;
  for (int l : labels) foreground += l != ComponentMasks::kBackground;
  const double inv = foreground ? 1.0 / static_cast<double>(foreground) : 0.0;
  return make_op(
      "routing_loss", {w}, {1},
      [labels, n, inv](std::span<const Tensor> in) {
        auto v = in[0].data();
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (labels[i] == ComponentMasks::kBackground) continue;
          acc -= std::log(std::max(v[static_cast<std::size_t>(labels[i]) * n + i], kLogClamp));
        }
        return std::vector<double>{acc * inv};
      },
      [labels, n, inv](const BackwardContext& ctx) {
        auto v = ctx.inputs[0].data();
        auto g = ctx.grad_inputs[0];
        for (std::size_t i = 0; i < n; ++i) {
          if (labels[i] == ComponentMasks::kBackground) continue;
          const std::size_t idx = static_cast<std::size_t>(labels[i]) * n + i;
          if (v[idx] > kLogClamp) g[idx] -= ctx.grad_output[0] * inv / v[idx];
        }
      });
}

RoutingAccuracy routing_accuracy(const RouterOutput& router, const ComponentMasks& masks) {
  const std::vector<int> labels = masks.labels();
  const Tensor& w = router.weights;
  const std::size_t m = w.dim(0), n = w.dim(1);
  RoutingAccuracy acc;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == ComponentMasks::kBackground) continue;
    std::size_t best = 0;
    for (std::size_t c = 1; c < m; ++c) {
      if (w.at(c, i) > w.at(best, i)) best = c;
    }
    ++acc.foreground;
    acc.correct += static_cast<int>(best) == labels[i];
  }
  return acc;
}

}  // namespace idr::router
