// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "diffusion/denoiser.hpp"

#include "core/error.hpp"
#include "core/ops.hpp"
#include "nn/init.hpp"

namespace idr::diffusion {

void DenoiserParams::append_named(const std::string& prefix, nn::NamedTensors& out) const {
  out.emplace_back(prefix + "in_proj", in_proj);
  out.emplace_back(prefix + "in_bias", in_bias);
  out.emplace_back(prefix + "time_table", time_table);
  out.emplace_back(prefix + "cond_proj", cond_proj);
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].append_named(prefix + "block." + std::to_string(i) + ".", out);
  out.emplace_back(prefix + "out_proj", out_proj);
  out.emplace_back(prefix + "out_bias", out_bias);
  router.append_named(prefix + "router.", out);
  encoder.append_named(prefix + "encoder.", out);
  out.emplace_back(prefix + "null_local", null_local);
  out.emplace_back(prefix + "null_identity", null_identity);
}

std::vector<std::pair<std::string, Shape>> denoiser_param_shapes(const DenoiserDims& d) {
  const std::size_t w = d.latent_dim, h = nn::kFfnExpansion * w;
  std::vector<std::pair<std::string, Shape>> out = {
      {"in_proj", {w, w}}, {"in_bias", {w}}, {"time_table", {d.steps + 1, w}}, {"cond_proj", {d.identity_dim, w}}};
  for (std::size_t i = 0; i < d.blocks; ++i) {
    const std::string p = "block." + std::to_string(i) + ".";
    for (const char* n : {"ln1_gain", "ln1_bias"}) out.push_back({p + n, {w}});
    for (const char* n : {"wq", "wk", "wv", "wo"}) out.push_back({p + n, {w, w}});
    for (const char* n : {"ln2_gain", "ln2_bias"}) out.push_back({p + n, {w}});
    out.push_back({p + "ffn_w1", {w, h}});
    out.push_back({p + "ffn_b1", {h}});
    out.push_back({p + "ffn_w2", {h, w}});
    out.push_back({p + "ffn_b2", {w}});
  }
  out.push_back({"out_proj", {w, w}});
  out.push_back({"out_bias", {w}});
  for (auto& [name, shape] : router::router_param_shapes(d.router)) out.push_back({"router." + name, shape});
  out.push_back({"encoder.weight", {d.feature_dim, d.router.local_dim}});
  out.push_back({"encoder.bias", {d.router.local_dim}});
  out.push_back({"null_local", {d.router.components * d.router.local_tokens, d.router.local_dim}});
  out.push_back({"null_identity", {d.identity_dim}});
  return out;
}

DenoiserParams init_denoiser(const DenoiserDims& d, Rng& rng, double stddev, double alpha) {
  if (d.router.latent_dim != d.latent_dim) {
    throw Error(ErrorCode::kDimension, "router latent width " + std::to_string(d.router.latent_dim) +
                                           " differs from denoiser width " + std::to_string(d.latent_dim));
  }
  if (d.blocks == 0) throw Error(ErrorCode::kParameter, "denoiser needs at least one block");
  const std::size_t w = d.latent_dim;
  DenoiserParams p;
  p.in_proj = nn::normal_param({w, w}, rng, stddev);
  p.in_bias = nn::constant_param({w}, 0.0);
  p.time_table = nn::normal_param({d.steps + 1, w}, rng, stddev);
  p.cond_proj = nn::normal_param({d.identity_dim, w}, rng, stddev);
  for (std::size_t i = 0; i < d.blocks; ++i) p.blocks.push_back(nn::init_transformer_block(w, rng, stddev, false));
  p.out_proj = nn::constant_param({w, w}, 0.0);
  p.out_bias = nn::constant_param({w}, 0.0);
  p.router = router::init_router(d.router, rng, stddev, true);
  p.encoder = router::init_encoder(d.feature_dim, d.router.local_dim, rng, stddev);
  p.null_local = nn::constant_param({d.router.components * d.router.local_tokens, d.router.local_dim}, 0.0);
  p.null_identity = nn::constant_param({d.identity_dim}, 0.0);
  p.heads = d.heads;
  p.alpha = alpha;
  return p;
}

ResolvedCondition resolve_condition(const ConditionBundle& cond, const DenoiserParams& params) {
  const std::size_t m = params.router.aggregators.dim(0);
  if (cond.is_null) {
    const std::size_t l = params.null_local.dim(0) / m;
    ResolvedCondition out;
    out.local.component_names = router::default_component_names(m);
    for (std::size_t c = 0; c < m; ++c) out.local.tokens.push_back(slice_rows(params.null_local, c * l, l));
    out.identity = params.null_identity;
    return out;
  }
  if (!cond.identity.defined() || cond.identity.shape() != params.null_identity.shape()) {
    throw Error(ErrorCode::kContract, "identity vector must have shape " + shape_string(params.null_identity.shape()));
  }
  return {router::encode_local_components(cond.component_features, params.encoder, m), cond.identity};
}

DenoiserOutput denoiser_forward(const LatentVideo& z_t, std::size_t t, const ConditionBundle& cond,
                                const DenoiserParams& params) {
  z_t.validate();
  const std::size_t w = params.in_proj.dim(0);
  if (z_t.channels() != w) {
    throw Error(ErrorCode::kContract, "latent width " + std::to_string(z_t.channels()) + " but denoiser expects " +
                                          std::to_string(w));
  }
  if (t >= params.time_table.dim(0)) {
    throw Error(ErrorCode::kStep, "step " + std::to_string(t) + " beyond timestep table");
  }
  const ResolvedCondition rc = resolve_condition(cond, params);
  const std::size_t di = rc.identity.numel();
  const Tensor cond_row = reshape(matmul(reshape(rc.identity, {1, di}), params.cond_proj), {w});

  Tensor h = add_row(matmul(z_t.tokens, params.in_proj), params.in_bias);
  h = add_row(add_row(h, row(params.time_table, t)), cond_row);

  const Tensor logits = router::router_logits(rc.local, h, params.router);
  router::RouterOutput routed = router::router_weights(logits);
  h = router::spatial_enhance(h, rc.local, routed, params.alpha, params.router.phi);

  const AttentionMask full = AttentionMask::none();
  for (const nn::TransformerBlockParams& block : params.blocks) h = nn::transformer_block(h, block, params.heads, full);

  const Tensor eps_hat = add_row(matmul(h, params.out_proj), params.out_bias);
  return {LatentVideo(eps_hat, z_t.frames, z_t.tokens_per_frame), std::move(routed)};
}

}  // namespace idr::diffusion
