// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "train/model.hpp"

#include "core/random.hpp"

namespace idr::train {

diffusion::DenoiserDims denoiser_dims(const TrainConfig& c) {
  diffusion::DenoiserDims d;
  d.latent_dim = c.latent_dim;
  d.identity_dim = c.latent_dim;
  d.feature_dim = c.latent_dim;
  d.blocks = c.blocks;
  d.heads = c.heads;
  d.steps = c.diffusion_steps;
  d.router = {c.components, c.local_tokens, c.local_dim, c.latent_dim, c.inner_dim};
  return d;
}

temporal::TamDims tam_dims(const TrainConfig& c) {
  return {c.tokens_per_frame, c.latent_dim, c.inner_dim, c.tam_layers, c.heads};
}

std::vector<std::pair<std::string, Shape>> model_param_shapes(const TrainConfig& c) {
  std::vector<std::pair<std::string, Shape>> out;
  for (auto& [n, s] : diffusion::denoiser_param_shapes(denoiser_dims(c))) out.push_back({"denoiser." + n, s});
  for (auto& [n, s] : temporal::tam_param_shapes(tam_dims(c))) out.push_back({"tam." + n, s});
  return out;
}

Model Model::init(const TrainConfig& config) {
  config.validate();
  Model m;
  m.config = config;
  Rng denoiser_rng(mix_seed(config.seed, 0));
  Rng tam_rng(mix_seed(config.seed, 1));
  m.denoiser = diffusion::init_denoiser(denoiser_dims(config), denoiser_rng, config.init_std, config.alpha);
  m.tam = temporal::init_tam(tam_dims(config), tam_rng, config.tam_init_std, config.beta);
  return m;
}

nn::NamedTensors Model::named_parameters(TrainMode mode) const {
  nn::NamedTensors out;
  if (mode != TrainMode::kTamOnly) denoiser.append_named("denoiser.", out);
  if (mode != TrainMode::kRouterOnly) tam.append_named("tam.", out);
  return out;
}

std::vector<Tensor> Model::parameters(TrainMode mode) const {
  const nn::NamedTensors named = named_parameters(mode);
  std::vector<Tensor> out;
  out.reserve(named.size());
  for (auto& [name, t] : named) out.push_back(t);
  return out;
}

diffusion::NoiseSchedule Model::schedule() const {
  return diffusion::make_schedule(config.diffusion_steps, config.beta_start, config.beta_end);
}

diffusion::ConditionBundle condition_for(const data::SubjectIdentity& subject, std::size_t local_tokens) {
  diffusion::ConditionBundle c;
  c.component_features = data::component_features(subject, local_tokens);
  c.identity = Tensor(Shape{subject.identity.size()}, subject.identity);
  return c;
}

}  // namespace idr::train
