// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "train/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "core/error.hpp"
#include "core/ops.hpp"
#include "diffusion/denoiser.hpp"
#include "router/local_router.hpp"
#include "temporal/temporal_ar.hpp"

namespace idr::train {

double total_loss(double l_diff, double l_route, double lambda_diff, double lambda_route) {
  return lambda_diff * l_diff + lambda_route * l_route;
}

Tensor total_loss(const Tensor& l_diff, const Tensor& l_route, double lambda_diff, double lambda_route) {
  return add_scaled(scale(l_diff, lambda_diff), l_route, lambda_route);
}

namespace {

AdamWOptions adam_options(const TrainConfig& c) {
  return {c.lr, c.adam_beta1, c.adam_beta2, c.adam_eps, c.weight_decay};
}

}  // namespace

Trainer::Trainer(TrainConfig config, data::Dataset data)
    : model_(Model::init(config)),
      params_(model_.parameters(config.mode)),
      optimizer_(OptimizerState::for_params(params_, adam_options(config))),
      rng_(mix_seed(config.seed, 2)),
      data_(std::move(data)),
      schedule_(model_.schedule()) {
  check_data();
}

Trainer::Trainer(TrainingState state, data::Dataset data, std::optional<TrainMode> mode)
    : model_(std::move(state.model)), data_(std::move(data)), schedule_(model_.schedule()) {
  rng_.set_state(state.rng_state);
  const bool same_mode = !mode || *mode == model_.config.mode;
  if (!same_mode) model_.config.mode = *mode;
  params_ = model_.parameters(model_.config.mode);
  if (same_mode && state.optimizer) {
    optimizer_ = std::move(*state.optimizer);
    steps_done_ = state.steps_done;
  } else {
    optimizer_ = OptimizerState::for_params(params_, adam_options(model_.config));
  }
  check_data();
}

void Trainer::check_data() const {
  const TrainConfig& c = model_.config;
  if (data_.samples.empty()) throw Error(ErrorCode::kContract, "training needs at least one sample");
  if (data_.frames != c.frames || data_.tokens_per_frame != c.tokens_per_frame || data_.channels != c.latent_dim ||
      data_.components != c.components) {
    throw Error(ErrorCode::kContract, "dataset dimensions (F=" + std::to_string(data_.frames) + ", S=" +
                                          std::to_string(data_.tokens_per_frame) + ", D'=" +
                                          std::to_string(data_.channels) + ", M=" + std::to_string(data_.components) +
                                          ") do not match the config");
  }
}

StepLosses Trainer::micro_step(double weight) {
  const TrainConfig& c = model_.config;
  const data::SyntheticSample& sample = data_.samples[rng_.uniform_int(0, data_.samples.size() - 1)];
  StepLosses out;
  Tensor objective;

  if (c.mode != TrainMode::kTamOnly) {
    out.timestep = rng_.uniform_int(1, c.diffusion_steps);
    std::vector<double> noise(sample.latents.tokens.numel());
    for (double& x : noise) x = rng_.normal();
    const Tensor eps(sample.latents.tokens.shape(), std::move(noise));
    out.used_null = rng_.uniform() < c.null_ratio;

    const diffusion::ConditionBundle cond =
        out.used_null ? diffusion::ConditionBundle::null_condition() : condition_for(sample.subject, c.local_tokens);
    const LatentVideo z_t = diffusion::add_noise(sample.latents, eps, out.timestep, schedule_);
    const diffusion::DenoiserOutput pred = diffusion::denoiser_forward(z_t, out.timestep, cond, model_.denoiser);
    const Tensor l_diff = diffusion::diffusion_loss(eps, pred.eps_hat.tokens);
    out.l_diff = l_diff.item();
    if (out.used_null) {
      objective = scale(l_diff, c.lambda_diff);
    } else {
      const Tensor l_route = router::routing_loss(pred.router, sample.masks);
      out.l_route = l_route.item();
      objective = total_loss(l_diff, l_route, c.lambda_diff, c.lambda_route);
    }
  }

  if (c.mode != TrainMode::kRouterOnly) {
    const LatentVideo corrupted = data::corrupt_temporal(sample.latents, c.jitter, rng_.next_u64());
    const LatentVideo refined = temporal::temporal_refine(corrupted, model_.tam, c.chunks);
    const Tensor l_cons = mse(refined.tokens, sample.latents.tokens);
    out.l_consistency = l_cons.item();
    objective = objective.defined() ? add_scaled(objective, l_cons, c.consistency_weight) : l_cons;
  }

  out.l_total = objective.item();
  if (objective.requires_grad()) backward(scale(objective, weight));
  return out;
}

StepLosses Trainer::step() {
  const std::size_t n = model_.config.grad_accum;
  const double weight = 1.0 / static_cast<double>(n);
  StepLosses total;
  for (std::size_t i = 0; i < n; ++i) {
    const StepLosses s = micro_step(weight);
    total.l_diff += s.l_diff * weight;
    total.l_route += s.l_route * weight;
    total.l_consistency += s.l_consistency * weight;
    total.l_total += s.l_total * weight;
    total.timestep = s.timestep;
    total.used_null = total.used_null || s.used_null;
  }
  adamw_step(params_, optimizer_);
  for (Tensor& p : params_) p.zero_grad();
  ++steps_done_;
  return total;
}

TrainingState Trainer::state() const { return {model_, optimizer_, rng_.state(), steps_done_}; }

std::vector<StepLosses> train_loop(Trainer& trainer, const LoopOptions& options) {
  namespace fs = std::filesystem;
  const TrainConfig& c = trainer.config();
  const auto start = std::chrono::steady_clock::now();
  std::ofstream metrics;
  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    const fs::path path = fs::path(options.out_dir) / "metrics.csv";
    const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    metrics.open(path, std::ios::app);
    if (!metrics) throw Error(ErrorCode::kIo, "cannot open " + path.string());
    if (fresh) metrics << kMetricsHeader << "\n";
  }
  auto save = [&] {
    if (!options.out_dir.empty()) save_checkpoint(trainer.state(), (fs::path(options.out_dir) / "checkpoint.lvck").string());
  };

  std::vector<StepLosses> history;
  StepLosses window;
  std::size_t in_window = 0;
  while (trainer.steps_done() < c.steps) {
    const StepLosses s = trainer.step();
    history.push_back(s);
    window.l_diff += s.l_diff;
    window.l_route += s.l_route;
    window.l_total += s.l_total;
    ++in_window;
    if (options.progress) options.progress(trainer.steps_done(), s);
    const bool last = trainer.steps_done() == c.steps;
    if (metrics.is_open() && (trainer.steps_done() % c.log_every == 0 || last)) {
      const double inv = 1.0 / static_cast<double>(in_window);
      const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
      char row[160];
      std::snprintf(row, sizeof row, "%llu,%.10g,%.10g,%.10g,%lld\n",
                    static_cast<unsigned long long>(trainer.steps_done()), window.l_diff * inv, window.l_route * inv,
                    window.l_total * inv, static_cast<long long>(ms.count()));
      metrics << row << std::flush;
      window = {};
      in_window = 0;
    }
    if (c.checkpoint_every && trainer.steps_done() % c.checkpoint_every == 0 && !last) save();
  }
  save();
  return history;
}

}  // namespace idr::train
