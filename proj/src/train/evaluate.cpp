// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "train/evaluate.hpp"

#include <cstdio>

#include "core/error.hpp"
#include "core/random.hpp"
#include "diffusion/denoiser.hpp"
#include "diffusion/schedule.hpp"
#include "router/local_router.hpp"
#include "temporal/temporal_ar.hpp"

namespace idr::train {

MetricsReport evaluate(const Model& model, const data::Dataset& dataset) {
  const TrainConfig& c = model.config;
  if (dataset.samples.empty()) throw Error(ErrorCode::kEvaluation, "evaluation dataset is empty");
  if (dataset.frames != c.frames || dataset.tokens_per_frame != c.tokens_per_frame ||
      dataset.channels != c.latent_dim || dataset.components != c.components) {
    throw Error(ErrorCode::kContract, "evaluation dataset dimensions do not match the model");
  }
  NoGradGuard no_grad;
  const diffusion::NoiseSchedule schedule = model.schedule();
  MetricsReport r;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const data::SyntheticSample& s = dataset.samples[i];
    Rng rng(mix_seed(c.eval_seed, 2 * i));
    std::vector<double> noise(s.latents.tokens.numel());
    for (double& x : noise) x = rng.normal();
    const Tensor eps(s.latents.tokens.shape(), std::move(noise));
    const LatentVideo z_t = diffusion::add_noise(s.latents, eps, c.eval_timestep, schedule);
    const diffusion::DenoiserOutput pred =
        diffusion::denoiser_forward(z_t, c.eval_timestep, condition_for(s.subject, c.local_tokens), model.denoiser);
    r.mean_diff_loss += diffusion::diffusion_loss(eps, pred.eps_hat.tokens).item();
    r.mean_route_loss += router::routing_loss(pred.router, s.masks).item();
    const router::RoutingAccuracy acc = router::routing_accuracy(pred.router, s.masks);
    correct += acc.correct;
    r.foreground_tokens += acc.foreground;

    const LatentVideo corrupted = data::corrupt_temporal(s.latents, c.jitter, mix_seed(c.eval_seed, 2 * i + 1));
    r.temporal_deviation_before += data::temporal_deviation(corrupted);
    r.temporal_deviation_after += data::temporal_deviation(temporal::temporal_refine(corrupted, model.tam, c.chunks));
  }
  const double n = static_cast<double>(dataset.samples.size());
  r.samples = dataset.samples.size();
  r.routing_accuracy = r.foreground_tokens ? static_cast<double>(correct) / static_cast<double>(r.foreground_tokens) : 0.0;
  r.mean_diff_loss /= n;
  r.mean_route_loss /= n;
  r.temporal_deviation_before /= n;
  r.temporal_deviation_after /= n;
  return r;
}

std::string metrics_csv(const MetricsReport& r) {
  char row[256];
  std::snprintf(row, sizeof row, "%.17g,%.17g,%.17g,%.17g,%.17g,%zu\n", r.routing_accuracy, r.mean_route_loss,
                r.mean_diff_loss, r.temporal_deviation_before, r.temporal_deviation_after, r.samples);
  return std::string(
             "routing_accuracy,mean_route_loss,mean_diff_loss,temporal_deviation_before,temporal_deviation_after,"
             "samples\n") +
         row;
}

}  // namespace idr::train
