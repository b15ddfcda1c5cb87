// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "diffusion/sampler.hpp"

#include <cmath>

#include "core/error.hpp"
#include "core/ops.hpp"
#include "core/random.hpp"

namespace idr::diffusion {

Tensor guided_noise(const Tensor& eps_cond, const Tensor& eps_uncond, double cfg_scale) {
  return add_scaled(eps_uncond, sub(eps_cond, eps_uncond), cfg_scale);
}

LatentVideo sample(const ConditionBundle& cond, const DenoiserParams& denoiser, const temporal::TamParams& tam,
                   const NoiseSchedule& schedule, const SampleOptions& options) {
  if (!std::isfinite(options.cfg_scale) || options.cfg_scale < 0.0) {
    throw Error(ErrorCode::kParameter, "cfg scale must be finite and non-negative");
  }
  NoGradGuard no_grad;
  const std::size_t tokens = options.frames * options.tokens_per_frame;
  const std::size_t width = denoiser.in_proj.dim(0);
  Rng rng(options.seed);
  std::vector<double> noise(tokens * width);
  for (double& x : noise) x = rng.normal();
  Tensor z(Shape{tokens, width}, std::move(noise));

  const ConditionBundle null_cond = ConditionBundle::null_condition();
  const std::vector<std::size_t> ts = ddim_timesteps(schedule.steps(), options.steps);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const std::size_t t = ts[i], t_prev = i + 1 < ts.size() ? ts[i + 1] : 0;
    const LatentVideo zt(z, options.frames, options.tokens_per_frame);
    const Tensor eps_uncond = denoiser_forward(zt, t, null_cond, denoiser).eps_hat.tokens;
    const Tensor eps = options.cfg_scale == 0.0
                           ? eps_uncond
                           : guided_noise(denoiser_forward(zt, t, cond, denoiser).eps_hat.tokens, eps_uncond,
                                          options.cfg_scale);
    z = ddim_step(z, eps, t, t_prev, schedule);
  }
  LatentVideo out(z, options.frames, options.tokens_per_frame);
  if (options.apply_tam) out = temporal::temporal_refine(out, tam, options.chunks);
  return out;
}

}  // namespace idr::diffusion
