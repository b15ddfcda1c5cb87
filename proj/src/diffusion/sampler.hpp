// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>

#include "core/latent_video.hpp"
#include "diffusion/denoiser.hpp"
#include "diffusion/schedule.hpp"
#include "temporal/temporal_ar.hpp"

namespace idr::diffusion {

struct SampleOptions {
  std::size_t frames = 8;
  std::size_t tokens_per_frame = 16;
  std::size_t steps = 20;   // DDIM steps, strided over the schedule
  double cfg_scale = 6.0;
  std::size_t chunks = 4;   // K for the temporal refinement
  std::uint64_t seed = 0;
  bool apply_tam = true;
};

/// eps_uncond + scale * (eps_cond - eps_uncond); scale 0 is exactly eps_uncond.
Tensor guided_noise(const Tensor& eps_cond, const Tensor& eps_uncond, double cfg_scale);

/// DDIM (eta = 0) from seeded Gaussian noise with classifier-free guidance,
/// then temporal_refine when `apply_tam`. Runs without recording gradients.
/// Throws kParameter for a negative or non-finite cfg_scale.
LatentVideo sample(const ConditionBundle& cond, const DenoiserParams& denoiser, const temporal::TamParams& tam,
                   const NoiseSchedule& schedule, const SampleOptions& options);

}  // namespace idr::diffusion
