// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "core/latent_video.hpp"
#include "core/tensor.hpp"

namespace idr::diffusion {

/// Cumulative signal retention alpha_bar[0..T]; alpha_bar[0] = 1.
struct NoiseSchedule {
  std::vector<double> alpha_bar;

  std::size_t steps() const { return alpha_bar.size() - 1; }
  double at(std::size_t t) const { return alpha_bar.at(t); }

  /// Throws kSchedule unless 1 = a[0] > a[1] > ... > a[T] > 0.
  void validate() const;
  static NoiseSchedule from_alpha_bar(std::vector<double> alpha_bar);
};

/// Linear betas from beta_start to beta_end over T steps. Throws kSchedule
/// unless 0 < beta_start <= beta_end < 1 and T >= 1.
NoiseSchedule make_schedule(std::size_t steps, double beta_start, double beta_end);

/// sqrt(a_t) z0 + sqrt(1 - a_t) eps. Throws kStep unless 1 <= t <= T and
/// kContract on shape mismatch.
Tensor add_noise(const Tensor& z0, const Tensor& eps, std::size_t t, const NoiseSchedule& schedule);
LatentVideo add_noise(const LatentVideo& z0, const Tensor& eps, std::size_t t, const NoiseSchedule& schedule);

/// Mean squared error between the true and predicted noise.
Tensor diffusion_loss(const Tensor& eps, const Tensor& eps_hat);

/// Deterministic DDIM update from t to t_prev (t_prev may be 0). Throws
/// kOrdering unless t_prev < t.
Tensor ddim_step(const Tensor& z_t, const Tensor& eps_hat, std::size_t t, std::size_t t_prev,
                 const NoiseSchedule& schedule);

/// `count` timesteps evenly strided from T down to >= 1, in visiting order.
/// Throws kParameter unless 1 <= count <= T.
std::vector<std::size_t> ddim_timesteps(std::size_t T, std::size_t count);

}  // namespace idr::diffusion
