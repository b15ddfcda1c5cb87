// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "diffusion/schedule.hpp"

#include <cmath>
#include <string>

#include "core/error.hpp"
#include "core/ops.hpp"

namespace idr::diffusion {

void NoiseSchedule::validate() const {
  if (alpha_bar.size() < 2 || alpha_bar[0] != 1.0) {
    throw Error(ErrorCode::kSchedule, "schedule needs alpha_bar[0] = 1 and at least one step");
  }
  for (std::size_t t = 1; t < alpha_bar.size(); ++t) {
    if (!(alpha_bar[t] < alpha_bar[t - 1]) || !(alpha_bar[t] > 0.0)) {
      throw Error(ErrorCode::kSchedule, "alpha_bar not strictly decreasing and positive at t=" + std::to_string(t));
    }
  }
}

NoiseSchedule NoiseSchedule::from_alpha_bar(std::vector<double> alpha_bar) {
  NoiseSchedule s{std::move(alpha_bar)};
  s.validate();
  return s;
}

NoiseSchedule make_schedule(std::size_t steps, double beta_start, double beta_end) {
  if (steps == 0 || !(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw Error(ErrorCode::kSchedule, "invalid schedule T=" + std::to_string(steps) + " beta in [" +
                                          std::to_string(beta_start) + ", " + std::to_string(beta_end) + "]");
  }
  std::vector<double> a(steps + 1, 1.0);
  for (std::size_t t = 1; t <= steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(steps - 1);
    const double beta = beta_start + (beta_end - beta_start) * frac;
    a[t] = a[t - 1] * (1.0 - beta);
  }
  return NoiseSchedule::from_alpha_bar(std::move(a));
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::kContract, std::string(what) + ": shapes " + shape_string(a.shape()) + " and " +
                                          shape_string(b.shape()) + " differ");
  }
}

}  // namespace

Tensor add_noise(const Tensor& z0, const Tensor& eps, std::size_t t, const NoiseSchedule& schedule) {
  if (t < 1 || t > schedule.steps()) {
    throw Error(ErrorCode::kStep, "step " + std::to_string(t) + " outside [1, " + std::to_string(schedule.steps()) + "]");
  }
  require_same_shape(z0, eps, "add_noise");
  const double a = schedule.at(t);
  return add(scale(z0, std::sqrt(a)), scale(eps, std::sqrt(1.0 - a)));
}

LatentVideo add_noise(const LatentVideo& z0, const Tensor& eps, std::size_t t, const NoiseSchedule& schedule) {
  return {add_noise(z0.tokens, eps, t, schedule), z0.frames, z0.tokens_per_frame};
}

Tensor diffusion_loss(const Tensor& eps, const Tensor& eps_hat) {
  require_same_shape(eps, eps_hat, "diffusion_loss");
  return mse(eps_hat, eps);
}

Tensor ddim_step(const Tensor& z_t, const Tensor& eps_hat, std::size_t t, std::size_t t_prev,
                 const NoiseSchedule& schedule) {
  if (t_prev >= t) {
    throw Error(ErrorCode::kOrdering, "DDIM needs t_prev < t, got " + std::to_string(t_prev) + " >= " + std::to_string(t));
  }
  if (t > schedule.steps()) throw Error(ErrorCode::kStep, "step " + std::to_string(t) + " beyond schedule");
  require_same_shape(z_t, eps_hat, "ddim_step");
  const double a_t = schedule.at(t), a_prev = schedule.at(t_prev);
  const double sig_t = std::sqrt(1.0 - a_t), root_t = std::sqrt(a_t);
  const double sig_prev = std::sqrt(1.0 - a_prev), root_prev = std::sqrt(a_prev);
  return make_op(
      "ddim_step", {z_t, eps_hat}, z_t.shape(),
      [=](std::span<const Tensor> in) {
        auto z = in[0].data();
        auto e = in[1].data();
        std::vector<double> out(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
          const double x0 = (z[i] - sig_t * e[i]) / root_t;
          out[i] = root_prev * x0 + sig_prev * e[i];
        }
        return out;
      },
      [=](const BackwardContext& ctx) {
        const double dz = root_prev / root_t;
        const double de = sig_prev - root_prev * sig_t / root_t;
        for (std::size_t i = 0; i < ctx.grad_output.size(); ++i) {
          if (ctx.needs(0)) ctx.grad_inputs[0][i] += dz * ctx.grad_output[i];
          if (ctx.needs(1)) ctx.grad_inputs[1][i] += de * ctx.grad_output[i];
        }
      });
}

std::vector<std::size_t> ddim_timesteps(std::size_t T, std::size_t count) {
  if (count < 1 || count > T) {
    throw Error(ErrorCode::kParameter, "cannot take " + std::to_string(count) + " DDIM steps over T=" + std::to_string(T));
  }
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back((count - k) * T / count);
  return out;
}

}  // namespace idr::diffusion
