// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace idr::train {

enum class TrainMode { kJoint, kRouterOnly, kTamOnly };

std::string_view mode_name(TrainMode mode);
/// Throws kConfig for anything but joint, router-only, tam-only.
TrainMode parse_mode(std::string_view text);

struct TrainConfig {
  std::string profile = "desk";
  TrainMode mode = TrainMode::kJoint;

  // Objective.
  double lambda_diff = 1.0;
  double lambda_route = 1.0;
  double consistency_weight = 1.0;  // joint mode only
  double null_ratio = 0.1;

  // Optimizer.
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  std::size_t steps = 2000;
  std::size_t grad_accum = 1;
  std::size_t log_every = 10;
  std::size_t checkpoint_every = 0;  // 0: only at the end

  // Modules.
  double alpha = 1.0;
  double beta = 0.2;
  std::size_t chunks = 4;           // K
  std::size_t diffusion_steps = 20;  // T
  double beta_start = 1e-3;
  double beta_end = 0.35;
  std::size_t components = 4;       // M
  std::size_t local_tokens = 8;     // L
  std::size_t local_dim = 16;       // D
  std::size_t latent_dim = 32;      // D'
  std::size_t inner_dim = 16;       // D''
  std::size_t tam_layers = 2;       // N
  std::size_t heads = 2;            // H
  std::size_t blocks = 2;           // B
  std::size_t frames = 8;           // F
  std::size_t tokens_per_frame = 16;  // S
  double init_std = 0.02;
  // TAM projections; phi needs query/key scale to escape the zero-output
  // start.
  double tam_init_std = 0.3;

  // Sampling, corruption and evaluation.
  double cfg_scale = 6.0;
  std::size_t sample_steps = 20;
  double jitter = 0.1;
  std::size_t eval_timestep = 1;
  std::uint64_t seed = 0;
  std::uint64_t eval_seed = 1;

  static TrainConfig desk();
  /// Documented full-scale values. Shape tests only: F=50, S=355 reproduces
  /// the 17750 latent tokens but 50 frames do not split into 4 chunks, so
  /// validate() rejects it with kChunking.
  static TrainConfig paper();
  /// Throws kConfig for an unknown profile name.
  static TrainConfig for_profile(std::string_view name);

  /// Throws kConfig (or kChunking for F % K != 0) on invalid settings.
  void validate() const;

  /// Sets one `key = value` entry. Throws kConfig for an unknown key or an
  /// unparsable value.
  void set(std::string_view key, std::string_view value);

  /// `key = value` lines; parse(to_text()) reproduces the config exactly.
  std::string to_text() const;

  /// Parses `key = value` lines with `#` comments. A `profile` line, if any,
  /// must come first and selects the defaults the other keys override.
  static TrainConfig parse(std::string_view text);
  static TrainConfig load(const std::string& path);
};

}  // namespace idr::train
