// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "data/synthetic.hpp"
#include "diffusion/denoiser.hpp"
#include "diffusion/schedule.hpp"
#include "temporal/temporal_ar.hpp"
#include "train/config.hpp"

namespace idr::train {

diffusion::DenoiserDims denoiser_dims(const TrainConfig& config);
temporal::TamDims tam_dims(const TrainConfig& config);

/// Every parameter name and shape the config implies, in checkpoint order,
/// computed without allocating ("denoiser.*" then "tam.*").
std::vector<std::pair<std::string, Shape>> model_param_shapes(const TrainConfig& config);

/// Denoiser (with the embedded router and encoder) plus the temporal module.
struct Model {
  TrainConfig config;
  diffusion::DenoiserParams denoiser;
  temporal::TamParams tam;

  /// Seeded from config.seed.
  static Model init(const TrainConfig& config);

  /// The tensors a mode optimizes: joint all, router-only everything but the
  /// temporal module, tam-only the temporal module alone.
  nn::NamedTensors named_parameters(TrainMode mode = TrainMode::kJoint) const;
  std::vector<Tensor> parameters(TrainMode mode) const;
  diffusion::NoiseSchedule schedule() const;
};

/// Conditioning derived from a subject: its component feature grids and
/// identity vector.
diffusion::ConditionBundle condition_for(const data::SubjectIdentity& subject, std::size_t local_tokens);

}  // namespace idr::train
