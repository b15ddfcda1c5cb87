// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "core/random.hpp"
#include "data/synthetic.hpp"
#include "diffusion/schedule.hpp"
#include "train/checkpoint.hpp"
#include "train/config.hpp"
#include "train/model.hpp"
#include "train/optimizer.hpp"

namespace idr::train {

/// lambda_diff * l_diff + lambda_route * l_route.
double total_loss(double l_diff, double l_route, double lambda_diff, double lambda_route);
Tensor total_loss(const Tensor& l_diff, const Tensor& l_route, double lambda_diff, double lambda_route);

struct StepLosses {
  double l_diff = 0.0;
  double l_route = 0.0;
  double l_consistency = 0.0;
  double l_total = 0.0;  // the optimized objective
  std::size_t timestep = 0;
  bool used_null = false;  // any micro-batch drew the null condition
};

/// Batch-size-1 optimization over a dataset. Each micro-step draws, in
/// order: a sample index; then, unless tam-only, t in [1, T], the noise and
/// the null-condition coin; then, unless router-only, the corruption seed.
/// Router-only and joint minimize lambda_diff * l_diff + lambda_route *
/// l_route (joint adds consistency_weight * l_consistency); tam-only
/// minimizes l_consistency = mse(temporal_refine(corrupted), clean). The
/// routing loss is skipped on null-condition draws.
class Trainer {
 public:
  Trainer(TrainConfig config, data::Dataset data);
  /// Resumes `state`. A different `mode` keeps the weights but starts a
  /// fresh optimizer and step count.
  Trainer(TrainingState state, data::Dataset data, std::optional<TrainMode> mode = std::nullopt);

  StepLosses step();

  const Model& model() const { return model_; }
  const TrainConfig& config() const { return model_.config; }
  const OptimizerState& optimizer() const { return optimizer_; }
  std::uint64_t steps_done() const { return steps_done_; }
  const Rng& rng() const { return rng_; }

  TrainingState state() const;

 private:
  void check_data() const;
  StepLosses micro_step(double weight);

  Model model_;
  std::vector<Tensor> params_;
  OptimizerState optimizer_;
  Rng rng_;
  data::Dataset data_;
  diffusion::NoiseSchedule schedule_;
  std::uint64_t steps_done_ = 0;
};

struct LoopOptions {
  std::string out_dir;  // metrics.csv and checkpoint.lvck; empty: no files
  std::function<void(std::uint64_t step, const StepLosses&)> progress;
};

inline constexpr const char* kMetricsHeader = "step,l_diff,l_route,l_total,wall_ms";

/// Runs until config.steps optimizer steps are done. Appends one CSV row per
/// log interval (means over the interval, wall time since the call began) and
/// writes checkpoint.lvck at the end and every checkpoint_every steps.
/// Returns the losses of every step taken.
std::vector<StepLosses> train_loop(Trainer& trainer, const LoopOptions& options);

}  // namespace idr::train
