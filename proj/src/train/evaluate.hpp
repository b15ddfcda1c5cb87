// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>

#include "data/synthetic.hpp"
#include "train/model.hpp"

namespace idr::train {

struct MetricsReport {
  double routing_accuracy = 0.0;  // pooled over all foreground tokens
  double mean_route_loss = 0.0;
  double mean_diff_loss = 0.0;
  double temporal_deviation_before = 0.0;
  double temporal_deviation_after = 0.0;
  std::size_t samples = 0;
  std::size_t foreground_tokens = 0;
};

/// Per sample i: noise seeded by mix_seed(eval_seed, 2i) at t =
/// eval_timestep under the full condition gives the diffusion and routing
/// losses and the routing accuracy; corrupt_temporal(jitter, mix_seed(
/// eval_seed, 2i+1)) gives the deviation before and after temporal_refine.
/// Means over samples. Throws kEvaluation for an empty dataset and
/// kContract on dimension mismatch.
MetricsReport evaluate(const Model& model, const data::Dataset& dataset);

/// Header line plus one row.
std::string metrics_csv(const MetricsReport& report);

}  // namespace idr::train
