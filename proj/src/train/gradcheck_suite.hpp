// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace idr::train {

enum class GradModule { kAll, kKernel, kRouter, kTam, kDenoiser };

GradModule parse_grad_module(std::string_view text);  // kParameter on unknown names
std::string_view grad_module_name(GradModule module);

inline constexpr double kGradTolerance = 1e-5;

struct GradCheckEntry {
  std::string module;
  std::string check;
  double max_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst;
  bool passed = false;
};

struct GradSuiteOptions {
  double eps = 1e-5;                 // central-difference step
  double tolerance = kGradTolerance;
  std::size_t max_coordinates_per_tensor = 12;  // 0 = every coordinate
  std::uint64_t seed = 0;
};

/// Runs the gradient checks for one module (or all of them) on desk-profile
/// shapes with every parameter drawn at random, so no pathway is masked by
/// a zero-initialized projection.
std::vector<GradCheckEntry> run_gradcheck(GradModule module, const GradSuiteOptions& options = {});

bool all_passed(const std::vector<GradCheckEntry>& entries);

}  // namespace idr::train
