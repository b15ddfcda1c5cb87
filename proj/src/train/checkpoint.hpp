// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "train/model.hpp"
#include "train/optimizer.hpp"

namespace idr::train {

// Layout (integers little-endian, strings as u32 length + bytes):
//   "LVCK" | u8 version | u8 flags (bit 0: optimizer present) | u16 reserved |
//   str config text | u64 steps done | str RNG state |
//   u32 n | n tensor records |
//   [u64 optimizer step | u32 n | n moment records named m/<param>, v/<param>]
// tensor record: str name | u32 rank | u64 dims[rank] | u64 count | f64 data[count]
inline constexpr char kCheckpointMagic[4] = {'L', 'V', 'C', 'K'};
inline constexpr std::uint8_t kCheckpointVersion = 1;
inline constexpr std::uint8_t kHasOptimizer = 1;

struct TrainingState {
  Model model;
  std::optional<OptimizerState> optimizer;  // moments follow model.parameters(config.mode)
  std::string rng_state;
  std::uint64_t steps_done = 0;
};

std::size_t tensor_record_size(const std::string& name, const Shape& shape);

std::vector<std::uint8_t> encode_checkpoint(const TrainingState& state);
/// Throws kFormat for a bad magic or version, kSchema when a tensor expected
/// by the stored config is missing, unexpected or mis-shaped, and
/// kCorruption for truncated or inconsistent records.
TrainingState decode_checkpoint(std::vector<std::uint8_t> bytes);

void save_checkpoint(const TrainingState& state, const std::string& path);
TrainingState load_checkpoint(const std::string& path);

}  // namespace idr::train
