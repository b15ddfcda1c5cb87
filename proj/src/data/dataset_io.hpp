// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "data/synthetic.hpp"

namespace idr::data {

// Layout (all integers little-endian):
//   "LVID" | u8 version | u8 prng id | u16 reserved (0) |
//   u32 frames | u32 tokens_per_frame | u32 channels | u32 components | u32 count
// then `count` records of
//   u64 subject seed | u64 motion seed | F*S*D' f64 latents (row-major) |
//   F*S mask bytes (component index, 255 = background)
inline constexpr char kDatasetMagic[4] = {'L', 'V', 'I', 'D'};
inline constexpr std::uint8_t kDatasetVersion = 1;
inline constexpr std::uint8_t kMaskBackground = 255;
inline constexpr std::size_t kDatasetHeaderSize = 28;

std::size_t dataset_record_size(std::size_t frames, std::size_t tokens_per_frame, std::size_t channels);

std::vector<std::uint8_t> encode_dataset(const Dataset& dataset);
/// Throws kFormat for a bad magic, version or generator id and kCorruption
/// for truncated, oversized or inconsistent bodies.
Dataset decode_dataset(std::vector<std::uint8_t> bytes);

void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace idr::data
