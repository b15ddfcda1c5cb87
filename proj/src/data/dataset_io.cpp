// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "data/dataset_io.hpp"

#include <cstring>
#include <limits>

#include "core/binary_io.hpp"
#include "core/error.hpp"
#include "core/random.hpp"

namespace idr::data {

std::size_t dataset_record_size(std::size_t frames, std::size_t tokens_per_frame, std::size_t channels) {
  return 16 + frames * tokens_per_frame * channels * 8 + frames * tokens_per_frame;
}

namespace {

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kContract, std::string(what) + " does not fit the dataset header");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
  const std::size_t tokens = ds.frames * ds.tokens_per_frame;
  io::Writer w;
  w.bytes(kDatasetMagic, 4);
  w.u8(kDatasetVersion);
  w.u8(Rng::kAlgorithmId);
  w.u16(0);
  w.u32(checked_u32(ds.frames, "frames"));
  w.u32(checked_u32(ds.tokens_per_frame, "tokens per frame"));
  w.u32(checked_u32(ds.channels, "channels"));
  w.u32(checked_u32(ds.components, "components"));
  w.u32(checked_u32(ds.samples.size(), "sample count"));
  for (const SyntheticSample& s : ds.samples) {
    if (s.latents.frames != ds.frames || s.latents.tokens_per_frame != ds.tokens_per_frame ||
        s.latents.channels() != ds.channels || s.masks.components != ds.components || s.masks.tokens != tokens) {
      throw Error(ErrorCode::kContract, "sample dimensions differ from the dataset header");
    }
    w.u64(s.subject.seed);
    w.u64(s.motion_seed);
    for (double x : s.latents.tokens.data()) w.f64(x);
    for (int label : s.masks.labels()) {
      w.u8(label == router::ComponentMasks::kBackground ? kMaskBackground : static_cast<std::uint8_t>(label));
    }
  }
  return w.buffer();
}

Dataset decode_dataset(std::vector<std::uint8_t> bytes) {
  io::Reader r(std::move(bytes));
  char magic[4];
  if (r.remaining() < 4) throw Error(ErrorCode::kFormat, "file too short for a dataset header");
  r.bytes(magic, 4);
  if (std::memcmp(magic, kDatasetMagic, 4) != 0) throw Error(ErrorCode::kFormat, "not a dataset file (bad magic)");
  const std::uint8_t version = r.u8();
  if (version != kDatasetVersion) {
    throw Error(ErrorCode::kFormat, "unsupported dataset version " + std::to_string(version));
  }
  const std::uint8_t prng = r.u8();
  if (prng != Rng::kAlgorithmId) throw Error(ErrorCode::kFormat, "unknown generator id " + std::to_string(prng));
  r.u16();
  Dataset ds;
  ds.frames = r.u32();
  ds.tokens_per_frame = r.u32();
  ds.channels = r.u32();
  ds.components = r.u32();
  const std::size_t count = r.u32();
  if (ds.frames == 0 || ds.tokens_per_frame == 0 || ds.channels == 0 || ds.components < 2 || ds.components > 255) {
    throw Error(ErrorCode::kFormat, "dataset header has invalid dimensions");
  }
  const std::size_t record = dataset_record_size(ds.frames, ds.tokens_per_frame, ds.channels);
  if (r.remaining() != count * record) {
    throw Error(ErrorCode::kCorruption, "body holds " + std::to_string(r.remaining()) + " bytes, expected " +
                                            std::to_string(count) + " records of " + std::to_string(record));
  }
  const std::size_t tokens = ds.frames * ds.tokens_per_frame;
  for (std::size_t i = 0; i < count; ++i) {
    SyntheticSample s;
    const std::uint64_t subject_seed = r.u64();
    s.motion_seed = r.u64();
    std::vector<double> v(tokens * ds.channels);
    for (double& x : v) x = r.f64();
    std::vector<int> labels(tokens);
    for (int& l : labels) {
      const std::uint8_t b = r.u8();
      if (b != kMaskBackground && b >= ds.components) {
        throw Error(ErrorCode::kCorruption, "mask byte " + std::to_string(b) + " in record " + std::to_string(i));
      }
      l = b == kMaskBackground ? router::ComponentMasks::kBackground : b;
    }
    try {
      s.latents = LatentVideo(Tensor(Shape{tokens, ds.channels}, std::move(v)), ds.frames, ds.tokens_per_frame);
    } catch (const Error& e) {
      throw Error(ErrorCode::kCorruption, "record " + std::to_string(i) + ": " + e.what());
    }
    s.masks = router::ComponentMasks::from_labels(ds.components, labels);
    s.subject = gen_subject(subject_seed, ds.components, ds.channels);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void save_dataset(const Dataset& dataset, const std::string& path) { io::write_file(path, encode_dataset(dataset)); }

Dataset load_dataset(const std::string& path) { return decode_dataset(io::read_file(path)); }

}  // namespace idr::data
