// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "core/latent_video.hpp"
#include "core/tensor.hpp"
#include "router/local_router.hpp"

namespace idr::data {

inline constexpr double kMaxSignatureCosine = 0.99;
inline constexpr int kSignatureRetries = 64;

/// The last channel carries no subject content or drift, only token noise:
/// it is where corrupt_temporal puts its per-frame flicker.
constexpr std::size_t flicker_channel(std::size_t channels) { return channels - 1; }

/// Fixed per-subject structure: one unit signature per component, a unit
/// background vector, and an identity vector (normalized sum of signatures).
struct SubjectIdentity {
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> signatures;  // M x D'
  std::vector<double> background;               // D'
  std::vector<double> identity;                 // D'

  std::size_t components() const { return signatures.size(); }
  std::size_t channels() const { return background.size(); }
  friend bool operator==(const SubjectIdentity&, const SubjectIdentity&) = default;
};

/// Signatures and background are zero on the flicker channel.
/// Throws kParameter for M < 2 or D' < 3 and kGeneration if distinct
/// signatures cannot be drawn.
SubjectIdentity gen_subject(std::uint64_t seed, std::size_t components, std::size_t channels);

/// Component index per token slot of one frame, -1 for background. Every
/// component gets at least one slot; about a quarter of the slots are
/// background. Throws kLayout when S < M.
std::vector<int> subject_layout(const SubjectIdentity& subject, std::size_t tokens_per_frame);

/// M feature grids [L x D'] observed for the subject: each row is the
/// component signature plus a small subject-seeded perturbation.
std::vector<Tensor> component_features(const SubjectIdentity& subject, std::size_t local_tokens);

/// Smooth circular drift in a random plane clear of the flicker channel: offset(f) has norm `amplitude`
/// and consecutive offsets differ by 2 * amplitude * sin(frequency / 2).
struct Motion {
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
  std::vector<double> u1, u2;  // orthonormal

  std::vector<double> offset(std::size_t frame) const;
};

Motion gen_motion(std::uint64_t motion_seed, std::size_t channels, double amplitude);

struct VideoOptions {
  std::size_t frames = 8;
  std::size_t tokens_per_frame = 16;
  double noise_level = 0.005;
  double drift_amplitude = 0.1;
};

struct SyntheticSample {
  LatentVideo latents;
  router::ComponentMasks masks;  // over all F*S tokens
  SubjectIdentity subject;
  std::uint64_t motion_seed = 0;
};

/// token = (signature or background) + drift(frame) + clamp(noise_level *
/// N(0,1), +-3 noise_level) per channel.
SyntheticSample gen_video_latents(const SubjectIdentity& subject, std::uint64_t motion_seed, const VideoOptions& options);

/// Adds an independent offset of +jitter or -jitter (fair coin) per frame to
/// the flicker channel of every token in that frame; if every draw agrees
/// the last frame's sign is flipped. Component structure and drift are
/// untouched. Throws kParameter for negative or non-finite jitter.
LatentVideo corrupt_temporal(const LatentVideo& video, double jitter, std::uint64_t seed);
inline LatentVideo corrupt_temporal(const SyntheticSample& sample, double jitter, std::uint64_t seed) {
  return corrupt_temporal(sample.latents, jitter, seed);
}

/// Mean over consecutive frame pairs and token slots of the L2 distance
/// between a token and the same slot in the next frame. 0 for one frame.
double temporal_deviation(const LatentVideo& video);

struct Dataset {
  std::size_t frames = 0;
  std::size_t tokens_per_frame = 0;
  std::size_t channels = 0;
  std::size_t components = 0;
  std::vector<SyntheticSample> samples;
};

struct GenerateOptions {
  std::size_t subjects = 4;
  std::size_t videos_per_subject = 4;
  std::size_t components = 4;
  std::size_t channels = 32;
  std::uint64_t seed = 0;
  VideoOptions video;
};

/// Subject i uses seed mix_seed(seed, i); its video v uses motion seed
/// mix_seed(subject seed, v + 1).
Dataset generate_dataset(const GenerateOptions& options);

}  // namespace idr::data
