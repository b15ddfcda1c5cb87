// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "core/error.hpp"
#include "core/random.hpp"

namespace idr::data {

namespace {

// Seed streams derived from a subject or motion seed.
constexpr std::uint64_t kSignatureStream = 0;
constexpr std::uint64_t kBackgroundStream = 1;
constexpr std::uint64_t kLayoutStream = 1000;
constexpr std::uint64_t kFeatureStream = 2000;
constexpr std::uint64_t kDriftStream = 0;
constexpr std::uint64_t kNoiseStream = 1;

constexpr double kFeatureNoise = 0.05;
constexpr double kNoiseClamp = 3.0;
constexpr double kMinFrequency = 0.2;
constexpr double kMaxFrequency = 0.6;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  for (double& x : v) x /= n;
}

std::vector<double> random_unit(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  double norm2 = 0.0;
  while (norm2 < 1e-12) {
    for (double& x : v) x = rng.normal();
    norm2 = dot(v, v);
  }
  normalize(v);
  return v;
}

// Unit vector with a zero flicker channel.
std::vector<double> content_unit(Rng& rng, std::size_t channels) {
  std::vector<double> v = random_unit(rng, channels - 1);
  v.push_back(0.0);
  return v;
}

}  // namespace

SubjectIdentity gen_subject(std::uint64_t seed, std::size_t components, std::size_t channels) {
  if (components < 2) throw Error(ErrorCode::kParameter, "a subject needs at least two components");
  if (channels < 3) {
    throw Error(ErrorCode::kParameter, "a subject needs at least three channels (one is the flicker channel)");
  }
  SubjectIdentity s;
  s.seed = seed;
  Rng rng(mix_seed(seed, kSignatureStream));
  for (std::size_t m = 0; m < components; ++m) {
    bool accepted = false;
    for (int attempt = 0; attempt < kSignatureRetries && !accepted; ++attempt) {
      std::vector<double> candidate = content_unit(rng, channels);
      accepted = std::all_of(s.signatures.begin(), s.signatures.end(),
                             [&](const std::vector<double>& other) { return dot(candidate, other) < kMaxSignatureCosine; });
      if (accepted) s.signatures.push_back(std::move(candidate));
    }
    if (!accepted) {
      throw Error(ErrorCode::kGeneration, "no distinct signature for component " + std::to_string(m) + " after " +
                                              std::to_string(kSignatureRetries) + " draws");
    }
  }
  Rng bg(mix_seed(seed, kBackgroundStream));
  s.background = content_unit(bg, channels);
  s.identity.assign(channels, 0.0);
  for (const auto& sig : s.signatures) {
    for (std::size_t c = 0; c < channels; ++c) s.identity[c] += sig[c];
  }
  if (dot(s.identity, s.identity) > 0.0) normalize(s.identity);
  return s;
}

std::vector<int> subject_layout(const SubjectIdentity& subject, std::size_t tokens_per_frame) {
  const std::size_t m = subject.components(), s = tokens_per_frame;
  if (s < m) {
    throw Error(ErrorCode::kLayout, std::to_string(s) + " token slots cannot hold " + std::to_string(m) + " components");
  }
  const std::size_t background = std::min(s / 4, s - m);
  std::vector<std::size_t> slots(s);
  for (std::size_t i = 0; i < s; ++i) slots[i] = i;
  Rng rng(mix_seed(subject.seed, kLayoutStream + s));
  for (std::size_t i = s; i > 1; --i) std::swap(slots[i - 1], slots[rng.uniform_int(0, i - 1)]);
  std::vector<int> layout(s, router::ComponentMasks::kBackground);
  for (std::size_t i = background; i < s; ++i) layout[slots[i]] = static_cast<int>((i - background) % m);
  return layout;
}

std::vector<Tensor> component_features(const SubjectIdentity& subject, std::size_t local_tokens) {
  const std::size_t d = subject.channels();
  Rng rng(mix_seed(subject.seed, kFeatureStream + local_tokens));
  std::vector<Tensor> out;
  for (const auto& sig : subject.signatures) {
    std::vector<double> v(local_tokens * d);
    for (std::size_t l = 0; l < local_tokens; ++l) {
      for (std::size_t c = 0; c < d; ++c) v[l * d + c] = sig[c] + kFeatureNoise * rng.normal();
    }
    out.emplace_back(Shape{local_tokens, d}, std::move(v));
  }
  return out;
}

std::vector<double> Motion::offset(std::size_t frame) const {
  const double angle = frequency * static_cast<double>(frame) + phase;
  const double a = amplitude * std::cos(angle), b = amplitude * std::sin(angle);
  std::vector<double> out(u1.size());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = a * u1[c] + b * u2[c];
  return out;
}

Motion gen_motion(std::uint64_t motion_seed, std::size_t channels, double amplitude) {
  if (channels < 3) throw Error(ErrorCode::kParameter, "motion needs at least three channels");
  Rng rng(mix_seed(motion_seed, kDriftStream));
  Motion m;
  m.amplitude = amplitude;
  m.frequency = kMinFrequency + (kMaxFrequency - kMinFrequency) * rng.uniform();
  m.phase = 2.0 * std::numbers::pi * rng.uniform();
  m.u1 = content_unit(rng, channels);
  // Gram-Schmidt against u1.
  do {
    m.u2 = content_unit(rng, channels);
    const double p = dot(m.u1, m.u2);
    for (std::size_t c = 0; c < channels; ++c) m.u2[c] -= p * m.u1[c];
  } while (dot(m.u2, m.u2) < 1e-6);
  normalize(m.u2);
  return m;
}

SyntheticSample gen_video_latents(const SubjectIdentity& subject, std::uint64_t motion_seed, const VideoOptions& o) {
  if (o.frames == 0) throw Error(ErrorCode::kParameter, "a video needs at least one frame");
  if (!(o.noise_level >= 0.0) || !std::isfinite(o.noise_level) || !(o.drift_amplitude >= 0.0) ||
      !std::isfinite(o.drift_amplitude)) {
    throw Error(ErrorCode::kParameter, "noise level and drift amplitude must be finite and non-negative");
  }
  const std::vector<int> layout = subject_layout(subject, o.tokens_per_frame);
  const std::size_t d = subject.channels(), s = o.tokens_per_frame;
  const Motion motion = gen_motion(motion_seed, d, o.drift_amplitude);
  Rng noise(mix_seed(motion_seed, kNoiseStream));
  const double clamp = kNoiseClamp * o.noise_level;

  std::vector<double> v(o.frames * s * d);
  std::vector<int> labels(o.frames * s);
  for (std::size_t f = 0; f < o.frames; ++f) {
    const std::vector<double> drift = motion.offset(f);
    for (std::size_t slot = 0; slot < s; ++slot) {
      const int label = layout[slot];
      const std::vector<double>& base =
          label == router::ComponentMasks::kBackground ? subject.background : subject.signatures[static_cast<std::size_t>(label)];
      double* out = &v[(f * s + slot) * d];
      for (std::size_t c = 0; c < d; ++c) {
        const double n = std::clamp(o.noise_level * noise.normal(), -clamp, clamp);
        out[c] = base[c] + drift[c] + n;
      }
      labels[f * s + slot] = label;
    }
  }
  SyntheticSample sample;
  sample.latents = LatentVideo(Tensor(Shape{o.frames * s, d}, std::move(v)), o.frames, s);
  sample.masks = router::ComponentMasks::from_labels(subject.components(), labels);
  sample.subject = subject;
  sample.motion_seed = motion_seed;
  return sample;
}

LatentVideo corrupt_temporal(const LatentVideo& video, double jitter, std::uint64_t seed) {
  if (!(jitter >= 0.0) || !std::isfinite(jitter)) throw Error(ErrorCode::kParameter, "jitter must be finite and >= 0");
  video.validate();
  if (jitter == 0.0) return {video.tokens.clone(), video.frames, video.tokens_per_frame};
  const std::size_t d = video.channels(), s = video.tokens_per_frame;
  const std::size_t flicker = flicker_channel(d);
  Rng rng(seed);
  std::vector<double> v(video.tokens.data().begin(), video.tokens.data().end());
  std::vector<double> offsets(video.frames);
  for (double& o : offsets) o = rng.uniform() < 0.5 ? -jitter : jitter;
  // A constant offset would leave every frame-to-frame difference as it was.
  if (video.frames > 1 && std::all_of(offsets.begin(), offsets.end(), [&](double o) { return o == offsets[0]; })) {
    offsets.back() = -offsets.back();
  }
  for (std::size_t f = 0; f < video.frames; ++f) {
    for (std::size_t slot = 0; slot < s; ++slot) v[(f * s + slot) * d + flicker] += offsets[f];
  }
  return {Tensor(video.tokens.shape(), std::move(v)), video.frames, s};
}

double temporal_deviation(const LatentVideo& video) {
  video.validate();
  if (video.frames < 2) return 0.0;
  const std::size_t d = video.channels(), s = video.tokens_per_frame;
  auto x = video.tokens.data();
  double total = 0.0;
  for (std::size_t f = 0; f + 1 < video.frames; ++f) {
    for (std::size_t slot = 0; slot < s; ++slot) {
      const double* a = &x[(f * s + slot) * d];
      const double* b = &x[((f + 1) * s + slot) * d];
      double sq = 0.0;
      for (std::size_t c = 0; c < d; ++c) sq += (b[c] - a[c]) * (b[c] - a[c]);
      total += std::sqrt(sq);
    }
  }
  return total / static_cast<double>((video.frames - 1) * s);
}

Dataset generate_dataset(const GenerateOptions& o) {
  Dataset ds;
  ds.frames = o.video.frames;
  ds.tokens_per_frame = o.video.tokens_per_frame;
  ds.channels = o.channels;
  ds.components = o.components;
  for (std::size_t i = 0; i < o.subjects; ++i) {
    const SubjectIdentity subject = gen_subject(mix_seed(o.seed, i), o.components, o.channels);
    for (std::size_t v = 0; v < o.videos_per_subject; ++v) {
      ds.samples.push_back(gen_video_latents(subject, mix_seed(subject.seed, v + 1), o.video));
    }
  }
  return ds;
}

}  // namespace idr::data
