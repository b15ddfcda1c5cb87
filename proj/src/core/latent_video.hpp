// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/tensor.hpp"

namespace idr {

/// Latent tokens of a video laid out frame-major: row f*S + s holds token s of
/// frame f, so `tokens` is [(F*S) x channels].
struct LatentVideo {
  Tensor tokens;
  std::size_t frames = 0;
  std::size_t tokens_per_frame = 0;

  LatentVideo() = default;
  LatentVideo(Tensor t, std::size_t f, std::size_t s) : tokens(std::move(t)), frames(f), tokens_per_frame(s) {
    validate();
  }

  std::size_t token_count() const { return frames * tokens_per_frame; }
  std::size_t channels() const { return tokens.dim(1); }
  std::size_t frame_of_token(std::size_t i) const { return i / tokens_per_frame; }

  std::vector<int> frame_map() const {
    std::vector<int> m(token_count());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<int>(frame_of_token(i));
    return m;
  }

  void validate() const {
    if (!tokens.defined() || tokens.rank() != 2 || frames == 0 || tokens_per_frame == 0 ||
        tokens.dim(0) != frames * tokens_per_frame) {
      throw Error(ErrorCode::kContract, "latent video tokens " +
                                            (tokens.defined() ? shape_string(tokens.shape()) : std::string("<none>")) +
                                            " do not match " + std::to_string(frames) + " frames x " +
                                            std::to_string(tokens_per_frame) + " tokens");
    }
  }
};

}  // namespace idr
