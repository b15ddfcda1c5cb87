// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "core/error.hpp"
#include "core/grad_check.hpp"
#include "core/ops.hpp"
#include "temporal/temporal_ar.hpp"
#include "test_util.hpp"

using namespace idr;
using namespace idr::temporal;
using testing_util::bit_equal;
using testing_util::max_abs_diff;
using testing_util::random_tensor;
using testing_util::to_mat;
using testing_util::to_oracle;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an idr::Error";
  return ErrorCode::kIo;
}

TamParams random_tam(const TamDims& dims, Rng& rng, double beta = 0.2) {
  TamParams p = init_tam(dims, rng, 0.4, beta, false);
  for (auto& layer : p.psi.layers) testing_util::randomize_block(layer, rng, 0.4);
  testing_util::randomize_phi(p.phi, rng, 0.4);
  testing_util::randomize(p.start_tokens, rng, 0.5);
  return p;
}

LatentVideo random_video(std::size_t frames, std::size_t per_frame, std::size_t channels, Rng& rng) {
  return {random_tensor({frames * per_frame, channels}, rng), frames, per_frame};
}

double max_abs(const Tensor& t) {
  double m = 0.0;
  for (double v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

TEST(SplitChunksTest, SingleChunkHoldsEverything) {
  Rng rng(1);
  const LatentVideo v = random_video(6, 3, 4, rng);
  const auto chunks = split_chunks(v, 1);
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_TRUE(bit_equal(chunks[0].payload, v.tokens));
  EXPECT_FALSE(chunks[0].conditioned());
  EXPECT_EQ(chunks[0].index, 1u);
}

TEST(SplitChunksTest, DeskShapeReassembles) {
  Rng rng(2);
  const LatentVideo v = random_video(8, 16, 32, rng);
  const auto chunks = split_chunks(v, 4);
  ASSERT_EQ(chunks.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(chunks[k].payload_frames(), 2u);
    EXPECT_EQ(chunks[k].payload.dim(0), 32u);
    EXPECT_EQ(chunks[k].frames, (std::vector<int>{static_cast<int>(2 * k), static_cast<int>(2 * k + 1)}));
  }
  EXPECT_TRUE(bit_equal(join_chunks(chunks).tokens, v.tokens));
}

TEST(SplitChunksTest, IndivisibleFramesNameFandK) {
  Rng rng(3);
  const LatentVideo v = random_video(8, 2, 4, rng);
  try {
    split_chunks(v, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kChunking);
    const std::string msg = e.what();
    EXPECT_NE(msg.find('8'), std::string::npos);
    EXPECT_NE(msg.find('3'), std::string::npos);
  }
  EXPECT_EQ(code_of([&] { split_chunks(v, 0); }), ErrorCode::kChunking);
}

TEST(ChunkTest, TokensRequireConditioning) {
  Rng rng(4);
  const auto chunks = split_chunks(random_video(4, 2, 4, rng), 2);
  EXPECT_EQ(code_of([&] { chunks[1].tokens(); }), ErrorCode::kTeacherForcing);
  Chunk c = chunks[1];
  c.conditioning = random_tensor({2, 4}, rng);
  EXPECT_EQ(c.tokens().dim(0), 6u);
  EXPECT_EQ(c.frame_indices(), (std::vector<int>{1, 1, 2, 2, 3, 3}));
}

TEST(PsiTest, ZeroOutputProjectionsAreIdentity) {
  Rng rng(5);
  const TamParams p = init_tam({2, 4, 4, 2, 2}, rng, 0.3, 0.2, true);
  const Tensor x = random_tensor({6, 4}, rng);
  const std::vector<int> frames{-1, -1, 0, 0, 1, 1};
  EXPECT_TRUE(bit_equal(psi_forward(x, frames, p.psi), x));
}

TEST(PsiTest, SingleLayerSingleHeadMatchesOracle) {
  Rng rng(6);
  TamParams p = random_tam({2, 4, 4, 1, 1}, rng);
  p.psi.heads = 1;
  const Tensor x = random_tensor({6, 4}, rng);
  const std::vector<int> frames{-1, -1, 0, 0, 1, 1};
  const std::vector<int> positions{0, 0, 1, 1, 2, 2};
  EXPECT_LE(max_abs_diff(psi_forward(x, frames, p.psi),
                         oracle::block(to_mat(x), to_oracle(p.psi.layers[0]), 1, frames, positions)),
            1e-10);
}

TEST(PsiTest, TwoLayersTwoHeadsMatchOracle) {
  Rng rng(7);
  const TamParams p = random_tam({3, 8, 4, 2, 2}, rng);
  const Tensor x = random_tensor({9, 8}, rng);
  const std::vector<int> frames{3, 3, 3, 4, 4, 4, 5, 5, 5};
  const std::vector<int> positions{4, 4, 4, 5, 5, 5, 6, 6, 6};
  oracle::Mat h = to_mat(x);
  for (const auto& layer : p.psi.layers) h = oracle::block(h, to_oracle(layer), 2, frames, positions);
  EXPECT_LE(max_abs_diff(psi_forward(x, frames, p.psi), h), 1e-10);
}

TEST(PsiTest, LaterFramesDoNotReachEarlierOutputs) {
  Rng rng(8);
  const TamParams p = random_tam({2, 4, 4, 2, 2}, rng);
  const Tensor x = random_tensor({8, 4}, rng);
  const std::vector<int> frames{0, 0, 1, 1, 2, 2, 3, 3};
  const Tensor base = psi_forward(x, frames, p.psi);
  for (int f = 0; f < 3; ++f) {
    Tensor y = x.clone();
    for (std::size_t r = 2 * static_cast<std::size_t>(f + 1); r < 8; ++r)
      for (std::size_t c = 0; c < 4; ++c) y.mutable_data()[r * 4 + c] += 5.0 * rng.normal();
    const Tensor out = psi_forward(y, frames, p.psi);
    for (std::size_t i = 0; i < 2 * static_cast<std::size_t>(f + 1) * 4; ++i) EXPECT_EQ(out.at(i), base.at(i));
  }
}

TEST(PsiTest, DecreasingFramesRejected) {
  Rng rng(9);
  const TamParams p = random_tam({2, 4, 4, 1, 2}, rng);
  const std::vector<int> frames{0, 1, 0};
  EXPECT_EQ(code_of([&] { psi_forward(random_tensor({3, 4}, rng), frames, p.psi); }), ErrorCode::kOrdering);
}

TEST(RefineChunkTest, ZeroBetaLeavesChunkUnchanged) {
  Rng rng(10);
  const TamParams p = random_tam({2, 4, 4, 1, 2}, rng, 0.0);
  auto chunks = split_chunks(random_video(4, 2, 4, rng), 2);
  chunks[0].conditioning = p.start_tokens;
  const std::vector<int> start_frames{-1, -1};
  const RefinedChunk r = refine_chunk(p.start_tokens, start_frames, chunks[0], p);
  EXPECT_TRUE(bit_equal(r.enhanced.payload, chunks[0].payload));
  EXPECT_EQ(r.bias.dim(0), 6u);
}

TEST(RefineChunkTest, UnconditionedChunkRejected) {
  Rng rng(11);
  const TamParams p = random_tam({2, 4, 4, 1, 2}, rng);
  const auto chunks = split_chunks(random_video(4, 2, 4, rng), 2);
  const std::vector<int> start_frames{-1, -1};
  EXPECT_EQ(code_of([&] { refine_chunk(p.start_tokens, start_frames, chunks[0], p); }), ErrorCode::kTeacherForcing);
}

// Single-frame chunks, one single-head layer and two channels (the fewest
// layer norm accepts).
TEST(RefineChunkTest, SingleFrameChunkMatchesOracle) {
  Rng rng(12);
  TamParams p = random_tam({1, 2, 2, 1, 1}, rng);
  p.psi.heads = 1;
  auto chunks = split_chunks(random_video(2, 1, 2, rng), 2);
  const Tensor context = random_tensor({2, 2}, rng);
  const std::vector<int> context_frames{-1, 0};
  chunks[1].conditioning = slice_rows(context, 1, 1);
  const RefinedChunk r = refine_chunk(context, context_frames, chunks[1], p);

  const oracle::Mat h = oracle::block(to_mat(context), to_oracle(p.psi.layers[0]), 1, context_frames, {0, 1});
  const oracle::Mat bias = oracle::phi(h, to_mat(chunks[1].tokens()), to_oracle(p.phi));
  EXPECT_LE(max_abs_diff(r.bias, bias), 1e-10);
  const oracle::Mat payload = to_mat(chunks[1].payload);
  for (std::size_t c = 0; c < 2; ++c)
    EXPECT_NEAR(r.enhanced.payload.at(0, c), payload[0][c] + p.beta * bias[1][c], 1e-10);
}

TEST(TemporalRefineTest, ZeroBetaIsIdentityForAnyK) {
  Rng rng(13);
  const TamParams p = random_tam({2, 4, 4, 2, 2}, rng, 0.0);
  const LatentVideo v = random_video(8, 2, 4, rng);
  for (std::size_t k : {1u, 2u, 4u, 8u}) EXPECT_TRUE(bit_equal(temporal_refine(v, p, k).tokens, v.tokens));
}

TEST(TemporalRefineTest, ZeroInitIsIdentity) {
  Rng rng(14);
  const TamParams p = init_tam({2, 4, 4, 2, 2}, rng, 0.3, 0.2, true);
  const LatentVideo v = random_video(8, 2, 4, rng);
  EXPECT_TRUE(bit_equal(temporal_refine(v, p, 4).tokens, v.tokens));
}

TEST(TemporalRefineTest, TinyTraceMatchesHandComposition) {
  Rng rng(15);
  TamParams p = random_tam({1, 2, 2, 1, 1}, rng);
  p.psi.heads = 1;
  const LatentVideo v = random_video(2, 1, 2, rng);
  EXPECT_LE(max_abs_diff(temporal_refine(v, p, 2).tokens, oracle::temporal_refine(to_mat(v.tokens), 2, 1, 2, to_oracle(p))),
            1e-10);
}

TEST(TemporalRefineTest, DeskLikeShapeMatchesOracle) {
  Rng rng(16);
  const TamParams p = random_tam({3, 8, 4, 2, 2}, rng);
  const LatentVideo v = random_video(6, 3, 8, rng);
  for (std::size_t k : {1u, 3u}) {
    EXPECT_LE(max_abs_diff(temporal_refine(v, p, k).tokens,
                           oracle::temporal_refine(to_mat(v.tokens), 6, 3, k, to_oracle(p))),
              1e-10);
  }
}

TEST(TemporalRefineTest, LaterChunksDoNotReachEarlierOnes) {
  Rng rng(17);
  const TamParams p = random_tam({2, 4, 4, 2, 2}, rng);
  const LatentVideo v = random_video(8, 2, 4, rng);
  const Tensor base = temporal_refine(v, p, 4).tokens;
  const std::size_t rows_per_chunk = 2 * 2;
  for (std::size_t j = 1; j < 4; ++j) {
    Tensor t = v.tokens.clone();
    for (std::size_t r = j * rows_per_chunk; r < (j + 1) * rows_per_chunk; ++r)
      for (std::size_t c = 0; c < 4; ++c) t.mutable_data()[r * 4 + c] += 3.0 * rng.normal();
    const Tensor out = temporal_refine(LatentVideo(t, 8, 2), p, 4).tokens;
    for (std::size_t i = 0; i < j * rows_per_chunk * 4; ++i) EXPECT_EQ(out.at(i), base.at(i));
    bool moved = false;
    for (std::size_t i = j * rows_per_chunk * 4; i < out.numel(); ++i) moved |= out.at(i) != base.at(i);
    EXPECT_TRUE(moved);
  }
}

TEST(TemporalRefineTest, OutputStaysWithinBetaTimesBias) {
  Rng rng(18);
  TamParams p = random_tam({2, 4, 4, 2, 2}, rng);
  const LatentVideo v = random_video(8, 2, 4, rng);
  auto chunks = split_chunks(v, 4);
  Tensor context = p.start_tokens;
  std::vector<int> frames(2, kStartFrame);
  for (Chunk& c : chunks) {
    c.conditioning = slice_rows(context, context.dim(0) - 2, 2);
    const RefinedChunk r = refine_chunk(context, frames, c, p);
    const Tensor delta = sub(r.enhanced.payload, c.payload);
    EXPECT_LE(max_abs(delta), p.beta * max_abs(r.bias) * (1 + 1e-12));
    context = r.enhanced.tokens();
    frames = r.enhanced.frame_indices();
  }

  // Shrinking beta shrinks the change linearly.
  double prev = 0.0;
  for (double beta : {1e-2, 5e-3, 2.5e-3}) {
    p.beta = beta;
    const double d = max_abs(sub(temporal_refine(v, p, 4).tokens, v.tokens)) / beta;
    if (prev > 0) {
      EXPECT_NEAR(d / prev, 1.0, 0.05);
    }
    prev = d;
  }
}

TEST(TemporalRefineTest, GradientsWithinTolerance) {
  Rng rng(19);
  TamParams p = random_tam({2, 4, 4, 2, 2}, rng);
  const LatentVideo v = random_video(4, 2, 4, rng);
  const Tensor target = random_tensor({8, 4}, rng);
  nn::NamedTensors named;
  p.append_named("tam", named);
  std::vector<Tensor> params;
  for (auto& [name, t] : named) params.push_back(t);
  EXPECT_LE(grad_check([&] { return mse(temporal_refine(v, p, 2).tokens, target); }, params, 1e-5), 1e-5);
}
