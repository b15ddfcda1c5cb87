// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/random.hpp"
#include "data/synthetic.hpp"
#include "temporal/temporal_ar.hpp"
#include "test_util.hpp"
#include "train/checkpoint.hpp"
#include "train/config.hpp"
#include "train/evaluate.hpp"
#include "train/model.hpp"
#include "train/optimizer.hpp"
#include "train/trainer.hpp"

using namespace idr;
using namespace idr::train;
using testing_util::bit_equal;
using testing_util::scratch_dir;

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

// Small enough that a thousand steps take well under a second each batch.
TrainConfig tiny_config() {
  TrainConfig c = TrainConfig::desk();
  c.frames = 4;
  c.chunks = 2;
  c.tokens_per_frame = 4;
  c.latent_dim = 8;
  c.local_tokens = 2;
  c.local_dim = 4;
  c.inner_dim = 4;
  c.heads = 1;
  c.blocks = 1;
  c.tam_layers = 1;
  c.components = 2;
  c.diffusion_steps = 10;
  c.sample_steps = 5;
  c.steps = 20;
  c.log_every = 5;
  return c;
}

data::Dataset data_for(const TrainConfig& c, std::size_t subjects, std::size_t videos, std::uint64_t seed) {
  data::GenerateOptions g;
  g.subjects = subjects;
  g.videos_per_subject = videos;
  g.components = c.components;
  g.channels = c.latent_dim;
  g.seed = seed;
  g.video.frames = c.frames;
  g.video.tokens_per_frame = c.tokens_per_frame;
  return data::generate_dataset(g);
}

std::uint64_t fnv(std::span<const double> values, std::uint64_t h = 1469598103934665603ULL) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
  for (std::size_t i = 0; i < values.size_bytes(); ++i) h = (h ^ bytes[i]) * 1099511628211ULL;
  return h;
}

std::uint64_t hash_params(const nn::NamedTensors& named, const std::string& prefix) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& [name, t] : named) {
    if (name.rfind(prefix, 0) == 0) h = fnv(t.data(), h);
  }
  return h;
}

bool same_losses(const StepLosses& a, const StepLosses& b) {
  return std::memcmp(&a.l_diff, &b.l_diff, sizeof(double)) == 0 &&
         std::memcmp(&a.l_route, &b.l_route, sizeof(double)) == 0 &&
         std::memcmp(&a.l_consistency, &b.l_consistency, sizeof(double)) == 0 &&
         std::memcmp(&a.l_total, &b.l_total, sizeof(double)) == 0 && a.timestep == b.timestep &&
         a.used_null == b.used_null;
}

bool same_weights(const Model& a, const Model& b) {
  const nn::NamedTensors x = a.named_parameters();
  const nn::NamedTensors y = b.named_parameters();
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].first != y[i].first || !bit_equal(x[i].second, y[i].second)) return false;
  }
  return true;
}

double direct_deviation(const Tensor& tokens, std::size_t frames, std::size_t per_frame) {
  if (frames < 2) return 0.0;
  const std::size_t d = tokens.dim(1);
  double sum = 0.0;
  for (std::size_t f = 0; f + 1 < frames; ++f) {
    for (std::size_t s = 0; s < per_frame; ++s) {
      double sq = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = tokens.at((f + 1) * per_frame + s, c) - tokens.at(f * per_frame + s, c);
        sq += diff * diff;
      }
      sum += std::sqrt(sq);
    }
  }
  return sum / static_cast<double>((frames - 1) * per_frame);
}

}  // namespace

// ---- configuration --------------------------------------------------------

TEST(ConfigTest, DeskProfileDefaults) {
  const TrainConfig c = TrainConfig::desk();
  EXPECT_EQ(c.frames, 8u);
  EXPECT_EQ(c.tokens_per_frame, 16u);
  EXPECT_EQ(c.latent_dim, 32u);
  EXPECT_EQ(c.components, 4u);
  EXPECT_EQ(c.local_tokens, 8u);
  EXPECT_EQ(c.local_dim, 16u);
  EXPECT_EQ(c.inner_dim, 16u);
  EXPECT_EQ(c.tam_layers, 2u);
  EXPECT_EQ(c.heads, 2u);
  EXPECT_EQ(c.blocks, 2u);
  EXPECT_EQ(c.chunks, 4u);
  EXPECT_EQ(c.diffusion_steps, 20u);
  EXPECT_EQ(c.steps, 2000u);
  EXPECT_NO_THROW(c.validate());
}

TEST(ConfigTest, PaperProfileValues) {
  const TrainConfig c = TrainConfig::paper();
  EXPECT_EQ(c.lambda_diff, 1.0);
  EXPECT_EQ(c.lambda_route, 1.0);
  EXPECT_EQ(c.lr, 3e-6);
  EXPECT_EQ(c.null_ratio, 0.1);
  EXPECT_EQ(c.components, 6u);
  EXPECT_EQ(c.local_tokens, 32u);
  EXPECT_EQ(c.local_dim, 2048u);
  EXPECT_EQ(c.frames * c.tokens_per_frame, 17750u);
  EXPECT_EQ(c.latent_dim, 3072u);
  EXPECT_EQ(c.inner_dim, 2048u);
  EXPECT_EQ(c.tam_layers, 6u);
  EXPECT_EQ(c.chunks, 4u);
  EXPECT_EQ(c.alpha, 1.0);
  EXPECT_EQ(c.beta, 0.2);
  EXPECT_EQ(c.diffusion_steps, 50u);
  EXPECT_EQ(c.cfg_scale, 6.0);
}

TEST(ConfigTest, PaperProfileFailsChunking) {
  EXPECT_EQ(code_of([] { TrainConfig::paper().validate(); }), ErrorCode::kChunking);
}

TEST(ConfigTest, TextRoundTrip) {
  TrainConfig c = TrainConfig::desk();
  c.lr = 0.1 + 0.2;  // not exactly representable in short decimal form
  c.seed = 0xFFFFFFFFFFFFFFFFULL;
  c.mode = TrainMode::kTamOnly;
  c.jitter = 1.0 / 3.0;
  const TrainConfig back = TrainConfig::parse(c.to_text());
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.lr, c.lr);
  EXPECT_EQ(back.jitter, c.jitter);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.mode, TrainMode::kTamOnly);
}

TEST(ConfigTest, ParseOverridesProfileAndIgnoresComments) {
  const TrainConfig c = TrainConfig::parse("profile = paper\n# comment\nlr = 0.5  # trailing\n\n");
  EXPECT_EQ(c.profile, "paper");
  EXPECT_EQ(c.lr, 0.5);
  EXPECT_EQ(c.latent_dim, 3072u);
}

TEST(ConfigTest, Errors) {
  EXPECT_EQ(code_of([] { TrainConfig::parse("no_such_key = 1\n"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([] { TrainConfig::parse("lr = fast\n"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([] { TrainConfig::parse("lr = 1\nprofile = desk\n"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([] { TrainConfig::for_profile("laptop"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([] { TrainConfig::load("/nonexistent/idroute.cfg"); }), ErrorCode::kIo);
  TrainConfig c = TrainConfig::desk();
  c.components = 1;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kConfig);
}

TEST(ConfigTest, ParseMode) {
  EXPECT_EQ(parse_mode("joint"), TrainMode::kJoint);
  EXPECT_EQ(parse_mode("router-only"), TrainMode::kRouterOnly);
  EXPECT_EQ(parse_mode("tam-only"), TrainMode::kTamOnly);
  EXPECT_EQ(mode_name(TrainMode::kRouterOnly), "router-only");
  EXPECT_EQ(code_of([] { parse_mode("both"); }), ErrorCode::kConfig);
}

TEST(ModelTest, ParamShapesMatchInitialization) {
  const TrainConfig c = TrainConfig::desk();
  const auto shapes = model_param_shapes(c);
  const nn::NamedTensors named = Model::init(c).named_parameters();
  ASSERT_EQ(shapes.size(), named.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    EXPECT_EQ(shapes[i].first, named[i].first);
    EXPECT_EQ(shapes[i].second, named[i].second.shape()) << shapes[i].first;
  }
}

TEST(ModelTest, PaperProfileShapes) {
  const auto shapes = model_param_shapes(TrainConfig::paper());
  auto shape_of = [&](const std::string& name) {
    for (const auto& [n, s] : shapes) {
      if (n == name) return s;
    }
    ADD_FAILURE() << "missing " << name;
    return Shape{};
  };
  EXPECT_EQ(shape_of("denoiser.in_proj"), (Shape{3072, 3072}));
  EXPECT_EQ(shape_of("denoiser.router.aggregators"), (Shape{6, 32}));
  EXPECT_EQ(shape_of("denoiser.router.local_proj"), (Shape{2048, 2048}));
  EXPECT_EQ(shape_of("denoiser.router.latent_proj"), (Shape{3072, 2048}));
  EXPECT_EQ(shape_of("denoiser.null_local"), (Shape{6 * 32, 2048}));
  EXPECT_EQ(shape_of("tam.start_tokens"), (Shape{355, 3072}));
  EXPECT_EQ(shape_of("tam.psi.5.wq"), (Shape{3072, 3072}));
  std::size_t psi_layers = 0;
  for (const auto& [n, s] : shapes) psi_layers += n.size() > 10 && n.ends_with(".wq") && n.rfind("tam.psi.", 0) == 0;
  EXPECT_EQ(psi_layers, 6u);
}

TEST(ModelTest, UntrainedModeSplitsParameters) {
  const Model m = Model::init(tiny_config());
  const std::size_t all = m.parameters(TrainMode::kJoint).size();
  const std::size_t router = m.parameters(TrainMode::kRouterOnly).size();
  const std::size_t tam = m.parameters(TrainMode::kTamOnly).size();
  EXPECT_EQ(all, router + tam);
  for (const auto& [name, t] : m.named_parameters(TrainMode::kTamOnly)) EXPECT_EQ(name.rfind("tam.", 0), 0u);
  for (const auto& [name, t] : m.named_parameters(TrainMode::kRouterOnly)) {
    EXPECT_EQ(name.rfind("denoiser.", 0), 0u);
  }
}

// ---- optimizer ------------------------------------------------------------

TEST(AdamWTest, ZeroGradientNoDecayLeavesParams) {
  std::vector<Tensor> params{Tensor(Shape{2, 2}, std::vector<double>{1, -2, 3, 0.5})};
  const Tensor before = params[0].clone();
  OptimizerState s = OptimizerState::for_params(params, {0.1, 0.9, 0.999, 1e-8, 0.0});
  const std::vector<double> zero(4, 0.0);
  const std::vector<std::span<const double>> grads{zero};
  for (int i = 0; i < 3; ++i) adamw_step(params, grads, s);
  EXPECT_TRUE(bit_equal(params[0], before));
  EXPECT_EQ(s.step, 3u);
}

TEST(AdamWTest, DecoupledDecayScalesParams) {
  std::vector<Tensor> params{Tensor::vector({1.0, -4.0, 2.5})};
  OptimizerState s = OptimizerState::for_params(params, {0.1, 0.9, 0.999, 1e-8, 0.1});
  const std::vector<double> zero(3, 0.0);
  const std::vector<std::span<const double>> grads{zero};
  adamw_step(params, grads, s);
  EXPECT_DOUBLE_EQ(params[0].at(0), 0.99);
  EXPECT_DOUBLE_EQ(params[0].at(1), -3.96);
  EXPECT_DOUBLE_EQ(params[0].at(2), 2.475);
}

TEST(AdamWTest, SingleStepClosedForm) {
  std::vector<Tensor> params{Tensor::scalar(1.0)};
  OptimizerState s = OptimizerState::for_params(params, {0.1, 0.9, 0.999, 1e-8, 0.0});
  const std::vector<double> g{1.0};
  const std::vector<std::span<const double>> grads{g};
  adamw_step(params, grads, s);
  EXPECT_NEAR(params[0].item(), 1.0 - 0.1 / (1.0 + 1e-8), 1e-12);
  EXPECT_NEAR(params[0].item(), 0.9000000009999999, 1e-12);
}

TEST(AdamWTest, MatchesOracleOverManySteps) {
  Rng rng(11);
  std::vector<Tensor> params{testing_util::random_tensor(Shape{3, 4}, rng)};
  const AdamWOptions opt{0.05, 0.8, 0.99, 1e-6, 0.02};
  OptimizerState s = OptimizerState::for_params(params, opt);
  std::vector<double> ref(params[0].data().begin(), params[0].data().end());
  std::vector<oracle::Adam> states(ref.size());
  for (int step = 0; step < 25; ++step) {
    std::vector<double> g(ref.size());
    for (double& x : g) x = rng.normal();
    const std::vector<std::span<const double>> grads{g};
    adamw_step(params, grads, s);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      ref[i] = oracle::adamw(ref[i], g[i], states[i], opt.lr, opt.beta1, opt.beta2, opt.eps, opt.weight_decay);
    }
  }
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(params[0].at(i), ref[i], 1e-10);
}

TEST(AdamWTest, ShapeMismatchIsContractError) {
  std::vector<Tensor> params{Tensor::vector({1.0, 2.0})};
  OptimizerState s = OptimizerState::for_params(params, {});
  const std::vector<double> g{1.0, 2.0, 3.0};
  const std::vector<std::span<const double>> grads{g};
  EXPECT_EQ(code_of([&] { adamw_step(params, grads, s); }), ErrorCode::kContract);
  std::vector<Tensor> other{Tensor::vector({1.0, 2.0, 3.0})};
  EXPECT_EQ(code_of([&] { adamw_step(other, s); }), ErrorCode::kContract);
}

// ---- total loss -----------------------------------------------------------

TEST(TotalLossTest, Examples) {
  EXPECT_DOUBLE_EQ(total_loss(0.5, 0.25, 1.0, 1.0), 0.75);
  EXPECT_EQ(total_loss(0.37, 9.0, 1.0, 0.0), 0.37);
  EXPECT_NEAR(total_loss(0.1, 0.2, 2.0, 3.0), 0.8, 1e-15);
  const Tensor t = total_loss(Tensor::scalar(0.5), Tensor::scalar(0.25), 1.0, 1.0);
  EXPECT_DOUBLE_EQ(t.item(), 0.75);
}

// ---- training -------------------------------------------------------------

TEST(TrainerTest, DeterministicSteps) {
  const TrainConfig c = tiny_config();
  const data::Dataset d = data_for(c, 2, 2, 5);
  Trainer a(c, d);
  Trainer b(c, d);
  for (int i = 0; i < 10; ++i) ASSERT_TRUE(same_losses(a.step(), b.step())) << "step " << i;
  EXPECT_TRUE(same_weights(a.model(), b.model()));
  EXPECT_TRUE(a.rng() == b.rng());
}

TEST(TrainerTest, NullRatioZeroNeverDropsCondition) {
  TrainConfig c = tiny_config();
  c.null_ratio = 0.0;
  c.mode = TrainMode::kRouterOnly;
  Trainer t(c, data_for(c, 2, 2, 6));
  for (int i = 0; i < 1000; ++i) ASSERT_FALSE(t.step().used_null) << "step " << i;
}

TEST(TrainerTest, NullRatioOneAlwaysDropsCondition) {
  TrainConfig c = tiny_config();
  c.null_ratio = 1.0;
  c.mode = TrainMode::kRouterOnly;
  Trainer t(c, data_for(c, 2, 2, 6));
  for (int i = 0; i < 50; ++i) {
    const StepLosses s = t.step();
    ASSERT_TRUE(s.used_null);
    EXPECT_EQ(s.l_route, 0.0);  // no subject to route to
  }
}

TEST(TrainerTest, TimestepsCoverRange) {
  TrainConfig c = tiny_config();
  c.mode = TrainMode::kRouterOnly;
  Trainer t(c, data_for(c, 2, 2, 6));
  std::vector<int> seen(c.diffusion_steps + 1, 0);
  for (int i = 0; i < 400; ++i) {
    const std::size_t ts = t.step().timestep;
    ASSERT_GE(ts, 1u);
    ASSERT_LE(ts, c.diffusion_steps);
    ++seen[ts];
  }
  for (std::size_t ts = 1; ts <= c.diffusion_steps; ++ts) EXPECT_GT(seen[ts], 0) << ts;
}

TEST(TrainerTest, ModesTouchOnlyTheirParameters) {
  const TrainConfig base = tiny_config();
  const data::Dataset d = data_for(base, 2, 2, 7);
  const nn::NamedTensors init = Model::init(base).named_parameters();
  const std::uint64_t tam0 = hash_params(init, "tam.");
  const std::uint64_t den0 = hash_params(init, "denoiser.");

  TrainConfig router = base;
  router.mode = TrainMode::kRouterOnly;
  Trainer r(router, d);
  for (int i = 0; i < 5; ++i) r.step();
  EXPECT_EQ(hash_params(r.model().named_parameters(), "tam."), tam0);
  EXPECT_NE(hash_params(r.model().named_parameters(), "denoiser."), den0);

  TrainConfig tam = base;
  tam.mode = TrainMode::kTamOnly;
  Trainer t(tam, d);
  for (int i = 0; i < 5; ++i) {
    const StepLosses s = t.step();
    EXPECT_EQ(s.l_diff, 0.0);
    EXPECT_EQ(s.l_route, 0.0);
    EXPECT_GT(s.l_consistency, 0.0);
  }
  EXPECT_EQ(hash_params(t.model().named_parameters(), "denoiser."), den0);
  EXPECT_NE(hash_params(t.model().named_parameters(), "tam."), tam0);

  Trainer j(base, d);
  for (int i = 0; i < 5; ++i) j.step();
  EXPECT_NE(hash_params(j.model().named_parameters(), "tam."), tam0);
  EXPECT_NE(hash_params(j.model().named_parameters(), "denoiser."), den0);
}

TEST(TrainerTest, RejectsMismatchedDataset) {
  const TrainConfig c = tiny_config();
  TrainConfig other = c;
  other.latent_dim = 12;
  EXPECT_EQ(code_of([&] { Trainer t(c, data_for(other, 2, 1, 1)); }), ErrorCode::kContract);
  data::Dataset empty = data_for(c, 2, 1, 1);
  empty.samples.clear();
  EXPECT_NE(code_of([&] { Trainer t(c, empty); }), ErrorCode::kIo);
}

// Fixed seed, desk defaults (joint mode) on the default synthetic dataset.
// Initial and final losses are means over the first and last logging windows
// so a single draw of t does not decide the outcome.
TEST(TrainerTest, DeskRunHalvesTotalLossIn200Steps) {
  TrainConfig c = TrainConfig::desk();
  c.steps = 200;
  const data::Dataset d = data::generate_dataset({});
  Trainer t(c, d);
  const std::vector<StepLosses> history = train_loop(t, {});
  ASSERT_EQ(history.size(), 200u);
  auto window_mean = [&](std::size_t begin) {
    double sum = 0.0;
    for (std::size_t i = begin; i < begin + c.log_every; ++i) sum += history[i].l_total;
    return sum / static_cast<double>(c.log_every);
  };
  const double initial = window_mean(0);
  const double final_loss = window_mean(history.size() - c.log_every);
  EXPECT_LT(final_loss, 0.5 * initial) << "initial " << initial << " final " << final_loss;
}

// ---- checkpoints ----------------------------------------------------------

TEST(CheckpointTest, ResumeGivesBitIdenticalNextStep) {
  const TrainConfig c = tiny_config();
  const data::Dataset d = data_for(c, 2, 2, 8);
  Trainer a(c, d);
  for (int i = 0; i < 3; ++i) a.step();
  const auto dir = scratch_dir("resume");
  const std::string path = (dir / "c.lvck").string();
  save_checkpoint(a.state(), path);
  Trainer b(load_checkpoint(path), d);
  EXPECT_EQ(b.steps_done(), 3u);
  EXPECT_TRUE(same_weights(a.model(), b.model()));
  for (int i = 0; i < 3; ++i) ASSERT_TRUE(same_losses(a.step(), b.step())) << "step " << i;
  EXPECT_TRUE(same_weights(a.model(), b.model()));
}

TEST(CheckpointTest, EncodeDecodeEncodeIsStable) {
  const TrainConfig c = tiny_config();
  Trainer a(c, data_for(c, 2, 1, 9));
  a.step();
  const std::vector<std::uint8_t> bytes = encode_checkpoint(a.state());
  EXPECT_EQ(encode_checkpoint(decode_checkpoint(bytes)), bytes);
}

TEST(CheckpointTest, SizeMatchesLayout) {
  const TrainConfig c = tiny_config();
  Trainer a(c, data_for(c, 2, 1, 9));
  a.step();
  const TrainingState s = a.state();
  std::size_t expected = 4 + 1 + 1 + 2;
  expected += 4 + c.to_text().size();
  expected += 8;
  expected += 4 + s.rng_state.size();
  expected += 4;
  for (const auto& [name, t] : s.model.named_parameters()) expected += tensor_record_size(name, t.shape());
  expected += 8 + 4;
  for (const auto& [name, t] : s.model.named_parameters(c.mode)) {
    expected += tensor_record_size("m/" + name, t.shape()) + tensor_record_size("v/" + name, t.shape());
  }
  EXPECT_EQ(encode_checkpoint(s).size(), expected);
  EXPECT_EQ(tensor_record_size("ab", Shape{2, 3}), 4 + 2 + 4 + 2 * 8 + 8 + 6 * 8u);
}

TEST(CheckpointTest, Errors) {
  const TrainConfig c = tiny_config();
  Trainer a(c, data_for(c, 2, 1, 9));
  const std::vector<std::uint8_t> good = encode_checkpoint(a.state());

  std::vector<std::uint8_t> bad = good;
  bad[0] = 'X';
  EXPECT_EQ(code_of([&] { decode_checkpoint(bad); }), ErrorCode::kFormat);
  bad = good;
  bad[4] = 99;
  EXPECT_EQ(code_of([&] { decode_checkpoint(bad); }), ErrorCode::kFormat);

  bad.assign(good.begin(), good.end() - 5);
  EXPECT_EQ(code_of([&] { decode_checkpoint(bad); }), ErrorCode::kCorruption);
  bad = good;
  bad.push_back(0);
  EXPECT_EQ(code_of([&] { decode_checkpoint(bad); }), ErrorCode::kCorruption);

  // Config claims one more block than the stored tensors provide.
  TrainingState s = a.state();
  s.model.config.blocks = 2;
  EXPECT_EQ(code_of([&] { decode_checkpoint(encode_checkpoint(s)); }), ErrorCode::kSchema);

  EXPECT_EQ(code_of([] { load_checkpoint("/nonexistent/idroute.lvck"); }), ErrorCode::kIo);
}

TEST(CheckpointTest, ResumeWithOtherModeRestartsOptimizer) {
  const TrainConfig c = tiny_config();
  const data::Dataset d = data_for(c, 2, 2, 10);
  Trainer a(c, d);
  for (int i = 0; i < 4; ++i) a.step();
  Trainer b(a.state(), d, TrainMode::kTamOnly);
  EXPECT_EQ(b.config().mode, TrainMode::kTamOnly);
  EXPECT_EQ(b.steps_done(), 0u);
  EXPECT_EQ(b.optimizer().step, 0u);
  EXPECT_EQ(b.optimizer().first_moment.size(), a.model().parameters(TrainMode::kTamOnly).size());
  EXPECT_TRUE(same_weights(a.model(), b.model()));
  const std::uint64_t den = hash_params(b.model().named_parameters(), "denoiser.");
  b.step();
  EXPECT_EQ(hash_params(b.model().named_parameters(), "denoiser."), den);
}

// ---- metrics file ---------------------------------------------------------

TEST(TrainLoopTest, WritesMetricsAndCheckpoint) {
  TrainConfig c = tiny_config();
  c.steps = 12;
  c.log_every = 4;
  Trainer t(c, data_for(c, 2, 2, 12));
  const auto dir = scratch_dir("loop");
  std::size_t callbacks = 0;
  const std::vector<StepLosses> history = train_loop(t, {dir.string(), [&](std::uint64_t, const StepLosses&) {
                                                           ++callbacks;
                                                         }});
  EXPECT_EQ(history.size(), 12u);
  EXPECT_EQ(callbacks, 12u);
  std::ifstream in(dir / "metrics.csv");
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(line, kMetricsHeader);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    ASSERT_EQ(fields.size(), 5u) << line;
    EXPECT_EQ(std::stoul(fields[0]), 4 * (rows + 1));
    double mean = 0.0;
    for (std::size_t i = 4 * rows; i < 4 * rows + 4; ++i) mean += history[i].l_total / 4.0;
    EXPECT_NEAR(std::stod(fields[3]), mean, 1e-8);
    ++rows;
  }
  EXPECT_EQ(rows, 3u);
  const TrainingState s = load_checkpoint((dir / "checkpoint.lvck").string());
  EXPECT_EQ(s.steps_done, 12u);
  EXPECT_TRUE(same_weights(s.model, t.model()));
}

// ---- evaluation -----------------------------------------------------------

TEST(EvaluateTest, UntrainedRouterIsNearChance) {
  const TrainConfig c = TrainConfig::desk();
  data::GenerateOptions g;
  g.subjects = 16;
  g.videos_per_subject = 2;
  g.seed = 77;
  const MetricsReport r = evaluate(Model::init(c), data::generate_dataset(g));
  const double n = static_cast<double>(r.foreground_tokens);
  const double p = 1.0 / static_cast<double>(c.components);
  const double sigma = std::sqrt(p * (1 - p) / n);
  ASSERT_GT(r.foreground_tokens, 1000u);
  // Tokens share a video, so allow a wide band around chance.
  EXPECT_NEAR(r.routing_accuracy, p, std::max(6 * sigma, 0.08));
  EXPECT_NEAR(r.mean_route_loss, std::log(4.0), 0.05);
}

TEST(EvaluateTest, ZeroBetaKeepsDeviation) {
  TrainConfig c = tiny_config();
  c.beta = 0.0;
  Model m = Model::init(c);
  Rng rng(3);
  for (auto& [name, t] : m.named_parameters(TrainMode::kTamOnly)) testing_util::randomize(t, rng, 0.3);
  const MetricsReport r = evaluate(m, data_for(c, 2, 2, 13));
  EXPECT_EQ(r.temporal_deviation_after, r.temporal_deviation_before);
  EXPECT_GT(r.temporal_deviation_before, 0.0);
}

TEST(EvaluateTest, StatisticsMatchDirectRecomputation) {
  const TrainConfig c = tiny_config();
  Model m = Model::init(c);
  Rng rng(4);
  for (auto& [name, t] : m.named_parameters(TrainMode::kTamOnly)) testing_util::randomize(t, rng, 0.3);
  const data::Dataset d = data_for(c, 2, 3, 14);
  const MetricsReport r = evaluate(m, d);
  double before = 0.0;
  double after = 0.0;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const LatentVideo corrupted = data::corrupt_temporal(d.samples[i], c.jitter, mix_seed(c.eval_seed, 2 * i + 1));
    before += direct_deviation(corrupted.tokens, c.frames, c.tokens_per_frame);
    const oracle::Mat refined = oracle::temporal_refine(testing_util::to_mat(corrupted.tokens), c.frames,
                                                        c.tokens_per_frame, c.chunks, testing_util::to_oracle(m.tam));
    after += direct_deviation(testing_util::from_mat(refined), c.frames, c.tokens_per_frame);
  }
  const double n = static_cast<double>(d.samples.size());
  EXPECT_EQ(r.samples, d.samples.size());
  EXPECT_NEAR(r.temporal_deviation_before, before / n, 1e-12);
  EXPECT_NEAR(r.temporal_deviation_after, after / n, 1e-12);
  EXPECT_NE(r.temporal_deviation_after, r.temporal_deviation_before);
}

TEST(EvaluateTest, Errors) {
  const TrainConfig c = tiny_config();
  data::Dataset d = data_for(c, 2, 1, 15);
  d.samples.clear();
  EXPECT_EQ(code_of([&] { evaluate(Model::init(c), d); }), ErrorCode::kEvaluation);
  TrainConfig other = c;
  other.latent_dim = 12;
  EXPECT_EQ(code_of([&] { evaluate(Model::init(c), data_for(other, 2, 1, 15)); }), ErrorCode::kContract);
}

TEST(EvaluateTest, CsvHasHeaderAndOneRow) {
  const std::string csv = metrics_csv(MetricsReport{});
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}
