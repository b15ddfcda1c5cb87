// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "train/gradcheck_suite.hpp"

#include <functional>

#include "core/error.hpp"
#include "core/grad_check.hpp"
#include "core/ops.hpp"
#include "core/random.hpp"
#include "data/synthetic.hpp"
#include "diffusion/denoiser.hpp"
#include "diffusion/schedule.hpp"
#include "nn/init.hpp"
#include "nn/transformer.hpp"
#include "router/local_router.hpp"
#include "temporal/temporal_ar.hpp"
#include "train/config.hpp"
#include "train/model.hpp"
#include "train/trainer.hpp"

namespace idr::train {

GradModule parse_grad_module(std::string_view text) {
  if (text == "all") return GradModule::kAll;
  if (text == "kernel") return GradModule::kKernel;
  if (text == "router") return GradModule::kRouter;
  if (text == "tam") return GradModule::kTam;
  if (text == "denoiser") return GradModule::kDenoiser;
  throw Error(ErrorCode::kParameter, "unknown gradcheck module '" + std::string(text) +
                                         "' (expected all, kernel, router, tam or denoiser)");
}

std::string_view grad_module_name(GradModule module) {
  switch (module) {
    case GradModule::kAll: return "all";
    case GradModule::kKernel: return "kernel";
    case GradModule::kRouter: return "router";
    case GradModule::kTam: return "tam";
    case GradModule::kDenoiser: return "denoiser";
  }
  return "?";
}

bool all_passed(const std::vector<GradCheckEntry>& entries) {
  for (const auto& e : entries)
    if (!e.passed) return false;
  return !entries.empty();
}

namespace {

constexpr double kParamStd = 0.1;

Tensor random_leaf(Shape shape, Rng& rng, double stddev = 1.0) { return nn::normal_param(std::move(shape), rng, stddev); }

// Overwrites every parameter with random values; layer-norm gains sit near 1.
void randomize(const nn::NamedTensors& named, Rng& rng) {
  for (const auto& [name, t] : named) {
    Tensor p = t;
    const bool gain = name.find("gain") != std::string::npos;
    for (double& x : p.mutable_data()) x = (gain ? 1.0 : 0.0) + rng.normal(0.0, kParamStd);
  }
}

std::vector<Tensor> tensors_of(const nn::NamedTensors& named) {
  std::vector<Tensor> out;
  for (const auto& [name, t] : named) out.push_back(t);
  return out;
}

// sum(x * w) with a fixed random w, so every output coordinate matters.
Tensor project(const Tensor& x, Rng& rng) {
  NoGradGuard guard;
  std::vector<double> w(x.numel());
  for (double& v : w) v = rng.normal();
  return Tensor(x.shape(), std::move(w));
}

class Suite {
 public:
  explicit Suite(const GradSuiteOptions& options) : options_(options) {}

  void check(const std::string& module, const std::string& name, const std::function<Tensor()>& f,
             std::vector<Tensor> params) {
    GradCheckOptions o;
    o.eps = options_.eps;
    o.max_coordinates_per_tensor = options_.max_coordinates_per_tensor;
    o.seed = mix_seed(options_.seed, entries_.size());
    const GradCheckResult r = grad_check(f, params, o);
    for (Tensor& p : params) p.zero_grad();
    entries_.push_back({module, name, r.max_error, r.coordinates, r.worst, r.max_error <= options_.tolerance});
  }

  std::vector<GradCheckEntry> take() { return std::move(entries_); }

 private:
  GradSuiteOptions options_;
  std::vector<GradCheckEntry> entries_;
};

void kernel_checks(Suite& suite, Rng& rng) {
  const std::string mod = "kernel";
  auto unary = [&](const std::string& name, Shape shape, const std::function<Tensor(const Tensor&)>& op) {
    Tensor x = random_leaf(shape, rng);
    const Tensor w = project(op(x), rng);
    suite.check(mod, name, [=] { return sum(mul(op(x), w)); }, {x});
  };
  auto binary = [&](const std::string& name, Shape sa, Shape sb,
                    const std::function<Tensor(const Tensor&, const Tensor&)>& op) {
    Tensor a = random_leaf(sa, rng);
    Tensor b = random_leaf(sb, rng);
    const Tensor w = project(op(a, b), rng);
    suite.check(mod, name, [=] { return sum(mul(op(a, b), w)); }, {a, b});
  };

  binary("matmul", {4, 5}, {5, 3}, [](const Tensor& a, const Tensor& b) { return matmul(a, b); });
  unary("transpose", {3, 4}, [](const Tensor& x) { return transpose(x); });
  binary("add", {3, 4}, {3, 4}, [](const Tensor& a, const Tensor& b) { return add(a, b); });
  binary("sub", {3, 4}, {3, 4}, [](const Tensor& a, const Tensor& b) { return sub(a, b); });
  binary("mul", {3, 4}, {3, 4}, [](const Tensor& a, const Tensor& b) { return mul(a, b); });
  unary("scale", {3, 4}, [](const Tensor& x) { return scale(x, -1.7); });
  binary("add_scaled", {3, 4}, {3, 4}, [](const Tensor& a, const Tensor& b) { return add_scaled(a, b, 0.3); });
  unary("gelu", {4, 6}, [](const Tensor& x) { return gelu(x); });
  binary("add_row", {3, 4}, {4}, [](const Tensor& a, const Tensor& b) { return add_row(a, b); });
  binary("mul_rows", {3, 4}, {3}, [](const Tensor& a, const Tensor& b) { return mul_rows(a, b); });
  unary("reshape", {3, 4}, [](const Tensor& x) { return reshape(x, {2, 6}); });
  unary("slice_rows", {5, 3}, [](const Tensor& x) { return slice_rows(x, 1, 3); });
  unary("slice_cols", {3, 5}, [](const Tensor& x) { return slice_cols(x, 2, 2); });
  binary("concat_rows", {2, 3}, {4, 3}, [](const Tensor& a, const Tensor& b) { return concat_rows({a, b}); });
  binary("concat_cols", {3, 2}, {3, 4}, [](const Tensor& a, const Tensor& b) { return concat_cols({a, b}); });
  unary("row", {4, 3}, [](const Tensor& x) { return row(x, 2); });
  unary("mean", {3, 4}, [](const Tensor& x) { return mean(x); });
  binary("mse", {3, 4}, {3, 4}, [](const Tensor& a, const Tensor& b) { return mse(a, b); });
  unary("softmax_axis0", {4, 5}, [](const Tensor& x) { return softmax(x, 0); });
  unary("softmax_axis1", {4, 5}, [](const Tensor& x) { return softmax(x, 1); });

  {
    Tensor x = random_leaf({5, 8}, rng);
    Tensor gain = random_leaf({8}, rng);
    Tensor bias = random_leaf({8}, rng);
    const Tensor w = project(layer_norm(x, gain, bias), rng);
    suite.check(mod, "layer_norm", [=] { return sum(mul(layer_norm(x, gain, bias), w)); }, {x, gain, bias});
  }
  {
    const std::vector<int> pos{0, 1, 1, 2, 5};
    unary("rope_apply", {5, 8}, [pos](const Tensor& x) { return rope_apply(x, pos); });
  }
  const std::vector<std::pair<std::string, AttentionMask>> masks{
      {"attention_full", AttentionMask::none()},
      {"attention_causal", AttentionMask::causal({0, 0, 1, 1, 2, 2})},
  };
  for (const auto& [name, mask] : masks) {
    Tensor q = random_leaf({6, 4}, rng);
    Tensor k = random_leaf({6, 4}, rng);
    Tensor v = random_leaf({6, 3}, rng);
    const Tensor w = project(scaled_dot_attention(q, k, v, mask), rng);
    suite.check(mod, name, [=] { return sum(mul(scaled_dot_attention(q, k, v, mask), w)); }, {q, k, v});
  }
  {
    nn::TransformerBlockParams block = nn::init_transformer_block(8, rng, kParamStd, false);
    nn::NamedTensors named;
    block.append_named("", named);
    randomize(named, rng);
    Tensor x = random_leaf({6, 8}, rng);
    const std::vector<int> frames{0, 0, 1, 1, 2, 2};
    const AttentionMask mask = AttentionMask::causal(frames);
    const Tensor w = project(nn::transformer_block(x, block, 2, mask, frames), rng);
    std::vector<Tensor> params = tensors_of(named);
    params.push_back(x);
    suite.check(mod, "transformer_block",
                [=] { return sum(mul(nn::transformer_block(x, block, 2, mask, frames), w)); }, params);
  }
  {
    const diffusion::NoiseSchedule schedule = diffusion::make_schedule(20, 1e-3, 0.35);
    Tensor z = random_leaf({4, 3}, rng);
    Tensor eps = random_leaf({4, 3}, rng);
    const Tensor w = project(diffusion::ddim_step(z, eps, 12, 6, schedule), rng);
    suite.check(mod, "ddim_step", [=] { return sum(mul(diffusion::ddim_step(z, eps, 12, 6, schedule), w)); },
                {z, eps});
  }
}

void router_checks(Suite& suite, Rng& rng, const TrainConfig& config) {
  const std::string mod = "router";
  const router::RouterDims dims = denoiser_dims(config).router;
  router::RouterParams params = router::init_router(dims, rng, kParamStd, false);
  router::EncoderParams encoder = router::init_encoder(config.latent_dim, dims.local_dim, rng, kParamStd);
  nn::NamedTensors named;
  params.append_named("router.", named);
  encoder.append_named("encoder.", named);
  randomize(named, rng);

  const data::SubjectIdentity subject = data::gen_subject(rng.next_u64(), dims.components, config.latent_dim);
  const std::vector<Tensor> features = data::component_features(subject, dims.local_tokens);
  const std::size_t tokens = config.frames * config.tokens_per_frame;
  Tensor latent = random_leaf({tokens, config.latent_dim}, rng);
  const std::vector<int> layout = data::subject_layout(subject, config.tokens_per_frame);
  std::vector<int> labels;
  for (std::size_t f = 0; f < config.frames; ++f) labels.insert(labels.end(), layout.begin(), layout.end());
  const router::ComponentMasks masks = router::ComponentMasks::from_labels(dims.components, labels);
  const Tensor target = project(latent, rng);
  const double alpha = config.alpha;

  auto local = [=] { return router::encode_local_components(features, encoder, dims.components); };
  std::vector<Tensor> all = tensors_of(named);
  all.push_back(latent);

  suite.check(mod, "routing_loss", [=] {
    const router::RouterOutput out = router::router_weights(router::router_logits(local(), latent, params));
    return router::routing_loss(out, masks);
  }, all);
  suite.check(mod, "spatial_enhance", [=] {
    const router::LocalTokenSet l = local();
    const router::RouterOutput out = router::router_weights(router::router_logits(l, latent, params));
    return mse(router::spatial_enhance(latent, l, out, alpha, params.phi), target);
  }, all);
}

void tam_checks(Suite& suite, Rng& rng, const TrainConfig& config) {
  const std::string mod = "tam";
  temporal::TamParams params = temporal::init_tam(tam_dims(config), rng, kParamStd, config.beta, false);
  nn::NamedTensors named;
  params.append_named("tam.", named);
  randomize(named, rng);
  Tensor tokens = random_leaf({config.frames * config.tokens_per_frame, config.latent_dim}, rng);
  const Tensor target = project(tokens, rng);
  const std::size_t frames = config.frames, per_frame = config.tokens_per_frame, chunks = config.chunks;
  std::vector<Tensor> all = tensors_of(named);
  all.push_back(tokens);
  suite.check(mod, "temporal_refine", [=] {
    const LatentVideo refined = temporal::temporal_refine(LatentVideo(tokens, frames, per_frame), params, chunks);
    return mse(refined.tokens, target);
  }, all);
}

void denoiser_checks(Suite& suite, Rng& rng, const TrainConfig& config) {
  const std::string mod = "denoiser";
  diffusion::DenoiserParams params = diffusion::init_denoiser(denoiser_dims(config), rng, kParamStd, config.alpha);
  nn::NamedTensors named;
  params.append_named("denoiser.", named);
  randomize(named, rng);

  data::VideoOptions video;
  video.frames = config.frames;
  video.tokens_per_frame = config.tokens_per_frame;
  const data::SubjectIdentity subject = data::gen_subject(rng.next_u64(), config.components, config.latent_dim);
  const data::SyntheticSample sample = data::gen_video_latents(subject, rng.next_u64(), video);
  const diffusion::NoiseSchedule schedule = diffusion::make_schedule(config.diffusion_steps, config.beta_start,
                                                                     config.beta_end);
  std::vector<double> noise(sample.latents.tokens.numel());
  for (double& x : noise) x = rng.normal();
  const Tensor eps(sample.latents.tokens.shape(), std::move(noise));
  const std::size_t t = config.diffusion_steps / 2;
  const LatentVideo z_t = diffusion::add_noise(sample.latents, eps, t, schedule);
  const diffusion::ConditionBundle cond = condition_for(subject, config.local_tokens);
  const double lambda_diff = config.lambda_diff, lambda_route = config.lambda_route;
  const std::vector<Tensor> all = tensors_of(named);

  suite.check(mod, "total_loss", [=] {
    const diffusion::DenoiserOutput out = diffusion::denoiser_forward(z_t, t, cond, params);
    return total_loss(diffusion::diffusion_loss(eps, out.eps_hat.tokens), router::routing_loss(out.router, sample.masks),
                      lambda_diff, lambda_route);
  }, all);
  suite.check(mod, "null_condition", [=] {
    const diffusion::DenoiserOutput out =
        diffusion::denoiser_forward(z_t, t, diffusion::ConditionBundle::null_condition(), params);
    return diffusion::diffusion_loss(eps, out.eps_hat.tokens);
  }, all);
}

}  // namespace

std::vector<GradCheckEntry> run_gradcheck(GradModule module, const GradSuiteOptions& options) {
  const TrainConfig config = TrainConfig::for_profile("desk");
  Suite suite(options);
  const bool all = module == GradModule::kAll;
  if (all || module == GradModule::kKernel) {
    Rng rng(mix_seed(options.seed, 10));
    kernel_checks(suite, rng);
  }
  if (all || module == GradModule::kRouter) {
    Rng rng(mix_seed(options.seed, 11));
    router_checks(suite, rng, config);
  }
  if (all || module == GradModule::kTam) {
    Rng rng(mix_seed(options.seed, 12));
    tam_checks(suite, rng, config);
  }
  if (all || module == GradModule::kDenoiser) {
    Rng rng(mix_seed(options.seed, 13));
    denoiser_checks(suite, rng, config);
  }
  return suite.take();
}

}  // namespace idr::train
