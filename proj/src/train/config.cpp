// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "train/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "core/error.hpp"

namespace idr::train {

std::string_view mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::kJoint: return "joint";
    case TrainMode::kRouterOnly: return "router-only";
    case TrainMode::kTamOnly: return "tam-only";
  }
  return "joint";
}

TrainMode parse_mode(std::string_view text) {
  if (text == "joint") return TrainMode::kJoint;
  if (text == "router-only") return TrainMode::kRouterOnly;
  if (text == "tam-only") return TrainMode::kTamOnly;
  throw Error(ErrorCode::kConfig, "unknown mode '" + std::string(text) + "' (joint, router-only, tam-only)");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size() || !std::isfinite(out)) {
    throw Error(ErrorCode::kConfig, std::string(key) + ": '" + std::string(v) + "' is not a finite number");
  }
  return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw Error(ErrorCode::kConfig, std::string(key) + ": '" + std::string(v) + "' is not a non-negative integer");
  }
  return out;
}

struct Field {
  const char* key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, std::string_view)> set;
};

template <typename T>
Field real(const char* key, T TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return format_double(c.*member); },
          [key, member](TrainConfig& c, std::string_view v) { c.*member = parse_double(key, v); }};
}

template <typename T>
Field integer(const char* key, T TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return std::to_string(c.*member); },
          [key, member](TrainConfig& c, std::string_view v) { c.*member = static_cast<T>(parse_u64(key, v)); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"profile", [](const TrainConfig& c) { return c.profile; },
       [](TrainConfig& c, std::string_view v) { c = TrainConfig::for_profile(v); }},
      {"mode", [](const TrainConfig& c) { return std::string(mode_name(c.mode)); },
       [](TrainConfig& c, std::string_view v) { c.mode = parse_mode(v); }},
      real("lambda_diff", &TrainConfig::lambda_diff),
      real("lambda_route", &TrainConfig::lambda_route),
      real("consistency_weight", &TrainConfig::consistency_weight),
      real("null_ratio", &TrainConfig::null_ratio),
      real("lr", &TrainConfig::lr),
      real("adam_beta1", &TrainConfig::adam_beta1),
      real("adam_beta2", &TrainConfig::adam_beta2),
      real("adam_eps", &TrainConfig::adam_eps),
      real("weight_decay", &TrainConfig::weight_decay),
      integer("steps", &TrainConfig::steps),
      integer("grad_accum", &TrainConfig::grad_accum),
      integer("log_every", &TrainConfig::log_every),
      integer("checkpoint_every", &TrainConfig::checkpoint_every),
      real("alpha", &TrainConfig::alpha),
      real("beta", &TrainConfig::beta),
      integer("chunks", &TrainConfig::chunks),
      integer("diffusion_steps", &TrainConfig::diffusion_steps),
      real("beta_start", &TrainConfig::beta_start),
      real("beta_end", &TrainConfig::beta_end),
      integer("components", &TrainConfig::components),
      integer("local_tokens", &TrainConfig::local_tokens),
      integer("local_dim", &TrainConfig::local_dim),
      integer("latent_dim", &TrainConfig::latent_dim),
      integer("inner_dim", &TrainConfig::inner_dim),
      integer("tam_layers", &TrainConfig::tam_layers),
      integer("heads", &TrainConfig::heads),
      integer("blocks", &TrainConfig::blocks),
      integer("frames", &TrainConfig::frames),
      integer("tokens_per_frame", &TrainConfig::tokens_per_frame),
      real("init_std", &TrainConfig::init_std),
      real("tam_init_std", &TrainConfig::tam_init_std),
      real("cfg_scale", &TrainConfig::cfg_scale),
      integer("sample_steps", &TrainConfig::sample_steps),
      real("jitter", &TrainConfig::jitter),
      integer("eval_timestep", &TrainConfig::eval_timestep),
      integer("seed", &TrainConfig::seed),
      integer("eval_seed", &TrainConfig::eval_seed),
  };
  return table;
}

}  // namespace

TrainConfig TrainConfig::desk() { return TrainConfig{}; }

TrainConfig TrainConfig::paper() {
  TrainConfig c;
  c.profile = "paper";
  c.lambda_diff = 1.0;
  c.lambda_route = 1.0;
  c.null_ratio = 0.1;
  c.lr = 3e-6;
  c.steps = 10000;
  c.alpha = 1.0;
  c.beta = 0.2;
  c.chunks = 4;
  c.diffusion_steps = 50;
  c.beta_start = 1e-4;
  c.beta_end = 0.02;
  c.components = 6;
  c.local_tokens = 32;
  c.local_dim = 2048;
  c.latent_dim = 3072;
  c.inner_dim = 2048;
  c.tam_layers = 6;
  c.frames = 50;
  c.tokens_per_frame = 355;
  c.cfg_scale = 6.0;
  c.sample_steps = 50;
  return c;
}

TrainConfig TrainConfig::for_profile(std::string_view name) {
  if (name == "desk") return desk();
  if (name == "paper") return paper();
  throw Error(ErrorCode::kConfig, "unknown profile '" + std::string(name) + "' (desk, paper)");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kConfig, msg); };
  const std::pair<const char*, std::size_t> positive[] = {
      {"steps", steps}, {"grad_accum", grad_accum}, {"log_every", log_every}, {"chunks", chunks},
      {"diffusion_steps", diffusion_steps}, {"local_tokens", local_tokens}, {"local_dim", local_dim},
      {"latent_dim", latent_dim}, {"inner_dim", inner_dim}, {"heads", heads}, {"blocks", blocks},
      {"frames", frames}, {"tokens_per_frame", tokens_per_frame}, {"sample_steps", sample_steps}};
  for (const auto& [name, v] : positive) {
    if (v == 0) fail(std::string(name) + " must be positive");
  }
  if (components < 2) fail("components must be at least 2");
  if (tokens_per_frame < components) fail("tokens_per_frame must be at least components");
  if (latent_dim % heads != 0 || (latent_dim / heads) % 2 != 0) {
    fail("latent_dim must split into an even width per head");
  }
  if (local_dim < 2 || latent_dim < 2) fail("layer norm needs widths of at least 2");
  if (lambda_diff < 0 || lambda_route < 0 || consistency_weight < 0) fail("loss weights must be non-negative");
  if (null_ratio < 0 || null_ratio > 1) fail("null_ratio must lie in [0, 1]");
  if (!(lr > 0)) fail("lr must be positive");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1)) fail("adam betas must lie in [0, 1)");
  if (!(adam_eps > 0) || weight_decay < 0) fail("adam_eps must be positive and weight_decay non-negative");
  if (!(beta_start > 0 && beta_start <= beta_end && beta_end < 1)) fail("need 0 < beta_start <= beta_end < 1");
  if (cfg_scale < 0) fail("cfg_scale must be non-negative");
  if (sample_steps > diffusion_steps) fail("sample_steps cannot exceed diffusion_steps");
  if (eval_timestep < 1 || eval_timestep > diffusion_steps) fail("eval_timestep must lie in [1, diffusion_steps]");
  if (jitter < 0) fail("jitter must be non-negative");
  if (!(init_std > 0) || !(tam_init_std > 0)) fail("init_std and tam_init_std must be positive");
  if (frames % chunks != 0) {
    throw Error(ErrorCode::kChunking, std::to_string(frames) + " frames do not split into " + std::to_string(chunks) +
                                          " chunks");
  }
}

void TrainConfig::set(std::string_view key, std::string_view value) {
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(*this, value);
      return;
    }
  }
  throw Error(ErrorCode::kConfig, "unknown config key '" + std::string(key) + "'");
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  for (const Field& f : fields()) os << f.key << " = " << f.get(*this) << "\n";
  return os.str();
}

TrainConfig TrainConfig::parse(std::string_view text) {
  TrainConfig c;
  std::size_t line_no = 0;
  bool seen_other = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kConfig, "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key == "profile" && seen_other) {
      throw Error(ErrorCode::kConfig, "line " + std::to_string(line_no) + ": profile must come before other keys");
    }
    try {
      c.set(key, value);
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
    seen_other = seen_other || key != "profile";
  }
  return c;
}

TrainConfig TrainConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str());
}

}  // namespace idr::train
