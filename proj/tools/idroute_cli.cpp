// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end; talks to the library only through the C API.

#include <cinttypes>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "idroute/idroute.h"

namespace {

int report(idr_status status) {
  if (status == IDR_OK) return 0;
  std::fprintf(stderr, "error (%s): %s\n", idr_status_string(status), idr_last_error());
  return static_cast<int>(status) < 100 ? 2 : 3;
}

struct ConfigHandle {
  idr_config* ptr = nullptr;
  ~ConfigHandle() { idr_config_free(ptr); }
};
struct TrainerHandle {
  idr_trainer* ptr = nullptr;
  ~TrainerHandle() { idr_trainer_free(ptr); }
};
struct ModelHandle {
  idr_model* ptr = nullptr;
  ~ModelHandle() { idr_model_free(ptr); }
};

std::string config_value(const idr_config* config, const std::string& key) {
  size_t needed = 0;
  if (idr_config_to_text(config, nullptr, 0, &needed) != IDR_OK) return {};
  std::string text(needed, '\0');
  idr_config_to_text(config, text.data(), text.size(), &needed);
  const std::string prefix = key + " = ";
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
    pos = end + 1;
  }
  return {};
}

void print_progress(uint64_t step, const idr_step_losses* s, void* user) {
  const uint64_t every = *static_cast<const uint64_t*>(user);
  if (every == 0 || step % every != 0) return;
  std::printf("step %" PRIu64 "  l_diff %.6f  l_route %.6f  l_cons %.6f  l_total %.6f\n", step, s->l_diff,
              s->l_route, s->l_consistency, s->l_total);
  std::fflush(stdout);
}

void print_gradcheck(const idr_gradcheck_entry* e, void*) {
  std::printf("%-4s %-9s %-18s max_rel_err %.3e  coords %" PRIu64 "\n", e->passed ? "ok" : "FAIL", e->module,
              e->check, e->max_error, e->coordinates);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"idroute: identity-routed latent video diffusion at desk scale"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(idr_version()));

  // gen-data
  idr_gen_options gen;
  idr_gen_options_default(&gen);
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset file");
  gen_cmd->add_option("--out", gen_out, "Output dataset path")->required();
  gen_cmd->add_option("--subjects", gen.subjects, "Number of subjects")->capture_default_str();
  gen_cmd->add_option("--videos-per-subject", gen.videos_per_subject, "Videos per subject")->capture_default_str();
  gen_cmd->add_option("--frames", gen.frames, "Frames per video (F)")->capture_default_str();
  gen_cmd->add_option("--tokens-per-frame", gen.tokens_per_frame, "Tokens per frame (S)")->capture_default_str();
  gen_cmd->add_option("--noise", gen.noise, "Per-channel token noise level")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Dataset seed")->capture_default_str();
  gen_cmd->add_option("--components", gen.components, "Facial components (M)")->capture_default_str();
  gen_cmd->add_option("--channels", gen.channels, "Latent channels (D')")->capture_default_str();

  // train
  std::string train_config, train_data, train_out, train_mode, train_resume;
  uint64_t log_every = 100;
  auto* train_cmd = app.add_subcommand("train", "Train or resume a model");
  train_cmd->add_option("--config", train_config, "Config file (key = value)")->required();
  train_cmd->add_option("--data", train_data, "Training dataset")->required();
  train_cmd->add_option("--out", train_out, "Output directory")->required();
  train_cmd->add_option("--mode", train_mode, "Overrides the config mode")
      ->check(CLI::IsMember({"joint", "tam-only", "router-only"}));
  train_cmd->add_option("--resume", train_resume, "Checkpoint to resume from");
  train_cmd->add_option("--print-every", log_every, "Progress line interval (0 = quiet)")->capture_default_str();

  // sample
  std::string sample_ckpt, sample_out;
  idr_sample_options sample;
  idr_sample_options_default(&sample);
  bool no_tam = false;
  auto* sample_cmd = app.add_subcommand("sample", "Sample a latent video");
  sample_cmd->add_option("--ckpt", sample_ckpt, "Checkpoint")->required();
  sample_cmd->add_option("--seed", sample.seed, "Noise seed")->capture_default_str();
  sample_cmd->add_option("--steps", sample.steps, "DDIM steps (0 = config)")->capture_default_str();
  sample_cmd->add_option("--cfg-scale", sample.cfg_scale, "Guidance scale")->capture_default_str();
  sample_cmd->add_option("--chunks", sample.chunks, "Temporal chunks K (0 = config)")->capture_default_str();
  sample_cmd->add_flag("--no-tam", no_tam, "Skip temporal refinement");
  sample_cmd->add_option("--subject", sample.subject_seed, "Subject seed to condition on")->capture_default_str();
  sample_cmd->add_option("--out", sample_out, "Output file (one-record dataset)")->required();

  // eval
  std::string eval_ckpt, eval_data, eval_report;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--ckpt", eval_ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--data", eval_data, "Held-out dataset")->required();
  eval_cmd->add_option("--report", eval_report, "CSV report path")->required();

  // gradcheck
  std::string grad_module = "all";
  double grad_eps = 1e-5;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  grad_cmd->add_option("--module", grad_module, "Module")
      ->check(CLI::IsMember({"all", "router", "tam", "denoiser", "kernel"}))
      ->capture_default_str();
  grad_cmd->add_option("--eps", grad_eps, "Central-difference step")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (*gen_cmd) {
    if (int rc = report(idr_generate_dataset(&gen, gen_out.c_str()))) return rc;
    std::printf("wrote %" PRIu64 " videos to %s\n", gen.subjects * gen.videos_per_subject, gen_out.c_str());
    return 0;
  }

  if (*train_cmd) {
    ConfigHandle config;
    if (int rc = report(idr_config_load(train_config.c_str(), &config.ptr))) return rc;
    if (!train_mode.empty()) {
      if (int rc = report(idr_config_set(config.ptr, "mode", train_mode.c_str()))) return rc;
    }
    TrainerHandle trainer;
    if (train_resume.empty()) {
      if (int rc = report(idr_trainer_create(config.ptr, train_data.c_str(), &trainer.ptr))) return rc;
    } else {
      const uint64_t steps = std::stoull(config_value(config.ptr, "steps"));
      const char* mode = train_mode.empty() ? nullptr : train_mode.c_str();
      if (int rc = report(idr_trainer_resume(train_resume.c_str(), train_data.c_str(), mode, steps, &trainer.ptr)))
        return rc;
    }
    if (int rc = report(idr_trainer_train(trainer.ptr, train_out.c_str(), print_progress, &log_every))) return rc;
    std::printf("trained to step %" PRIu64 "; outputs in %s\n", idr_trainer_steps_done(trainer.ptr),
                train_out.c_str());
    return 0;
  }

  if (*sample_cmd) {
    sample.apply_tam = no_tam ? 0 : 1;
    ModelHandle model;
    if (int rc = report(idr_model_load(sample_ckpt.c_str(), &model.ptr))) return rc;
    if (int rc = report(idr_model_sample(model.ptr, &sample, sample_out.c_str()))) return rc;
    std::printf("wrote sample to %s\n", sample_out.c_str());
    return 0;
  }

  if (*eval_cmd) {
    ModelHandle model;
    if (int rc = report(idr_model_load(eval_ckpt.c_str(), &model.ptr))) return rc;
    idr_metrics m{};
    if (int rc = report(idr_model_evaluate(model.ptr, eval_data.c_str(), eval_report.c_str(), &m))) return rc;
    std::printf("routing_accuracy %.6f  route_loss %.6f  diff_loss %.6f  deviation %.6f -> %.6f  (%" PRIu64
                " samples)\n",
                m.routing_accuracy, m.mean_route_loss, m.mean_diff_loss, m.temporal_deviation_before,
                m.temporal_deviation_after, m.samples);
    return 0;
  }

  if (*grad_cmd) {
    int passed = 0;
    if (int rc = report(idr_gradcheck(grad_module.c_str(), grad_eps, print_gradcheck, nullptr, &passed))) return rc;
    std::printf("%s\n", passed ? "all gradient checks passed" : "gradient check FAILED");
    return passed ? 0 : 1;
  }
  return 0;
}
