// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

#include "idroute/idroute.h"

#include <cstring>
#include <exception>
#include <fstream>
#include <new>
#include <string>

#include "core/error.hpp"
#include "data/dataset_io.hpp"
#include "data/synthetic.hpp"
#include "diffusion/sampler.hpp"
#include "train/checkpoint.hpp"
#include "train/config.hpp"
#include "train/evaluate.hpp"
#include "train/gradcheck_suite.hpp"
#include "train/model.hpp"
#include "train/trainer.hpp"

struct idr_config {
  idr::train::TrainConfig value;
};

struct idr_trainer {
  idr::train::Trainer trainer;
};

struct idr_model {
  idr::train::Model model;
};

namespace {

thread_local std::string g_last_error;

idr_status fail(idr_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename F>
idr_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return IDR_OK;
  } catch (const idr::Error& e) {
    return fail(static_cast<idr_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(IDR_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(IDR_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(IDR_ERR_INTERNAL, "unknown exception");
  }
}

idr_status null_argument(const char* what) { return fail(IDR_ERR_INVALID_ARGUMENT, std::string(what) + " is null"); }

idr_step_losses to_c(const idr::train::StepLosses& s) {
  return {s.l_diff, s.l_route, s.l_consistency, s.l_total, s.timestep, s.used_null ? 1 : 0};
}

}  // namespace

extern "C" {

const char* idr_version(void) { return "0.1.0"; }

const char* idr_status_string(idr_status status) {
  switch (status) {
    case IDR_OK: return "ok";
    case IDR_ERR_INVALID_ARGUMENT: return "invalid argument";
    case IDR_ERR_INTERNAL: return "internal error";
    default: break;
  }
  const int code = static_cast<int>(status);
  if (code >= 1 && code <= 25) return idr::error_code_name(static_cast<idr::ErrorCode>(code));
  return "unknown status";
}

const char* idr_last_error(void) { return g_last_error.c_str(); }

void idr_gen_options_default(idr_gen_options* options) {
  if (!options) return;
  const idr::data::GenerateOptions d;
  *options = {d.subjects, d.videos_per_subject, d.video.frames, d.video.tokens_per_frame,
              d.components, d.channels, d.video.noise_level, d.seed};
}

idr_status idr_generate_dataset(const idr_gen_options* options, const char* path) {
  if (!options) return null_argument("options");
  if (!path) return null_argument("path");
  return guarded([&] {
    idr::data::GenerateOptions g;
    g.subjects = options->subjects;
    g.videos_per_subject = options->videos_per_subject;
    g.components = options->components;
    g.channels = options->channels;
    g.seed = options->seed;
    g.video.frames = options->frames;
    g.video.tokens_per_frame = options->tokens_per_frame;
    g.video.noise_level = options->noise;
    idr::data::save_dataset(idr::data::generate_dataset(g), path);
  });
}

idr_status idr_config_create(const char* profile, idr_config** out) {
  if (!profile) return null_argument("profile");
  if (!out) return null_argument("out");
  return guarded([&] { *out = new idr_config{idr::train::TrainConfig::for_profile(profile)}; });
}

idr_status idr_config_load(const char* path, idr_config** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  return guarded([&] { *out = new idr_config{idr::train::TrainConfig::load(path)}; });
}

idr_status idr_config_set(idr_config* config, const char* key, const char* value) {
  if (!config) return null_argument("config");
  if (!key || !value) return null_argument("key or value");
  return guarded([&] { config->value.set(key, value); });
}

idr_status idr_config_to_text(const idr_config* config, char* buf, size_t capacity, size_t* needed) {
  if (!config) return null_argument("config");
  return guarded([&] {
    const std::string text = config->value.to_text();
    if (needed) *needed = text.size() + 1;
    if (buf && capacity > text.size()) std::memcpy(buf, text.c_str(), text.size() + 1);
  });
}

void idr_config_free(idr_config* config) { delete config; }

idr_status idr_trainer_create(const idr_config* config, const char* data_path, idr_trainer** out) {
  if (!config) return null_argument("config");
  if (!data_path) return null_argument("data_path");
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = new idr_trainer{idr::train::Trainer(config->value, idr::data::load_dataset(data_path))};
  });
}

idr_status idr_trainer_resume(const char* checkpoint_path, const char* data_path, const char* mode, uint64_t steps,
                              idr_trainer** out) {
  if (!checkpoint_path) return null_argument("checkpoint_path");
  if (!data_path) return null_argument("data_path");
  if (!out) return null_argument("out");
  return guarded([&] {
    idr::train::TrainingState state = idr::train::load_checkpoint(checkpoint_path);
    if (steps != 0) {
      state.model.config.steps = steps;
      state.model.config.validate();
    }
    std::optional<idr::train::TrainMode> m;
    if (mode) m = idr::train::parse_mode(mode);
    *out = new idr_trainer{idr::train::Trainer(std::move(state), idr::data::load_dataset(data_path), m)};
  });
}

idr_status idr_trainer_step(idr_trainer* trainer, idr_step_losses* out) {
  if (!trainer) return null_argument("trainer");
  return guarded([&] {
    const idr::train::StepLosses s = trainer->trainer.step();
    if (out) *out = to_c(s);
  });
}

idr_status idr_trainer_train(idr_trainer* trainer, const char* out_dir, idr_progress_fn progress, void* user) {
  if (!trainer) return null_argument("trainer");
  return guarded([&] {
    idr::train::LoopOptions loop;
    if (out_dir) loop.out_dir = out_dir;
    if (progress) {
      loop.progress = [progress, user](std::uint64_t step, const idr::train::StepLosses& s) {
        const idr_step_losses c = to_c(s);
        progress(step, &c, user);
      };
    }
    idr::train::train_loop(trainer->trainer, loop);
  });
}

idr_status idr_trainer_save(const idr_trainer* trainer, const char* path) {
  if (!trainer) return null_argument("trainer");
  if (!path) return null_argument("path");
  return guarded([&] { idr::train::save_checkpoint(trainer->trainer.state(), path); });
}

uint64_t idr_trainer_steps_done(const idr_trainer* trainer) { return trainer ? trainer->trainer.steps_done() : 0; }

void idr_trainer_free(idr_trainer* trainer) { delete trainer; }

void idr_sample_options_default(idr_sample_options* options) {
  if (!options) return;
  const idr::diffusion::SampleOptions d;
  *options = {d.seed, 0, d.cfg_scale, 0, d.apply_tam ? 1 : 0, 0};
}

idr_status idr_model_load(const char* checkpoint_path, idr_model** out) {
  if (!checkpoint_path) return null_argument("checkpoint_path");
  if (!out) return null_argument("out");
  return guarded([&] { *out = new idr_model{idr::train::load_checkpoint(checkpoint_path).model}; });
}

idr_status idr_model_sample(const idr_model* model, const idr_sample_options* options, const char* out_path) {
  if (!model) return null_argument("model");
  if (!options) return null_argument("options");
  if (!out_path) return null_argument("out_path");
  return guarded([&] {
    const idr::train::Model& m = model->model;
    const idr::train::TrainConfig& c = m.config;
    idr::diffusion::SampleOptions s;
    s.frames = c.frames;
    s.tokens_per_frame = c.tokens_per_frame;
    s.steps = options->steps ? options->steps : c.sample_steps;
    s.cfg_scale = options->cfg_scale;
    s.chunks = options->chunks ? options->chunks : c.chunks;
    s.seed = options->seed;
    s.apply_tam = options->apply_tam != 0;
    const idr::data::SubjectIdentity subject = idr::data::gen_subject(options->subject_seed, c.components, c.latent_dim);
    const idr::LatentVideo video =
        idr::diffusion::sample(idr::train::condition_for(subject, c.local_tokens), m.denoiser, m.tam, m.schedule(), s);

    const std::vector<int> layout = idr::data::subject_layout(subject, c.tokens_per_frame);
    std::vector<int> labels;
    for (std::size_t f = 0; f < c.frames; ++f) labels.insert(labels.end(), layout.begin(), layout.end());
    idr::data::Dataset out{c.frames, c.tokens_per_frame, c.latent_dim, c.components, {}};
    out.samples.push_back({video, idr::router::ComponentMasks::from_labels(c.components, labels), subject, s.seed});
    idr::data::save_dataset(out, out_path);
  });
}

idr_status idr_model_evaluate(const idr_model* model, const char* data_path, const char* report_path,
                              idr_metrics* out) {
  if (!model) return null_argument("model");
  if (!data_path) return null_argument("data_path");
  return guarded([&] {
    const idr::train::MetricsReport r = idr::train::evaluate(model->model, idr::data::load_dataset(data_path));
    if (report_path) {
      std::ofstream f(report_path, std::ios::binary | std::ios::trunc);
      f << idr::train::metrics_csv(r);
      if (!f) throw idr::Error(idr::ErrorCode::kIo, std::string("cannot write ") + report_path);
    }
    if (out) {
      *out = {r.routing_accuracy, r.mean_route_loss, r.mean_diff_loss, r.temporal_deviation_before,
              r.temporal_deviation_after, r.samples};
    }
  });
}

void idr_model_free(idr_model* model) { delete model; }

idr_status idr_gradcheck(const char* module, double eps, idr_gradcheck_fn report, void* user, int* all_passed) {
  if (!module) return null_argument("module");
  return guarded([&] {
    idr::train::GradSuiteOptions options;
    options.eps = eps;
    const auto entries = idr::train::run_gradcheck(idr::train::parse_grad_module(module), options);
    if (report) {
      for (const auto& e : entries) {
        const idr_gradcheck_entry c{e.module.c_str(), e.check.c_str(), e.max_error, e.coordinates, e.passed ? 1 : 0};
        report(&c, user);
      }
    }
    if (all_passed) *all_passed = idr::train::all_passed(entries) ? 1 : 0;
  });
}

}  // extern "C"
