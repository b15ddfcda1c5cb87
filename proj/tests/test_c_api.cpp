// Copyright 2026 The idroute Authors
// SPDX-License-Identifier: Apache-2.0

// Links only the shared library and its public header.

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "idroute/idroute.h"

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("idroute_capi_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<char> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const std::pair<const char*, const char*> kTinyKeys[] = {
    {"frames", "4"},      {"chunks", "2"},     {"tokens_per_frame", "4"}, {"latent_dim", "8"},
    {"local_tokens", "2"}, {"local_dim", "4"},  {"inner_dim", "4"},        {"heads", "1"},
    {"blocks", "1"},      {"tam_layers", "1"}, {"components", "2"},       {"diffusion_steps", "10"},
    {"sample_steps", "5"}, {"steps", "6"},     {"log_every", "3"}};

idr_gen_options tiny_gen(uint64_t seed) {
  idr_gen_options g;
  idr_gen_options_default(&g);
  g.subjects = 2;
  g.videos_per_subject = 2;
  g.frames = 4;
  g.tokens_per_frame = 4;
  g.components = 2;
  g.channels = 8;
  g.seed = seed;
  return g;
}

idr_config* tiny_config() {
  idr_config* c = nullptr;
  EXPECT_EQ(idr_config_create("desk", &c), IDR_OK);
  for (const auto& [k, v] : kTinyKeys) EXPECT_EQ(idr_config_set(c, k, v), IDR_OK) << k;
  return c;
}

}  // namespace

TEST(CApiTest, VersionAndStatusStrings) {
  EXPECT_STRNE(idr_version(), "");
  EXPECT_STREQ(idr_status_string(IDR_OK), "ok");
  EXPECT_STRNE(idr_status_string(IDR_ERR_CONFIG), idr_status_string(IDR_ERR_IO));
}

TEST(CApiTest, NullArgumentsAreRejected) {
  idr_config* c = nullptr;
  EXPECT_EQ(idr_config_create("desk", nullptr), IDR_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(idr_config_set(nullptr, "lr", "1"), IDR_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(idr_trainer_step(nullptr, nullptr), IDR_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(idr_generate_dataset(nullptr, "x"), IDR_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(c, nullptr);
  idr_config_free(nullptr);
  idr_trainer_free(nullptr);
  idr_model_free(nullptr);
}

TEST(CApiTest, ConfigErrorsReportCodeAndMessage) {
  idr_config* c = nullptr;
  EXPECT_EQ(idr_config_create("laptop", &c), IDR_ERR_CONFIG);
  EXPECT_EQ(c, nullptr);
  EXPECT_NE(std::strlen(idr_last_error()), 0u);
  ASSERT_EQ(idr_config_create("desk", &c), IDR_OK);
  EXPECT_EQ(idr_config_set(c, "no_such_key", "1"), IDR_ERR_CONFIG);
  EXPECT_NE(std::string(idr_last_error()).find("no_such_key"), std::string::npos);
  EXPECT_EQ(idr_config_load("/nonexistent/idroute.cfg", &c), IDR_ERR_IO);
  idr_config_free(c);
}

TEST(CApiTest, ConfigTextQueriesLength) {
  idr_config* c = tiny_config();
  size_t needed = 0;
  ASSERT_EQ(idr_config_to_text(c, nullptr, 0, &needed), IDR_OK);
  ASSERT_GT(needed, 1u);
  std::string text(needed, '\0');
  ASSERT_EQ(idr_config_to_text(c, text.data(), text.size(), &needed), IDR_OK);
  EXPECT_EQ(text.size(), needed);
  EXPECT_NE(text.find("latent_dim = 8"), std::string::npos);
  EXPECT_EQ(text.rfind("profile = desk", 0), 0u);
  idr_config_free(c);
}

TEST(CApiTest, TrainResumeSampleEvaluate) {
  const fs::path dir = fresh_dir("pipeline");
  const idr_gen_options g = tiny_gen(3);
  const std::string data = (dir / "d.lvid").string();
  ASSERT_EQ(idr_generate_dataset(&g, data.c_str()), IDR_OK) << idr_last_error();

  idr_config* c = tiny_config();
  idr_trainer* t = nullptr;
  ASSERT_EQ(idr_trainer_create(c, data.c_str(), &t), IDR_OK) << idr_last_error();
  idr_step_losses first{};
  ASSERT_EQ(idr_trainer_step(t, &first), IDR_OK);
  EXPECT_GE(first.timestep, 1u);
  EXPECT_EQ(idr_trainer_steps_done(t), 1u);

  std::uint64_t progress_calls = 0;
  auto progress = [](uint64_t, const idr_step_losses*, void* user) { ++*static_cast<std::uint64_t*>(user); };
  ASSERT_EQ(idr_trainer_train(t, (dir / "run").string().c_str(), progress, &progress_calls), IDR_OK)
      << idr_last_error();
  EXPECT_EQ(progress_calls, 5u);
  EXPECT_EQ(idr_trainer_steps_done(t), 6u);
  const std::string ckpt = (dir / "run" / "checkpoint.lvck").string();
  ASSERT_TRUE(fs::exists(ckpt));

  // Resume and compare the next step with the live trainer.
  idr_trainer* r = nullptr;
  ASSERT_EQ(idr_trainer_resume(ckpt.c_str(), data.c_str(), nullptr, 0, &r), IDR_OK) << idr_last_error();
  EXPECT_EQ(idr_trainer_steps_done(r), 6u);
  idr_step_losses a{}, b{};
  ASSERT_EQ(idr_trainer_step(t, &a), IDR_OK);
  ASSERT_EQ(idr_trainer_step(r, &b), IDR_OK);
  EXPECT_EQ(std::memcmp(&a.l_total, &b.l_total, sizeof(double)), 0);
  EXPECT_EQ(a.timestep, b.timestep);
  idr_trainer* m = nullptr;
  EXPECT_EQ(idr_trainer_resume(ckpt.c_str(), data.c_str(), "both", 0, &m), IDR_ERR_CONFIG);
  idr_trainer_free(r);
  idr_trainer_free(t);
  idr_config_free(c);

  idr_model* model = nullptr;
  ASSERT_EQ(idr_model_load(ckpt.c_str(), &model), IDR_OK) << idr_last_error();
  idr_sample_options s;
  idr_sample_options_default(&s);
  s.seed = 9;
  const fs::path s1 = dir / "s1.lvid", s2 = dir / "s2.lvid";
  ASSERT_EQ(idr_model_sample(model, &s, s1.string().c_str()), IDR_OK) << idr_last_error();
  ASSERT_EQ(idr_model_sample(model, &s, s2.string().c_str()), IDR_OK);
  EXPECT_EQ(read_all(s1), read_all(s2));
  s.cfg_scale = -1.0;
  EXPECT_EQ(idr_model_sample(model, &s, s2.string().c_str()), IDR_ERR_PARAMETER);

  const idr_gen_options held = tiny_gen(1000);
  const std::string held_path = (dir / "held.lvid").string();
  ASSERT_EQ(idr_generate_dataset(&held, held_path.c_str()), IDR_OK);
  idr_metrics metrics{};
  const std::string report = (dir / "report.csv").string();
  ASSERT_EQ(idr_model_evaluate(model, held_path.c_str(), report.c_str(), &metrics), IDR_OK) << idr_last_error();
  EXPECT_EQ(metrics.samples, 4u);
  EXPECT_GE(metrics.routing_accuracy, 0.0);
  EXPECT_LE(metrics.routing_accuracy, 1.0);
  EXPECT_TRUE(fs::exists(report));
  EXPECT_EQ(idr_model_evaluate(model, (dir / "missing.lvid").string().c_str(), nullptr, &metrics), IDR_ERR_IO);
  idr_model_free(model);
}

TEST(CApiTest, DatasetMismatchIsContractError) {
  const fs::path dir = fresh_dir("mismatch");
  idr_gen_options g = tiny_gen(4);
  g.channels = 12;
  const std::string data = (dir / "d.lvid").string();
  ASSERT_EQ(idr_generate_dataset(&g, data.c_str()), IDR_OK);
  idr_config* c = tiny_config();
  idr_trainer* t = nullptr;
  EXPECT_EQ(idr_trainer_create(c, data.c_str(), &t), IDR_ERR_CONTRACT);
  EXPECT_EQ(t, nullptr);
  idr_config_free(c);
}

TEST(CApiTest, GradcheckKernelModule) {
  int passed = 0;
  std::size_t entries = 0;
  auto report = [](const idr_gradcheck_entry* e, void* user) {
    ++*static_cast<std::size_t*>(user);
    EXPECT_STREQ(e->module, "kernel");
    EXPECT_GT(e->coordinates, 0u);
  };
  ASSERT_EQ(idr_gradcheck("kernel", 1e-5, report, &entries, &passed), IDR_OK) << idr_last_error();
  EXPECT_EQ(passed, 1);
  EXPECT_GT(entries, 0u);
  EXPECT_EQ(idr_gradcheck("everything", 1e-5, nullptr, nullptr, &passed), IDR_ERR_PARAMETER);
}
