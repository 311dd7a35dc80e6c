#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "locjepa/common/error.hpp"
#include "locjepa/config/run_config.hpp"

using namespace locjepa;
using config::Profile;
using config::RunConfig;
using nlohmann::json;

TEST(Config, DeskDefaultsValidate) {
  const auto c = RunConfig::defaults(Profile::desk);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.loss.lambda, 0.25);
  EXPECT_EQ(c.loss.n_pairs, 100u);
  EXPECT_EQ(c.model.probe.num_classes, 3u);  // foreground only
  const auto g = c.grid();
  EXPECT_EQ(g.frames(), c.tokenizer.clip_frames);
  EXPECT_EQ(c.pretrain_steps(), 200u);
}

TEST(Config, FullScaleProfilePins) {
  const auto c = RunConfig::defaults(Profile::paper);
  EXPECT_EQ(c.schedule.batch_size, 4u);
  EXPECT_EQ(c.tokenizer.clip_frames, 16u);
  EXPECT_EQ(c.tokenizer.frame_step, 4u);
  EXPECT_EQ(c.tokenizer.tubelet_frames, 2u);
  EXPECT_EQ(c.tokenizer.patch, 16u);
  EXPECT_EQ(c.data.phantom.height, 224u);
  EXPECT_EQ(c.data.phantom.width, 224u);
  EXPECT_EQ(c.model.encoder.depth, 24u);
  EXPECT_EQ(c.model.encoder.embed_dim, 1024u);
  EXPECT_EQ(c.model.encoder.heads, 16u);
  EXPECT_EQ(c.loss.lambda, 0.25);
  EXPECT_EQ(c.schedule.base_lr, 2e-4);
  EXPECT_EQ(c.schedule.final_lr, 1e-6);
  EXPECT_EQ(c.schedule.pretrain_epochs, 300);
  EXPECT_EQ(c.schedule.warmup_epochs, 20);
  EXPECT_EQ(c.schedule.probe_base_lr, 1e-3);
  EXPECT_EQ(c.schedule.probe_final_lr, 0.0);
  const auto g = c.grid();
  EXPECT_EQ(g.t, 8u);
  EXPECT_EQ(g.i, 14u);
  EXPECT_EQ(g.j, 14u);
  EXPECT_EQ(g.count(), 1568u);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, JsonRoundTrip) {
  auto c = RunConfig::defaults(Profile::desk);
  c.loss.lambda = 0.5;
  c.model.encoder.frozen_blocks = 1;
  c.loss.mask = tok::MaskStrategy::random;
  c.runtime.seed = 99;
  const auto j = c.to_json();
  const auto back = RunConfig::from_json(j);
  EXPECT_EQ(back.to_json(), j);
  EXPECT_EQ(back.loss.lambda, 0.5);
  EXPECT_EQ(back.loss.mask, tok::MaskStrategy::random);
  EXPECT_EQ(back.runtime.seed, 99u);
}

TEST(Config, OverlayKeepsProfileDefaults) {
  const auto c = RunConfig::from_json(json{{"profile", "paper"}, {"loss", {{"lambda", 0.9}}}});
  EXPECT_EQ(c.profile, Profile::paper);
  EXPECT_EQ(c.loss.lambda, 0.9);
  EXPECT_EQ(c.model.encoder.embed_dim, 1024u);
  // explicit profile overrides the file
  const auto d = RunConfig::from_json(json{{"profile", "paper"}}, Profile::desk);
  EXPECT_EQ(d.profile, Profile::desk);
}

TEST(Config, RejectsUnknownAndIllTyped) {
  EXPECT_THROW(RunConfig::from_json(json{{"bogus", json::object()}}), UsageError);
  EXPECT_THROW(RunConfig::from_json(json{{"loss", {{"lamda", 0.5}}}}), UsageError);
  EXPECT_THROW(RunConfig::from_json(json{{"loss", {{"lambda", "high"}}}}), UsageError);
  EXPECT_THROW(RunConfig::from_json(json{{"schedule", {{"batch_size", -1}}}}), UsageError);
  EXPECT_THROW(RunConfig::from_json(json{{"profile", "huge"}}), UsageError);
  EXPECT_THROW(RunConfig::from_json(json::array()), UsageError);
  try {
    RunConfig::from_json(json{{"model", {{"dpeth", 2}}}});
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("model.dpeth"), std::string::npos);
  }
}

TEST(Config, ValidateCatchesBadValues) {
  auto c = RunConfig::defaults(Profile::desk);
  c.data.fraction = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = RunConfig::defaults(Profile::desk);
  c.data.val_ratio = 0.6;
  c.data.test_ratio = 0.4;
  EXPECT_THROW(c.validate(), UsageError);
  c = RunConfig::defaults(Profile::desk);
  c.data.phantom.height = 30;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Config, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "locjepa_cfg_test.json";
  std::ofstream(path) << R"({"profile": "desk", "runtime": {"seed": 3}})";
  EXPECT_EQ(config::load_run_config(path).runtime.seed, 3u);
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(config::load_run_config(path), UsageError);
  std::filesystem::remove(path);
  EXPECT_THROW(config::load_run_config(path), UsageError);
}
