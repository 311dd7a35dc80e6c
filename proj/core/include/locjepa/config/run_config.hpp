#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "locjepa/data/synthetic.hpp"
#include "locjepa/nets/config.hpp"
#include "locjepa/tokenizer/grid.hpp"
#include "locjepa/tokenizer/masking.hpp"
#include "locjepa/train/pretrain.hpp"
#include "locjepa/train/probe_train.hpp"

namespace locjepa::config {

enum class Profile { desk, paper };
Profile parse_profile(const std::string& name);
std::string to_string(Profile p);

struct DataSection {
  std::string root = "data";
  std::size_t videos = 60;
  data::PhantomParams phantom;
  double val_ratio = 0.2;
  double test_ratio = 0.2;
  int fraction = 100;
  std::uint64_t split_seed = 0;
};

struct TokenizerSection {
  std::size_t clip_frames = 8;
  std::size_t frame_step = 4;
  std::size_t tubelet_frames = 2;
  std::size_t patch = 4;  // square patch side in pixels
};

struct LossSection {
  double lambda = 0.25;
  std::size_t n_pairs = 100;
  bool allow_self_pairs = false;
  tok::MaskStrategy mask = tok::MaskStrategy::multiblock;
  double mask_ratio = 0.75;
};

struct ScheduleSection {
  std::size_t batch_size = 4;
  double pretrain_epochs = 20;
  std::size_t pretrain_steps_per_epoch = 10;
  double warmup_epochs = 1;
  double base_lr = 1e-3;
  double final_lr = 1e-6;
  double ema_start = 0.996;
  double ema_end = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.04;
  double grad_clip = 1.0;
  std::size_t probe_batch_size = 4;
  double probe_epochs = 30;
  std::size_t probe_steps_per_epoch = 10;
  double probe_base_lr = 3e-3;
  double probe_final_lr = 0.0;
};

struct RuntimeSection {
  std::uint64_t seed = 7;
};

/// Configuration tree {data, tokenizer, model, loss, schedule, runtime}.
struct RunConfig {
  Profile profile = Profile::desk;
  DataSection data;
  TokenizerSection tokenizer;
  nets::ModelConfig model;
  LossSection loss;
  ScheduleSection schedule;
  RuntimeSection runtime;

  static RunConfig defaults(Profile profile);
  /// Overlays `j` on the defaults of its "profile" key (or `profile` when
  /// given). Unknown keys and ill-typed values throw UsageError.
  static RunConfig from_json(const nlohmann::json& j, std::optional<Profile> profile = {});
  nlohmann::json to_json() const;
  void validate() const;

  tok::TokenGrid grid() const;
  std::size_t pretrain_steps() const;
  std::size_t probe_steps() const;
  train::PretrainSettings pretrain_settings() const;
  train::ProbeSettings probe_settings() const;
};

RunConfig load_run_config(const std::filesystem::path& path,
                          std::optional<Profile> profile = {});

}  // namespace locjepa::config
