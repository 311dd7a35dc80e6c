#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "locjepa/common/rng.hpp"
#include "locjepa/data/dataset.hpp"
#include "locjepa/losses/losses.hpp"
#include "locjepa/nets/model.hpp"
#include "locjepa/train/optim.hpp"
#include "locjepa/train/schedule.hpp"

namespace locjepa::train {

struct PretrainSettings {
  std::size_t batch_size = 4;
  std::size_t clip_frames = 8;
  std::size_t frame_step = 4;
  tok::MaskStrategy mask = tok::MaskStrategy::multiblock;
  double mask_ratio = 0.75;
  double lambda = 0.25;
  std::size_t n_pairs = 100;
  bool allow_self_pairs = false;
  Schedule schedule;
  MomentumSchedule ema;
  AdamWConfig adamw;
  double grad_clip = 1.0;

  void validate() const;
};

struct StepLog {
  std::size_t step = 0;  // 1-based
  losses::LossBreakdown loss;
  double lr = 0.0;
  double ema_m = 0.0;

  nlohmann::json to_json() const;
  bool operator==(const StepLog&) const;
};

/// Complete pretraining state: online/target networks, optimizer moments,
/// step counter and the data/mask RNG stream.
class Pretrainer {
 public:
  Pretrainer(const nets::ModelConfig& model, const tok::TokenGrid& grid, PretrainSettings settings,
             std::uint64_t seed);

  /// Samples a batch from `videos`, applies one optimizer step and one EMA
  /// update. Throws NumericError (with the step number) on a non-finite loss.
  StepLog step(std::span<const data::VideoRecord> videos);
  /// `count` steps; `on_step` sees each log as it is produced.
  std::vector<StepLog> run(std::span<const data::VideoRecord> videos, std::size_t count,
                           const std::function<void(const StepLog&)>& on_step = {});
  /// One epoch of schedule.steps_per_epoch steps.
  std::vector<StepLog> run_epoch(std::span<const data::VideoRecord> videos);

  /// Batch the next step would use, drawn from a copy of the RNG.
  std::vector<losses::PretrainItem> peek_batch(std::span<const data::VideoRecord> videos) const;

  /// Manifest gets {kind, step, rng_state, ema_momentum} merged into `extra`.
  nets::CheckpointFile checkpoint(const nlohmann::json& extra = {}) const;
  void save(const std::filesystem::path& path, const nlohmann::json& extra = {}) const;
  /// Restores parameters, moments, step and RNG; shapes must match.
  void restore(const nets::CheckpointFile& ckpt);
  void load(const std::filesystem::path& path);

  nets::PretrainModel<float>& model() { return model_; }
  const nets::PretrainModel<float>& model() const { return model_; }
  const PretrainSettings& settings() const { return settings_; }
  std::size_t steps_done() const { return step_; }
  const Rng& rng() const { return rng_; }

 private:
  std::vector<losses::PretrainItem> sample_batch(std::span<const data::VideoRecord> videos,
                                                 Rng& rng) const;

  PretrainSettings settings_;
  nets::PretrainModel<float> model_;
  AdamW<float> opt_;
  std::size_t step_ = 0;
  Rng rng_;
};

/// Writes one JSON object per line.
void write_jsonl(const std::filesystem::path& path, std::span<const StepLog> logs);

}  // namespace locjepa::train
