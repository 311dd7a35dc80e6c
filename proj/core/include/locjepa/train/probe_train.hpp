#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "locjepa/common/rng.hpp"
#include "locjepa/data/dataset.hpp"
#include "locjepa/eval/metrics.hpp"
#include "locjepa/nets/checkpoint.hpp"
#include "locjepa/nets/model.hpp"
#include "locjepa/train/optim.hpp"
#include "locjepa/train/schedule.hpp"

namespace locjepa::train {

struct ProbeSettings {
  std::size_t batch_size = 4;
  std::size_t clip_frames = 8;
  std::size_t frame_step = 4;
  /// Cosine from 1e-3 to 0 without warmup.
  Schedule schedule{1e-3, 0.0, 0.0, 1.0, 300};
  AdamWConfig adamw;
  double grad_clip = 1.0;

  void validate() const;
};

struct ProbeLog {
  std::size_t step = 0;  // 1-based
  double loss = 0.0;
  double lr = 0.0;
  std::optional<double> val_dsc;  // set at epoch ends when validation videos are given

  nlohmann::json to_json() const;
};

/// Frozen encoder with a trainable attentive probe and segmentation decoder.
class ProbeTrainer {
 public:
  ProbeTrainer(const nets::ModelConfig& model, const tok::TokenGrid& grid, ProbeSettings settings,
               std::uint64_t seed);

  /// Copies encoder weights from a pretraining checkpoint (online branch)
  /// or a probe checkpoint.
  void load_encoder(const nets::CheckpointFile& ckpt);

  /// One optimizer step on a batch of labelled clips.
  ProbeLog step(std::span<const data::VideoRecord> labelled);
  /// `count` steps; validation DSC after every schedule.steps_per_epoch steps.
  std::vector<ProbeLog> run(std::span<const data::VideoRecord> labelled, std::size_t count,
                            std::span<const data::VideoRecord> validation = {});

  /// Per-pixel argmax labels [T, H, W] for one clip.
  Tensor<std::int32_t> predict(const Tensor<float>& clip) const;
  /// Predicts every clip start of a labelled video and scores it.
  eval::MetricsRecord evaluate(const data::VideoRecord& video) const;
  std::vector<eval::MetricsRecord> evaluate(std::span<const data::VideoRecord> videos) const;

  nets::CheckpointFile checkpoint(const nlohmann::json& extra = {}) const;
  void save(const std::filesystem::path& path, const nlohmann::json& extra = {}) const;
  /// Restores encoder, probe, decoder, moments, step and RNG.
  void restore(const nets::CheckpointFile& ckpt);
  void load(const std::filesystem::path& path);

  nets::ProbeModel<float>& model() { return model_; }
  const nets::ProbeModel<float>& model() const { return model_; }
  const ProbeSettings& settings() const { return settings_; }
  std::size_t steps_done() const { return step_; }

 private:
  const nets::EmbeddingSeq<float>& features(const std::string& id, std::size_t start,
                                            const Tensor<float>& clip) const;

  ProbeSettings settings_;
  nets::ProbeModel<float> model_;
  AdamW<float> opt_;
  std::size_t step_ = 0;
  Rng rng_;
  mutable std::map<std::pair<std::string, std::size_t>, nets::EmbeddingSeq<float>> cache_;
};

void write_jsonl(const std::filesystem::path& path, std::span<const ProbeLog> logs);

}  // namespace locjepa::train
