#include "locjepa/train/pretrain.hpp"

#include <cmath>
#include <fstream>

#include "locjepa/common/error.hpp"
#include "locjepa/common/log.hpp"
#include "locjepa/diff/ops.hpp"
#include "locjepa/nets/checkpoint.hpp"

namespace locjepa::train {
namespace {

constexpr std::uint64_t kDataStream = 0xd1b54a32d192ed03ULL;

}  // namespace

void PretrainSettings::validate() const {
  if (batch_size == 0) throw UsageError("pretrain: batch_size must be positive");
  if (clip_frames == 0 || frame_step == 0) {
    throw UsageError("pretrain: clip_frames and frame_step must be positive");
  }
  if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) {
    throw UsageError("pretrain: mask ratio must lie in (0, 1)");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw UsageError("pretrain: lambda must lie in [0, 1], got " + std::to_string(lambda));
  }
  if (n_pairs == 0) throw UsageError("pretrain: n_pairs must be positive");
  schedule.validate();
  ema.validate();
  adamw.validate();
}

nlohmann::json StepLog::to_json() const {
  return {{"step", step},   {"jepa", loss.jepa}, {"local", loss.local}, {"combined", loss.combined},
          {"lambda", loss.lambda}, {"lr", lr},   {"ema_m", ema_m}};
}

bool StepLog::operator==(const StepLog& o) const {
  return step == o.step && loss.jepa == o.loss.jepa && loss.local == o.loss.local &&
         loss.combined == o.loss.combined && loss.lambda == o.loss.lambda && lr == o.lr &&
         ema_m == o.ema_m;
}

Pretrainer::Pretrainer(const nets::ModelConfig& model, const tok::TokenGrid& grid,
                       PretrainSettings settings, std::uint64_t seed)
    : settings_(std::move(settings)),
      model_(model, grid, seed),
      opt_(model_.online, settings_.adamw),
      rng_(seed ^ kDataStream) {
  settings_.validate();
  if (grid.frames() != settings_.clip_frames) {
    throw UsageError("pretrain: grid covers " + std::to_string(grid.frames()) +
                     " frames but clips have " + std::to_string(settings_.clip_frames));
  }
}

std::vector<losses::PretrainItem> Pretrainer::sample_batch(
    std::span<const data::VideoRecord> videos, Rng& rng) const {
  if (videos.empty()) throw DataError("pretrain: no training videos");
  std::vector<losses::PretrainItem> batch(settings_.batch_size);
  for (auto& item : batch) {
    const auto& video = videos[rng.index(videos.size())];
    auto clip = data::sample_clip(video.frames, settings_.frame_step, settings_.clip_frames, rng,
                                  video.id);
    item.clip = std::move(clip.frames);
    item.mask = tok::make_mask(model_.grid, settings_.mask, settings_.mask_ratio, rng);
    item.pairs = losses::sample_pairs(item.mask, settings_.n_pairs, rng, settings_.allow_self_pairs);
  }
  return batch;
}

std::vector<losses::PretrainItem> Pretrainer::peek_batch(
    std::span<const data::VideoRecord> videos) const {
  Rng copy = rng_;
  return sample_batch(videos, copy);
}

StepLog Pretrainer::step(std::span<const data::VideoRecord> videos) {
  const auto batch = sample_batch(videos, rng_);
  StepLog log;
  log.step = step_ + 1;
  log.lr = lr_at(step_, settings_.schedule);
  log.ema_m = settings_.ema.at(step_);

  model_.online.zero_grad();
  const auto loss = losses::pretrain_loss<float>(model_, batch, settings_.lambda);
  log.loss = loss.breakdown();
  if (!std::isfinite(log.loss.combined) || !std::isfinite(log.loss.jepa) ||
      !std::isfinite(log.loss.local)) {
    throw NumericError("pretrain: non-finite loss at step " + std::to_string(log.step) +
                       " (jepa " + std::to_string(log.loss.jepa) + ", local " +
                       std::to_string(log.loss.local) + ", lr " + std::to_string(log.lr) + ")");
  }
  diff::backward(loss.combined);
  clip_grad_norm(model_.online, settings_.grad_clip);
  opt_.step(log.lr);
  nets::ema_update(model_.target, model_.online, log.ema_m);
  ++step_;
  log::debug("pretrain step ", log.step, " combined ", log.loss.combined);
  return log;
}

std::vector<StepLog> Pretrainer::run(std::span<const data::VideoRecord> videos, std::size_t count,
                                     const std::function<void(const StepLog&)>& on_step) {
  std::vector<StepLog> logs;
  logs.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    logs.push_back(step(videos));
    if (on_step) on_step(logs.back());
  }
  return logs;
}

std::vector<StepLog> Pretrainer::run_epoch(std::span<const data::VideoRecord> videos) {
  return run(videos, settings_.schedule.steps_per_epoch);
}

nets::CheckpointFile Pretrainer::checkpoint(const nlohmann::json& extra) const {
  nets::CheckpointFile ckpt;
  ckpt.manifest = extra.is_object() ? extra : nlohmann::json::object();
  ckpt.manifest["kind"] = "pretrain";
  ckpt.manifest["step"] = step_;
  ckpt.manifest["rng_state"] = rng_.state();
  ckpt.manifest["ema_momentum"] = settings_.ema.at(step_);
  nets::export_params(ckpt, model_.online, "online.");
  nets::export_params(ckpt, model_.target, "target.");
  opt_.export_state(ckpt, "adamw.");
  return ckpt;
}

void Pretrainer::save(const std::filesystem::path& path, const nlohmann::json& extra) const {
  nets::write_checkpoint(path, checkpoint(extra));
}

void Pretrainer::load(const std::filesystem::path& path) { restore(nets::read_checkpoint(path)); }

void Pretrainer::restore(const nets::CheckpointFile& ckpt) {
  const auto& m = ckpt.manifest;
  if (m.value("kind", "") != "pretrain" || !m.contains("step") || !m.contains("rng_state")) {
    throw DataError("not a pretraining checkpoint");
  }
  nets::import_params(ckpt, model_.online, "online.");
  nets::import_params(ckpt, model_.target, "target.");
  const auto steps = m.at("step").get<std::size_t>();
  opt_.import_state(ckpt, "adamw.", steps);
  step_ = steps;
  rng_.set_state(m.at("rng_state").get<std::string>());
}

void write_jsonl(const std::filesystem::path& path, std::span<const StepLog> logs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& l : logs) out << l.to_json().dump() << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace locjepa::train
