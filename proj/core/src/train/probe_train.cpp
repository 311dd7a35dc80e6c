#include "locjepa/train/probe_train.hpp"

#include <cmath>
#include <fstream>

#include "locjepa/common/error.hpp"
#include "locjepa/common/log.hpp"
#include "locjepa/diff/ops.hpp"

namespace locjepa::train {
namespace {

constexpr std::uint64_t kProbeStream = 0x94d049bb133111ebULL;

/// Encoder tensors live under "online.encoder.*" in pretraining checkpoints
/// and under "encoder.*" in probe checkpoints.
std::string encoder_prefix(const nets::CheckpointFile& ckpt) {
  const auto kind = ckpt.manifest.value("kind", "");
  if (kind == "pretrain") return "online.";
  if (kind == "probe") return "";
  throw DataError("checkpoint kind '" + kind + "' carries no encoder");
}

Tensor<std::int32_t> argmax_labels(const diff::Var<float>& logits, const Shape& shape) {
  const auto classes = logits.dim(1);
  const auto v = logits.value();
  Tensor<std::int32_t> out(shape);
  for (std::size_t r = 0; r < out.data.size(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c) {
      if (v[r * classes + c] > v[r * classes + best]) best = c;
    }
    out.data[r] = static_cast<std::int32_t>(best);
  }
  return out;
}

}  // namespace

void ProbeSettings::validate() const {
  if (batch_size == 0) throw UsageError("probe: batch_size must be positive");
  if (clip_frames == 0 || frame_step == 0) {
    throw UsageError("probe: clip_frames and frame_step must be positive");
  }
  schedule.validate();
  adamw.validate();
}

nlohmann::json ProbeLog::to_json() const {
  nlohmann::json j = {{"step", step}, {"loss", loss}, {"lr", lr}};
  if (val_dsc) j["val_dsc"] = *val_dsc;
  return j;
}

ProbeTrainer::ProbeTrainer(const nets::ModelConfig& model, const tok::TokenGrid& grid,
                           ProbeSettings settings, std::uint64_t seed)
    : settings_(std::move(settings)),
      model_(model, grid, seed),
      opt_(model_.head_params, settings_.adamw),
      rng_(seed ^ kProbeStream) {
  settings_.validate();
  if (grid.frames() != settings_.clip_frames) {
    throw UsageError("probe: grid covers " + std::to_string(grid.frames()) +
                     " frames but clips have " + std::to_string(settings_.clip_frames));
  }
}

void ProbeTrainer::load_encoder(const nets::CheckpointFile& ckpt) {
  nets::import_params(ckpt, model_.encoder_params, encoder_prefix(ckpt));
  cache_.clear();
}

const nets::EmbeddingSeq<float>& ProbeTrainer::features(const std::string& id, std::size_t start,
                                                        const Tensor<float>& clip) const {
  const auto key = std::make_pair(id, start);
  auto it = cache_.find(key);
  if (it == cache_.end()) it = cache_.emplace(key, model_.frozen_features(clip)).first;
  return it->second;
}

ProbeLog ProbeTrainer::step(std::span<const data::VideoRecord> labelled) {
  if (labelled.empty()) throw DataError("probe: no labelled training videos");
  ProbeLog log;
  log.step = step_ + 1;
  log.lr = lr_at(step_, settings_.schedule);

  model_.head_params.zero_grad();
  diff::Var<float> total;
  for (std::size_t b = 0; b < settings_.batch_size; ++b) {
    const auto& video = labelled[rng_.index(labelled.size())];
    if (!video.labels) throw DataError("probe: video '" + video.id + "' has no labels");
    const auto clip =
        data::sample_clip(video.frames, settings_.frame_step, settings_.clip_frames, rng_, video.id);
    const auto idx = data::clip_frame_indices(video.frames.dim(0), settings_.frame_step,
                                              settings_.clip_frames, clip.start_frame);
    const auto labels = data::take_frames(*video.labels, idx);
    const auto logits = model_.logits(features(video.id, clip.start_frame, clip.frames));
    if (logits.dim(0) != labels.size()) {
      throw ShapeError("probe: " + std::to_string(labels.size()) + " labels for " +
                       std::to_string(logits.dim(0)) + " pixels");
    }
    const auto ce = diff::cross_entropy(logits, labels.values());
    total = total.defined() ? diff::add(total, ce) : ce;
  }
  const auto loss = diff::scale(total, 1.0f / float(settings_.batch_size));
  log.loss = loss.item();
  if (!std::isfinite(log.loss)) {
    throw NumericError("probe: non-finite loss at step " + std::to_string(log.step));
  }
  diff::backward(loss);
  clip_grad_norm(model_.head_params, settings_.grad_clip);
  opt_.step(log.lr);
  ++step_;
  return log;
}

std::vector<ProbeLog> ProbeTrainer::run(std::span<const data::VideoRecord> labelled,
                                        std::size_t count,
                                        std::span<const data::VideoRecord> validation) {
  std::vector<ProbeLog> logs;
  const auto per_epoch = settings_.schedule.steps_per_epoch;
  for (std::size_t s = 0; s < count; ++s) {
    logs.push_back(step(labelled));
    if (!validation.empty() && (step_ % per_epoch == 0 || s + 1 == count)) {
      const auto records = evaluate(validation);
      logs.back().val_dsc = eval::summarize(records).dsc.mean;
      log::info("probe step ", step_, " loss ", logs.back().loss, " val DSC ",
                *logs.back().val_dsc);
    }
  }
  return logs;
}

Tensor<std::int32_t> ProbeTrainer::predict(const Tensor<float>& clip) const {
  diff::NoGradGuard no_grad;
  return argmax_labels(model_.logits(model_.frozen_features(clip)), clip.shape);
}

eval::MetricsRecord ProbeTrainer::evaluate(const data::VideoRecord& video) const {
  if (!video.labels) throw DataError("evaluate: video '" + video.id + "' has no labels");
  const auto length = video.frames.dim(0);
  const auto starts =
      data::clip_start_count(length, settings_.frame_step, settings_.clip_frames);
  const auto classes = static_cast<std::int32_t>(model_.config.probe.num_classes);
  std::vector<eval::Confusion> counts(classes);
  for (std::size_t s = 0; s < starts; ++s) {
    const auto clip = data::clip_at(video.frames, settings_.frame_step, settings_.clip_frames, s);
    const auto idx = data::clip_frame_indices(length, settings_.frame_step, settings_.clip_frames, s);
    diff::NoGradGuard no_grad;
    const auto pred =
        argmax_labels(model_.logits(features(video.id, s, clip.frames)), clip.frames.shape);
    const auto per = eval::class_counts(pred, data::take_frames(*video.labels, idx), classes);
    for (std::int32_t c = 0; c < classes; ++c) counts[c] += per[c];
  }
  return eval::make_record(video.id, counts);
}

std::vector<eval::MetricsRecord> ProbeTrainer::evaluate(
    std::span<const data::VideoRecord> videos) const {
  std::vector<eval::MetricsRecord> out;
  out.reserve(videos.size());
  for (const auto& v : videos) out.push_back(evaluate(v));
  return out;
}

nets::CheckpointFile ProbeTrainer::checkpoint(const nlohmann::json& extra) const {
  nets::CheckpointFile ckpt;
  ckpt.manifest = extra.is_object() ? extra : nlohmann::json::object();
  ckpt.manifest["kind"] = "probe";
  ckpt.manifest["step"] = step_;
  ckpt.manifest["rng_state"] = rng_.state();
  nets::export_params(ckpt, model_.encoder_params);
  nets::export_params(ckpt, model_.head_params);
  opt_.export_state(ckpt, "adamw.");
  return ckpt;
}

void ProbeTrainer::save(const std::filesystem::path& path, const nlohmann::json& extra) const {
  nets::write_checkpoint(path, checkpoint(extra));
}

void ProbeTrainer::load(const std::filesystem::path& path) { restore(nets::read_checkpoint(path)); }

void ProbeTrainer::restore(const nets::CheckpointFile& ckpt) {
  const auto& m = ckpt.manifest;
  if (m.value("kind", "") != "probe" || !m.contains("step") || !m.contains("rng_state")) {
    throw DataError("not a probe checkpoint");
  }
  nets::import_params(ckpt, model_.encoder_params);
  nets::import_params(ckpt, model_.head_params);
  step_ = m.at("step").get<std::size_t>();
  opt_.import_state(ckpt, "adamw.", step_);
  rng_.set_state(m.at("rng_state").get<std::string>());
  cache_.clear();
}

void write_jsonl(const std::filesystem::path& path, std::span<const ProbeLog> logs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& l : logs) out << l.to_json().dump() << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace locjepa::train
