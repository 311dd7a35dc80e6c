#include "locjepa/config/run_config.hpp"

#include <fstream>
#include <set>
#include <type_traits>

#include "locjepa/common/error.hpp"

namespace locjepa::config {
namespace {

using nlohmann::json;

/// Reads fields of one section from JSON, tracking which keys were used.
class Reader {
 public:
  explicit Reader(const json& root) : root_(root) {}

  template <class T>
  void operator()(const std::string& section, const std::string& key, T& dst) {
    sections_.insert(section);
    if (!root_.contains(section)) return;
    const auto& sec = root_.at(section);
    if (!sec.is_object()) throw UsageError("config: section '" + section + "' must be an object");
    used_[section].insert(key);
    if (!sec.contains(key)) return;
    read(sec.at(key), section + "." + key, dst);
  }

  void finish() const {
    for (const auto& [name, value] : root_.items()) {
      if (name == "profile") continue;
      if (!sections_.contains(name)) throw UsageError("config: unknown section '" + name + "'");
      const auto it = used_.find(name);
      for (const auto& [key, v] : value.items()) {
        if (it == used_.end() || !it->second.contains(key)) {
          throw UsageError("config: unknown key '" + name + "." + key + "'");
        }
      }
    }
  }

 private:
  static void read(const json& v, const std::string& path, std::size_t& dst) {
    if (!v.is_number_unsigned()) throw UsageError("config: " + path + " must be a non-negative integer");
    dst = v.get<std::size_t>();
  }
  static void read(const json& v, const std::string& path, int& dst) {
    if (!v.is_number_integer()) throw UsageError("config: " + path + " must be an integer");
    dst = v.get<int>();
  }
  static void read(const json& v, const std::string& path, double& dst) {
    if (!v.is_number()) throw UsageError("config: " + path + " must be a number");
    dst = v.get<double>();
  }
  static void read(const json& v, const std::string& path, bool& dst) {
    if (!v.is_boolean()) throw UsageError("config: " + path + " must be true or false");
    dst = v.get<bool>();
  }
  static void read(const json& v, const std::string& path, std::string& dst) {
    if (!v.is_string()) throw UsageError("config: " + path + " must be a string");
    dst = v.get<std::string>();
  }
  static void read(const json& v, const std::string& path, tok::MaskStrategy& dst) {
    std::string name;
    read(v, path, name);
    dst = tok::parse_mask_strategy(name);
  }

  const json& root_;
  std::set<std::string> sections_;
  std::map<std::string, std::set<std::string>> used_;
};

class Writer {
 public:
  template <class T>
  void operator()(const std::string& section, const std::string& key, T& v) {
    if constexpr (std::is_same_v<T, tok::MaskStrategy>) {
      out[section][key] = tok::to_string(v);
    } else {
      out[section][key] = v;
    }
  }
  json out = json::object();
};

/// Every configurable field, in file order.
template <class V>
void visit(RunConfig& c, V& v) {
  auto& d = c.data;
  v("data", "root", d.root);
  v("data", "videos", d.videos);
  v("data", "frames", d.phantom.frames);
  v("data", "height", d.phantom.height);
  v("data", "width", d.phantom.width);
  v("data", "num_structures", d.phantom.num_structures);
  v("data", "motion_amplitude", d.phantom.motion_amplitude);
  v("data", "cycle_frames", d.phantom.cycle_frames);
  v("data", "speckle", d.phantom.speckle);
  v("data", "val_ratio", d.val_ratio);
  v("data", "test_ratio", d.test_ratio);
  v("data", "fraction", d.fraction);
  v("data", "split_seed", d.split_seed);

  auto& t = c.tokenizer;
  v("tokenizer", "clip_frames", t.clip_frames);
  v("tokenizer", "frame_step", t.frame_step);
  v("tokenizer", "tubelet_frames", t.tubelet_frames);
  v("tokenizer", "patch", t.patch);

  auto& m = c.model;
  v("model", "depth", m.encoder.depth);
  v("model", "embed_dim", m.encoder.embed_dim);
  v("model", "heads", m.encoder.heads);
  v("model", "mlp_ratio", m.encoder.mlp_ratio);
  v("model", "frozen_blocks", m.encoder.frozen_blocks);
  v("model", "predictor_depth", m.predictor.depth);
  v("model", "predictor_dim", m.predictor.dim);
  v("model", "predictor_heads", m.predictor.heads);
  v("model", "probe_dim", m.probe.dim);
  v("model", "probe_heads", m.probe.heads);
  v("model", "probe_mlp_ratio", m.probe.mlp_ratio);
  v("model", "num_classes", m.probe.num_classes);

  auto& l = c.loss;
  v("loss", "lambda", l.lambda);
  v("loss", "n_pairs", l.n_pairs);
  v("loss", "allow_self_pairs", l.allow_self_pairs);
  v("loss", "mask", l.mask);
  v("loss", "mask_ratio", l.mask_ratio);

  auto& s = c.schedule;
  v("schedule", "batch_size", s.batch_size);
  v("schedule", "pretrain_epochs", s.pretrain_epochs);
  v("schedule", "pretrain_steps_per_epoch", s.pretrain_steps_per_epoch);
  v("schedule", "warmup_epochs", s.warmup_epochs);
  v("schedule", "base_lr", s.base_lr);
  v("schedule", "final_lr", s.final_lr);
  v("schedule", "ema_start", s.ema_start);
  v("schedule", "ema_end", s.ema_end);
  v("schedule", "beta1", s.beta1);
  v("schedule", "beta2", s.beta2);
  v("schedule", "eps", s.eps);
  v("schedule", "weight_decay", s.weight_decay);
  v("schedule", "grad_clip", s.grad_clip);
  v("schedule", "probe_batch_size", s.probe_batch_size);
  v("schedule", "probe_epochs", s.probe_epochs);
  v("schedule", "probe_steps_per_epoch", s.probe_steps_per_epoch);
  v("schedule", "probe_base_lr", s.probe_base_lr);
  v("schedule", "probe_final_lr", s.probe_final_lr);

  v("runtime", "seed", c.runtime.seed);
}

}  // namespace

Profile parse_profile(const std::string& name) {
  if (name == "desk") return Profile::desk;
  if (name == "paper") return Profile::paper;
  throw UsageError("unknown profile '" + name + "' (expected desk or paper)");
}

std::string to_string(Profile p) { return p == Profile::desk ? "desk" : "paper"; }

RunConfig RunConfig::defaults(Profile profile) {
  RunConfig c;
  c.profile = profile;
  if (profile == Profile::desk) return c;

  c.data.videos = 500;
  c.data.phantom.frames = 64;
  c.data.phantom.height = 224;
  c.data.phantom.width = 224;
  c.data.phantom.cycle_frames = 32;
  c.tokenizer = {16, 4, 2, 16};
  c.model.encoder = {24, 1024, 16, 4.0, 0};
  c.schedule.batch_size = 4;
  c.schedule.pretrain_epochs = 300;
  c.schedule.warmup_epochs = 20;
  c.schedule.pretrain_steps_per_epoch = 75;
  c.schedule.base_lr = 2e-4;
  c.schedule.final_lr = 1e-6;
  c.schedule.probe_epochs = 300;
  c.schedule.probe_steps_per_epoch = 75;
  c.schedule.probe_base_lr = 1e-3;
  c.schedule.probe_final_lr = 0.0;
  return c;
}

RunConfig RunConfig::from_json(const nlohmann::json& j, std::optional<Profile> profile) {
  if (!j.is_object()) throw UsageError("config: top level must be a JSON object");
  Profile p = Profile::desk;
  if (j.contains("profile")) {
    if (!j.at("profile").is_string()) throw UsageError("config: profile must be a string");
    p = parse_profile(j.at("profile").get<std::string>());
  }
  if (profile) p = *profile;
  RunConfig c = defaults(p);
  Reader reader(j);
  visit(c, reader);
  reader.finish();
  return c;
}

nlohmann::json RunConfig::to_json() const {
  RunConfig copy = *this;
  Writer w;
  visit(copy, w);
  w.out["profile"] = config::to_string(profile);
  return w.out;
}

void RunConfig::validate() const {
  if (data.videos < 3) throw UsageError("config: data.videos must be at least 3");
  if (!(data.val_ratio >= 0 && data.test_ratio >= 0 && data.val_ratio + data.test_ratio < 1)) {
    throw UsageError("config: val_ratio + test_ratio must lie in [0, 1)");
  }
  if (data.fraction <= 0 || data.fraction > 100) {
    throw UsageError("config: data.fraction must lie in (0, 100]");
  }
  model.validate();
  (void)grid();
  pretrain_settings().validate();
  probe_settings().validate();
}

tok::TokenGrid RunConfig::grid() const {
  return tok::TokenGrid::for_clip(tokenizer.clip_frames, data.phantom.height, data.phantom.width,
                                  tokenizer.tubelet_frames, tokenizer.patch, tokenizer.patch,
                                  model.encoder.embed_dim);
}

std::size_t RunConfig::pretrain_steps() const {
  return train::Schedule{0, 0, 0, schedule.pretrain_epochs, schedule.pretrain_steps_per_epoch}
      .total_steps();
}

std::size_t RunConfig::probe_steps() const {
  return train::Schedule{0, 0, 0, schedule.probe_epochs, schedule.probe_steps_per_epoch}
      .total_steps();
}

train::PretrainSettings RunConfig::pretrain_settings() const {
  const auto& s = schedule;
  train::PretrainSettings p;
  p.batch_size = s.batch_size;
  p.clip_frames = tokenizer.clip_frames;
  p.frame_step = tokenizer.frame_step;
  p.mask = loss.mask;
  p.mask_ratio = loss.mask_ratio;
  p.lambda = loss.lambda;
  p.n_pairs = loss.n_pairs;
  p.allow_self_pairs = loss.allow_self_pairs;
  p.schedule = {s.base_lr, s.final_lr, s.warmup_epochs, s.pretrain_epochs,
                s.pretrain_steps_per_epoch};
  p.ema = {s.ema_start, s.ema_end, pretrain_steps()};
  p.adamw = {s.beta1, s.beta2, s.eps, s.weight_decay};
  p.grad_clip = s.grad_clip;
  return p;
}

train::ProbeSettings RunConfig::probe_settings() const {
  const auto& s = schedule;
  train::ProbeSettings p;
  p.batch_size = s.probe_batch_size;
  p.clip_frames = tokenizer.clip_frames;
  p.frame_step = tokenizer.frame_step;
  p.schedule = {s.probe_base_lr, s.probe_final_lr, 0.0, s.probe_epochs, s.probe_steps_per_epoch};
  p.adamw = {s.beta1, s.beta2, s.eps, s.weight_decay};
  p.grad_clip = s.grad_clip;
  return p;
}

RunConfig load_run_config(const std::filesystem::path& path, std::optional<Profile> profile) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
  return RunConfig::from_json(j, profile);
}

}  // namespace locjepa::config
