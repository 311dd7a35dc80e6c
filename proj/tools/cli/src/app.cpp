#include "locjepa/cli/app.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "locjepa/common/error.hpp"
#include "locjepa/common/log.hpp"
#include "locjepa/config/run_config.hpp"
#include "locjepa/data/dataset.hpp"
#include "locjepa/data/synthetic.hpp"
#include "locjepa/eval/harness.hpp"
#include "locjepa/train/pretrain.hpp"
#include "locjepa/train/probe_train.hpp"

namespace locjepa::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
  std::string config_path;
  std::string profile;
  std::optional<std::uint64_t> seed;
  std::string data_root;
};

void add_common(CLI::App* cmd, Common& c, bool with_data = true) {
  cmd->add_option("--config", c.config_path, "JSON run configuration");
  cmd->add_option("--profile", c.profile, "desk (default) or paper")->check(
      CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--seed", c.seed, "Seed for every random stream");
  if (with_data) cmd->add_option("--data", c.data_root, "Dataset root (default: data.root)");
}

config::RunConfig resolve_config(const Common& c) {
  std::optional<config::Profile> profile;
  if (!c.profile.empty()) profile = config::parse_profile(c.profile);
  auto cfg = c.config_path.empty()
                 ? config::RunConfig::defaults(profile.value_or(config::Profile::desk))
                 : config::load_run_config(c.config_path, profile);
  if (c.seed) cfg.runtime.seed = *c.seed;
  if (!c.data_root.empty()) cfg.data.root = c.data_root;
  return cfg;
}

std::pair<std::size_t, std::size_t> parse_size(const std::string& text) {
  const auto x = text.find('x');
  std::size_t h = 0, w = 0;
  if (x != std::string::npos) {
    const auto* b = text.data();
    const auto r1 = std::from_chars(b, b + x, h);
    const auto r2 = std::from_chars(b + x + 1, b + text.size(), w);
    if (r1.ec == std::errc{} && r1.ptr == b + x && r2.ec == std::errc{} &&
        r2.ptr == b + text.size() && h > 0 && w > 0) {
      return {h, w};
    }
  }
  throw UsageError("--size must look like HxW, got '" + text + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::istringstream in(item);
    T v{};
    if (!(in >> v) || !in.eof()) throw UsageError(flag + ": cannot parse '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

bool dir_non_empty(const fs::path& p) {
  return fs::exists(p) && fs::is_directory(p) && !fs::is_empty(p);
}

/// Scales the pretraining schedule to `steps` total steps, keeping the
/// warmup share.
void set_pretrain_steps(config::RunConfig& cfg, std::size_t steps) {
  if (steps == 0) throw UsageError("--steps must be positive");
  auto& s = cfg.schedule;
  const double share = s.warmup_epochs / s.pretrain_epochs;
  s.pretrain_epochs = double(steps) / double(s.pretrain_steps_per_epoch);
  s.warmup_epochs = share * s.pretrain_epochs;
}

void set_probe_steps(config::RunConfig& cfg, std::size_t steps) {
  if (steps == 0) throw UsageError("--steps must be positive");
  cfg.schedule.probe_epochs = double(steps) / double(cfg.schedule.probe_steps_per_epoch);
}

// ---------------------------------------------------------------- generate-data

struct GenerateOpts {
  Common common;
  std::string out;
  std::optional<std::size_t> videos, frames, structures;
  std::string size;
  bool force = false;
};

int cmd_generate(const GenerateOpts& o, std::ostream& out) {
  auto cfg = resolve_config(o.common);
  if (o.videos) cfg.data.videos = *o.videos;
  if (o.frames) cfg.data.phantom.frames = *o.frames;
  if (o.structures) cfg.data.phantom.num_structures = *o.structures;
  if (!o.size.empty()) {
    const auto [h, w] = parse_size(o.size);
    cfg.data.phantom.height = h;
    cfg.data.phantom.width = w;
  }
  if (cfg.data.videos < 3) throw UsageError("--videos must be at least 3");
  const fs::path root = o.out;
  if (dir_non_empty(root)) {
    if (!o.force) throw DataError(root.string() + " exists and is not empty (use --force)");
    for (const auto* split : {"train", "val", "test"}) fs::remove_all(root / split);
    fs::remove(root / "manifest.json");
  }
  fs::create_directories(root);

  const auto n = cfg.data.videos;
  auto n_test = static_cast<std::size_t>(std::llround(double(n) * cfg.data.test_ratio));
  auto n_val = static_cast<std::size_t>(std::llround(double(n) * cfg.data.val_ratio));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 2);
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1 - n_test);
  const auto n_train = n - n_val - n_test;

  Rng rng(cfg.runtime.seed);
  json splits = {{"train", json::array()}, {"val", json::array()}, {"test", json::array()}};
  json seeds = json::object();
  for (std::size_t k = 0; k < n; ++k) {
    char id[32];
    std::snprintf(id, sizeof id, "video_%04zu", k);
    const std::string split = k < n_train ? "train" : (k < n_train + n_val ? "val" : "test");
    const auto video_seed = rng.next();
    const auto v = data::generate_synthetic_video(video_seed, cfg.data.phantom);
    data::write_video(root, split, {id, v.frames, v.labels});
    splits[split].push_back(id);
    seeds[id] = video_seed;
  }
  const auto& p = cfg.data.phantom;
  json manifest = {{"seed", cfg.runtime.seed},
                   {"videos", n},
                   {"generator",
                    {{"frames", p.frames},
                     {"height", p.height},
                     {"width", p.width},
                     {"num_structures", p.num_structures},
                     {"motion_amplitude", p.motion_amplitude},
                     {"cycle_frames", p.cycle_frames},
                     {"speckle", p.speckle}}},
                   {"splits", splits},
                   {"video_seeds", seeds}};
  eval::write_text(root / "manifest.json", manifest.dump(2) + "\n");
  out << "wrote " << n << " videos (" << n_train << " train, " << n_val << " val, " << n_test
      << " test) to " << root.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- pretrain

struct PretrainOpts {
  Common common;
  std::optional<double> lambda;
  std::optional<std::size_t> frozen_blocks, steps, save_every;
  std::string mask;
  std::string out = "runs/pretrain";
  std::string resume;
};

int cmd_pretrain(const PretrainOpts& o, std::ostream& out) {
  auto cfg = resolve_config(o.common);
  if (o.lambda) cfg.loss.lambda = *o.lambda;
  if (o.frozen_blocks) cfg.model.encoder.frozen_blocks = *o.frozen_blocks;
  if (!o.mask.empty()) cfg.loss.mask = tok::parse_mask_strategy(o.mask);
  if (o.steps) set_pretrain_steps(cfg, *o.steps);
  cfg.validate();

  const fs::path data_root = cfg.data.root;
  const auto videos = data::read_split(data_root, "train");
  if (videos.empty()) throw DataError(data_root.string() + ": no training videos");

  const fs::path dir = o.out;
  fs::create_directories(dir);
  eval::write_text(dir / "config.json", cfg.to_json().dump(2) + "\n");

  train::Pretrainer trainer(cfg.model, cfg.grid(), cfg.pretrain_settings(), cfg.runtime.seed);
  std::vector<train::StepLog> logs;
  if (!o.resume.empty()) {
    trainer.load(o.resume);
    // keep the log of the run being resumed so the file stays complete
    if (fs::exists(dir / "pretrain_log.jsonl")) {
      std::ifstream in(dir / "pretrain_log.jsonl");
      std::string line;
      while (std::getline(in, line)) {
        const auto j = json::parse(line);
        if (j.at("step").get<std::size_t>() > trainer.steps_done()) break;
        train::StepLog l;
        l.step = j.at("step");
        l.loss = {j.at("jepa"), j.at("local"), j.at("combined"), j.at("lambda")};
        l.lr = j.at("lr");
        l.ema_m = j.at("ema_m");
        logs.push_back(l);
      }
    }
  }
  const json extra = {{"config", cfg.to_json()}, {"seed", cfg.runtime.seed}};
  const auto total = cfg.pretrain_steps();
  std::ofstream log_file(dir / "pretrain_log.jsonl", std::ios::trunc);
  for (const auto& l : logs) log_file << l.to_json().dump() << '\n';
  while (trainer.steps_done() < total) {
    const auto l = trainer.step(videos);
    logs.push_back(l);
    log_file << l.to_json().dump() << '\n' << std::flush;
    if (l.step % 10 == 0 || l.step == total) {
      log::info("step ", l.step, "/", total, " combined ", l.loss.combined, " jepa ", l.loss.jepa,
                " local ", l.loss.local);
    }
    if (o.save_every && *o.save_every > 0 && l.step % *o.save_every == 0 && l.step < total) {
      trainer.save(dir / ("checkpoint_step" + std::to_string(l.step) + ".vckp"), extra);
    }
  }
  trainer.save(dir / "checkpoint.vckp", extra);
  eval::write_text(dir / "loss.svg", eval::loss_svg(logs));
  if (!logs.empty()) {
    const auto& last = logs.back();
    out << "pretrained " << total << " steps; final combined " << last.loss.combined << " (jepa "
        << last.loss.jepa << ", local " << last.loss.local << ")\n";
  }
  out << "checkpoint: " << (dir / "checkpoint.vckp").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- probe

struct ProbeOpts {
  Common common;
  std::string encoder_ckpt;
  bool random_init = false;
  int fraction = 100;
  std::optional<std::size_t> steps;
  std::string out = "runs/probe";
};

int cmd_probe(const ProbeOpts& o, std::ostream& out) {
  if (o.encoder_ckpt.empty() == !o.random_init) {
    throw UsageError("probe: give exactly one of --encoder-ckpt or --random-init");
  }
  auto cfg = resolve_config(o.common);
  cfg.data.fraction = o.fraction;
  if (o.steps) set_probe_steps(cfg, *o.steps);
  cfg.validate();

  std::optional<nets::CheckpointFile> encoder;
  if (!o.encoder_ckpt.empty()) encoder = nets::read_checkpoint(o.encoder_ckpt);
  const auto data = eval::load_labelled(cfg.data.root);

  data::DatasetSplit split;
  for (const auto& v : data.train) split.train_ids.push_back(v.id);
  for (const auto& v : data.val) split.val_ids.push_back(v.id);
  for (const auto& v : data.test) split.test_ids.push_back(v.id);
  split.validate();
  const auto keep = data::subsample_train(split, cfg.data.fraction, cfg.data.split_seed);
  std::vector<data::VideoRecord> subset;
  for (const auto& v : data.train) {
    if (std::binary_search(keep.begin(), keep.end(), v.id)) subset.push_back(v);
  }

  train::ProbeTrainer trainer(cfg.model, cfg.grid(), cfg.probe_settings(), cfg.runtime.seed);
  if (encoder) trainer.load_encoder(*encoder);
  const auto logs = trainer.run(subset, cfg.probe_steps(), data.val);

  const fs::path dir = o.out;
  fs::create_directories(dir);
  train::write_jsonl(dir / "probe_log.jsonl", logs);
  json ids = json::array();
  for (const auto& v : subset) ids.push_back(v.id);
  trainer.save(dir / "probe.vckp",
               {{"config", cfg.to_json()},
                {"seed", cfg.runtime.seed},
                {"encoder", o.random_init ? "random-init" : o.encoder_ckpt},
                {"train_ids", ids}});
  out << "probe trained on " << subset.size() << " videos (" << cfg.data.fraction << "%)";
  if (!logs.empty() && logs.back().val_dsc) out << "; val DSC " << *logs.back().val_dsc;
  out << "\ncheckpoint: " << (dir / "probe.vckp").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOpts {
  std::string probe_ckpt;
  std::string data_root;
  std::string split = "test";
  std::vector<std::string> reports;
};

int cmd_evaluate(const EvaluateOpts& o, std::ostream& out) {
  const auto ckpt = nets::read_checkpoint(o.probe_ckpt);
  if (ckpt.manifest.value("kind", "") != "probe" || !ckpt.manifest.contains("config")) {
    throw DataError(o.probe_ckpt + " is not a probe checkpoint");
  }
  auto cfg = config::RunConfig::from_json(ckpt.manifest.at("config"));
  if (!o.data_root.empty()) cfg.data.root = o.data_root;
  train::ProbeTrainer trainer(cfg.model, cfg.grid(), cfg.probe_settings(), cfg.runtime.seed);
  trainer.restore(ckpt);
  const auto videos = data::read_split(cfg.data.root, o.split);
  if (videos.empty()) throw DataError("split '" + o.split + "' has no videos");
  for (const auto& v : videos) {
    if (!v.labels) throw DataError("split '" + o.split + "' is unlabelled (" + v.id + ")");
  }
  const auto records = trainer.evaluate(videos);
  for (const auto& r : o.reports) {
    const fs::path p = r;
    if (p.extension() == ".json") {
      eval::write_text(p, eval::records_json(records).dump(2) + "\n");
    } else {
      eval::write_text(p, eval::metrics_csv(records));
    }
  }
  const auto s = eval::summarize(records);
  out << "videos " << records.size() << "  DSC " << s.dsc.mean << " ± " << s.dsc.sd << "  JI "
      << s.ji.mean << "  PPV " << s.ppv.mean << "  Recall " << s.recall.mean << "\n";
  return 0;
}

// ---------------------------------------------------------------- ablate

struct AblateOpts {
  Common common;
  std::string lambdas = "0.9,0.75,0.5,0.25";
  std::string frozen;
  std::string out = "runs/ablation";
};

int cmd_ablate(const AblateOpts& o, std::ostream& out) {
  const auto lambdas = parse_list<double>(o.lambdas, "--lambdas");
  auto cfg = resolve_config(o.common);
  cfg.validate();
  std::vector<std::size_t> frozen{cfg.model.encoder.frozen_blocks};
  if (!o.frozen.empty()) frozen = parse_list<std::size_t>(o.frozen, "--frozen-variants");
  const auto data = eval::load_labelled(cfg.data.root);
  const auto table = eval::lambda_ablation(cfg, lambdas, frozen, data, cfg.runtime.seed);
  const fs::path dir = o.out;
  const auto csv = eval::ablation_csv(table);
  eval::write_text(dir / "ablation.csv", csv);
  eval::write_text(dir / "ablation.svg", eval::ablation_svg(table));
  out << csv;
  return 0;
}

// ---------------------------------------------------------------- sweep

struct SweepOpts {
  Common common;
  std::vector<std::string> methods;
  std::vector<std::string> baselines;
  std::string fractions = "100,50,20,10";
  std::string seeds;
  std::string out = "runs/sweep";
};

int cmd_sweep(const SweepOpts& o, std::ostream& out) {
  auto cfg = resolve_config(o.common);
  cfg.validate();
  const auto fractions = parse_list<int>(o.fractions, "--fractions");
  const auto seeds = o.seeds.empty() ? std::vector<std::uint64_t>{cfg.runtime.seed}
                                     : parse_list<std::uint64_t>(o.seeds, "--seeds");
  if (o.methods.empty()) throw UsageError("sweep: give at least one --method");
  // Every checkpoint is read before any training starts.
  std::vector<eval::MethodSpec> methods;
  for (const auto& spec : o.methods) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("--method must be LABEL=random or LABEL=ckpt[,ckpt...]");
    }
    eval::MethodSpec m;
    m.label = spec.substr(0, eq);
    const auto rest = spec.substr(eq + 1);
    if (rest != "random") {
      for (const auto& path : parse_list<std::string>(rest, "--method")) {
        if (!fs::exists(path)) throw DataError("missing checkpoint " + path);
        m.encoders.push_back(nets::read_checkpoint(path));
      }
    }
    methods.push_back(std::move(m));
  }
  for (const auto& b : o.baselines) {
    const auto eq = b.find('=');
    if (eq == std::string::npos) throw UsageError("--baseline must be LABEL=BASELINE");
    const auto label = b.substr(0, eq);
    auto it = std::find_if(methods.begin(), methods.end(),
                           [&](const eval::MethodSpec& m) { return m.label == label; });
    if (it == methods.end()) throw UsageError("--baseline: unknown method '" + label + "'");
    it->baseline = b.substr(eq + 1);
  }
  const auto data = eval::load_labelled(cfg.data.root);
  const auto rows = eval::fraction_sweep(cfg, methods, data, fractions, seeds);
  const fs::path dir = o.out;
  const auto csv = eval::sweep_csv(rows);
  eval::write_text(dir / "sweep.csv", csv);
  eval::write_text(dir / "sweep.json", eval::sweep_json(rows).dump(2) + "\n");
  out << csv;
  return 0;
}

int exit_code(ErrorKind k) { return static_cast<int>(k); }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Video JEPA pretraining with a relative-localisation loss, probing and evaluation"};
  app.name("locjepa");
  app.require_subcommand(1);
  app.set_version_flag("--version", "locjepa 0.1.0");

  GenerateOpts gen;
  auto* g = app.add_subcommand("generate-data", "Write a synthetic labelled video dataset");
  add_common(g, gen.common, false);
  g->add_option("--out", gen.out, "Output dataset directory")->required();
  g->add_option("--videos", gen.videos, "Number of videos");
  g->add_option("--frames", gen.frames, "Frames per video");
  g->add_option("--size", gen.size, "Frame size HxW");
  g->add_option("--structures", gen.structures, "Foreground structures (classes)");
  g->add_flag("--force", gen.force, "Overwrite a non-empty output directory");

  PretrainOpts pre;
  auto* p = app.add_subcommand("pretrain", "Self-supervised pretraining");
  add_common(p, pre.common);
  p->add_option("--lambda", pre.lambda, "Weight of the JEPA term (default 0.25)");
  p->add_option("--frozen-blocks", pre.frozen_blocks, "Leading encoder blocks kept fixed");
  p->add_option("--mask", pre.mask, "multiblock or random")->check(
      CLI::IsMember({"multiblock", "random"}));
  p->add_option("--steps", pre.steps, "Total optimizer steps");
  p->add_option("--save-every", pre.save_every, "Intermediate checkpoint period (steps)");
  p->add_option("--resume", pre.resume, "Continue from a pretraining checkpoint");
  p->add_option("--out", pre.out, "Run directory");

  ProbeOpts prb;
  auto* q = app.add_subcommand("probe", "Train the attentive probe and decoder on a frozen encoder");
  add_common(q, prb.common);
  q->add_option("--encoder-ckpt", prb.encoder_ckpt, "Pretraining checkpoint");
  q->add_flag("--random-init", prb.random_init, "Use a randomly initialised frozen encoder");
  q->add_option("--fraction", prb.fraction, "Percentage of training videos")->check(
      CLI::Range(1, 100));
  q->add_option("--steps", prb.steps, "Total optimizer steps");
  q->add_option("--out", prb.out, "Run directory");

  EvaluateOpts ev;
  auto* e = app.add_subcommand("evaluate", "Score a probe checkpoint on a labelled split");
  e->add_option("--probe-ckpt", ev.probe_ckpt, "Probe checkpoint")->required();
  e->add_option("--data", ev.data_root, "Dataset root (default: from the checkpoint)");
  e->add_option("--split", ev.split, "train, val or test");
  e->add_option("--report", ev.reports, "Report path(s); .json or .csv");

  AblateOpts abl;
  auto* a = app.add_subcommand("ablate", "Lambda ablation table");
  add_common(a, abl.common);
  a->add_option("--lambdas", abl.lambdas, "Comma-separated lambda values");
  a->add_option("--frozen-variants", abl.frozen, "Comma-separated frozen-block counts");
  a->add_option("--out", abl.out, "Output directory");

  SweepOpts sw;
  auto* s = app.add_subcommand("sweep", "Training-fraction sweep across methods");
  add_common(s, sw.common);
  s->add_option("--method", sw.methods, "LABEL=random or LABEL=ckpt[,ckpt per seed]")->required();
  s->add_option("--baseline", sw.baselines, "LABEL=BASELINE for paired p-values");
  s->add_option("--fractions", sw.fractions, "Comma-separated percentages");
  s->add_option("--seeds", sw.seeds, "Comma-separated probe seeds");
  s->add_option("--out", sw.out, "Output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? 0 : exit_code(ErrorKind::usage);
  }

  try {
    if (g->parsed()) return cmd_generate(gen, out);
    if (p->parsed()) return cmd_pretrain(pre, out);
    if (q->parsed()) return cmd_probe(prb, out);
    if (e->parsed()) return cmd_evaluate(ev, out);
    if (a->parsed()) return cmd_ablate(abl, out);
    if (s->parsed()) return cmd_sweep(sw, out);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return exit_code(ex.kind());
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
  return exit_code(ErrorKind::usage);
}

}  // namespace locjepa::cli
