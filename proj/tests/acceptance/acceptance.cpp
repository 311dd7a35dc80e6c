// Runs the acceptance criteria and prints one PASS/FAIL line each.
// Usage: acceptance [--out DIR] [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "locjepa/common/rng.hpp"
#include "locjepa/config/run_config.hpp"
#include "locjepa/data/synthetic.hpp"
#include "locjepa/diff/grad_check.hpp"
#include "locjepa/diff/ops.hpp"
#include "locjepa/eval/harness.hpp"
#include "locjepa/eval/metrics.hpp"
#include "locjepa/losses/losses.hpp"
#include "locjepa/nets/model.hpp"
#include "locjepa/tokenizer/positional.hpp"
#include "locjepa/train/optim.hpp"
#include "locjepa/train/pretrain.hpp"
#include "locjepa/train/schedule.hpp"

using namespace locjepa;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path g_out = "acceptance_out";

// ---------------------------------------------------------------- shared setups

tok::MaskPartition mask_of(std::size_t count, std::vector<std::size_t> masked) {
  tok::MaskPartition m;
  m.masked = std::move(masked);
  for (std::size_t k = 0; k < count; ++k)
    if (!std::binary_search(m.masked.begin(), m.masked.end(), k)) m.visible.push_back(k);
  return m;
}

// D = 8, grid (2, 2, 2), 4 pairs per item, f64.
struct TinySetup {
  nets::ModelConfig cfg;
  tok::TokenGrid grid = tok::TokenGrid::for_clip(4, 8, 8, 2, 4, 4, 8);
  std::unique_ptr<nets::PretrainModel<double>> model;
  std::vector<losses::PretrainItem> batch;

  explicit TinySetup(std::size_t depth = 1, std::size_t frozen = 0) {
    cfg.encoder = {depth, 8, 2, 2.0, frozen};
    model = std::make_unique<nets::PretrainModel<double>>(cfg, grid, 3);
    Rng rng(17);
    for (auto& e : model->online.entries())
      for (auto& v : e.var.mutable_value()) v += rng.uniform(-0.3, 0.3);
    model->target.copy_values_from(model->online);
    const std::vector<std::size_t> masks[] = {{1, 2, 6}, {0, 3, 5, 7}};
    for (const auto& m : masks) {
      losses::PretrainItem item;
      item.clip = Tensor<float>({4, 8, 8});
      for (auto& x : item.clip.data) x = float(rng.uniform());
      item.mask = mask_of(8, m);
      item.pairs = losses::sample_pairs(item.mask, 4, rng);
      batch.push_back(std::move(item));
    }
  }
};

std::vector<data::VideoRecord> desk_videos(std::size_t n, std::uint64_t seed) {
  const auto cfg = config::RunConfig::defaults(config::Profile::desk);
  Rng rng(seed);
  std::vector<data::VideoRecord> out;
  for (std::size_t k = 0; k < n; ++k) {
    auto v = data::generate_synthetic_video(rng.next(), cfg.data.phantom);
    char id[32];
    std::snprintf(id, sizeof id, "video_%04zu", k);
    out.push_back({id, std::move(v.frames), std::move(v.labels)});
  }
  return out;
}

eval::LabelledData desk_dataset() {
  const auto cfg = config::RunConfig::defaults(config::Profile::desk);
  auto all = desk_videos(cfg.data.videos, cfg.runtime.seed);
  const auto n = all.size();
  const auto n_test = std::size_t(std::llround(double(n) * cfg.data.test_ratio));
  const auto n_val = std::size_t(std::llround(double(n) * cfg.data.val_ratio));
  eval::LabelledData d;
  for (std::size_t k = 0; k < n; ++k) {
    auto& dst = k < n - n_val - n_test ? d.train : (k < n - n_test ? d.val : d.test);
    dst.push_back(std::move(all[k]));
  }
  return d;
}

// ---------------------------------------------------------------- criteria

Outcome gradient_correctness() {
  TinySetup tiny;
  std::vector<diff::NamedParam> params;
  for (const auto& e : tiny.model->online.entries()) params.push_back({e.name, e.var});
  std::string detail;
  bool pass = true;
  const char* names[] = {"jepa", "local", "combined"};
  for (int which = 0; which < 3; ++which) {
    const auto loss = [&] {
      auto l = losses::pretrain_loss(*tiny.model, tiny.batch, 0.25);
      return which == 0 ? l.jepa : which == 1 ? l.local : l.combined;
    };
    const auto r = diff::grad_check_params(loss, params, 1e-4, 1e-4);
    pass = pass && r.pass;
    detail += std::string(which ? ", " : "") + names[which] + " max rel err " +
              fmt("%.2e", r.max_rel_err);
    if (!r.pass) detail += " at " + r.worst_name;
  }
  return {pass, detail + " (" + std::to_string(params.size()) + " tensors)"};
}

Outcome stop_gradient_and_freeze() {
  TinySetup tiny(2, 1);
  tiny.model->target.set_trainable("", true);  // a missing cut would now show up as gradient
  diff::backward(losses::pretrain_loss(*tiny.model, tiny.batch, 0.25).combined);
  std::size_t target_nonzero = 0, frozen_nonzero = 0, frozen_tensors = 0;
  for (const auto& e : tiny.model->target.entries())
    if (e.var.has_grad())
      for (double g : e.var.grad()) target_nonzero += g != 0.0;
  std::map<std::string, std::vector<double>> before;
  for (const auto& e : tiny.model->online.entries()) {
    if (!e.name.starts_with("encoder.blocks.0.")) continue;
    ++frozen_tensors;
    if (e.var.has_grad())
      for (double g : e.var.grad()) frozen_nonzero += g != 0.0;
    before[e.name] = {e.var.value().begin(), e.var.value().end()};
  }
  train::AdamW<double> opt(tiny.model->online, {});
  opt.step(1e-2);
  bool stable = true;
  for (const auto& [name, v] : before) {
    const auto now = tiny.model->online.get(name).value();
    stable = stable && std::equal(v.begin(), v.end(), now.begin(), now.end());
  }
  const bool pass = target_nonzero == 0 && frozen_nonzero == 0 && frozen_tensors > 0 && stable;
  return {pass, "target nonzero grads " + std::to_string(target_nonzero) +
                    ", frozen block-0 nonzero grads " + std::to_string(frozen_nonzero) + " over " +
                    std::to_string(frozen_tensors) + " tensors, bit-stable after step: " +
                    (stable ? "yes" : "no")};
}

Outcome offset_oracle() {
  const auto grid = tok::TokenGrid::for_clip(16, 224, 224, 2, 16, 16, 64);
  Rng rng(2024);
  std::size_t mismatches = 0, out_of_range = 0, asym = 0;
  for (int k = 0; k < 10000; ++k) {
    const auto a = rng.index(grid.count()), b = rng.index(grid.count());
    // independent decode of flat (t, i, j) indices
    const long ta = long(a / (14 * 14)), ia = long(a / 14 % 14), ja = long(a % 14);
    const long tb = long(b / (14 * 14)), ib = long(b / 14 % 14), jb = long(b % 14);
    const double expect[3] = {double(ta - tb) / 8.0, double(ia - ib) / 14.0,
                              double(ja - jb) / 14.0};
    const auto pa = tok::positions_of(grid, {a})[0], pb = tok::positions_of(grid, {b})[0];
    const auto got = losses::relative_offset(pa, pb, grid);
    const auto back = losses::relative_offset(pb, pa, grid);
    for (int c = 0; c < 3; ++c) {
      mismatches += got[c] != expect[c];
      out_of_range += !(got[c] > -1.0 && got[c] < 1.0);
      asym += back[c] != -got[c];
    }
  }
  return {mismatches == 0 && out_of_range == 0 && asym == 0,
          "grid (8,14,14), 10000 pairs: mismatches " + std::to_string(mismatches) +
              ", out of (-1,1) " + std::to_string(out_of_range) + ", antisymmetry violations " +
              std::to_string(asym)};
}

Outcome metrics_oracle() {
  Rng rng(99);
  std::size_t mismatches = 0;
  double worst_identity = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Tensor<std::int32_t> p({8, 8}), t({8, 8});
    for (auto& v : p.data) v = std::int32_t(rng.index(2));
    for (auto& v : t.data) v = std::int32_t(rng.index(2));
    std::size_t tp = 0, fp = 0, fn = 0;
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        const bool a = p.data[y * 8 + x] == 1, b = t.data[y * 8 + x] == 1;
        tp += a && b;
        fp += a && !b;
        fn += !a && b;
      }
    const auto s = eval::scores(eval::confusion_counts(p, t, 1));
    // empty-set conventions: both empty -> 1, otherwise an empty side -> 0
    const auto ratio = [](double num, double den, bool both_empty) {
      return den == 0 ? (both_empty ? 1.0 : 0.0) : num / den;
    };
    const bool both_empty = tp + fp + fn == 0;
    const double dsc = ratio(2.0 * tp, 2.0 * tp + fp + fn, both_empty);
    const double ji = ratio(tp, tp + fp + fn, both_empty);
    const double ppv = ratio(tp, tp + fp, both_empty);
    const double rec = ratio(tp, tp + fn, both_empty);
    mismatches += (s.dsc != dsc) + (s.ji != ji) + (s.ppv != ppv) + (s.recall != rec);
    worst_identity = std::max(worst_identity, std::abs(s.dsc - 2 * s.ji / (1 + s.ji)));
  }
  return {mismatches == 0 && worst_identity <= 1e-12,
          "1000 mask pairs: mismatches " + std::to_string(mismatches) +
              ", max |DSC - 2JI/(1+JI)| " + fmt("%.1e", worst_identity)};
}

Outcome loss_decrease() {
  const auto cfg = config::RunConfig::defaults(config::Profile::desk);
  const auto data = desk_dataset();
  train::Pretrainer trainer(cfg.model, cfg.grid(), cfg.pretrain_settings(), cfg.runtime.seed);
  const auto logs = trainer.run(data.train, cfg.pretrain_steps());
  double first = 0, last = 0;
  for (std::size_t k = 0; k < 10; ++k) {
    first += logs[k].loss.combined / 10;
    last += logs[logs.size() - 10 + k].loss.combined / 10;
  }
  fs::create_directories(g_out);
  train::write_jsonl(g_out / "criterion5_pretrain_log.jsonl", logs);
  return {logs.size() == 200 && last <= 0.5 * first,
          std::to_string(logs.size()) + " steps, first-10 mean " + fmt("%.4f", first) +
              ", last-10 mean " + fmt("%.4f", last) + ", ratio " + fmt("%.3f", last / first) +
              " (need <= 0.5)"};
}

Outcome directional_reproduction() {
  auto cfg = config::RunConfig::defaults(config::Profile::desk);
  const auto data = desk_dataset();
  const std::vector<std::uint64_t> seeds{0, 1, 2};
  auto encoders = [&](double lambda) {
    auto c = cfg;
    c.loss.lambda = lambda;
    std::vector<nets::CheckpointFile> out;
    for (const auto s : seeds) out.push_back(eval::pretrain_encoder(c, data.train, s));
    return out;
  };
  std::vector<eval::MethodSpec> methods{{"Random init", {}, ""},
                                        {"V-JEPA", encoders(1.0), "Random init"},
                                        {"V-JEPA + LL", encoders(0.25), "V-JEPA"}};
  const int fractions[] = {10};
  const auto rows = eval::fraction_sweep(cfg, methods, data, fractions, seeds);
  fs::create_directories(g_out);
  eval::write_text(g_out / "criterion6_sweep.csv", eval::sweep_csv(rows));
  const double r = rows[0].summary.dsc.mean, v = rows[1].summary.dsc.mean,
               ll = rows[2].summary.dsc.mean;
  const bool pass = v > r && ll >= v;
  return {pass, "10% fraction, 3 seeds: random " + fmt("%.4f", r) + ", V-JEPA " +
                    fmt("%.4f", v) + ", V-JEPA + LL " + fmt("%.4f", ll) + "; +LL margin " +
                    fmt("%+.4f", ll - v) + ", V-JEPA over random " + fmt("%+.4f", v - r) +
                    "; csv " + (g_out / "criterion6_sweep.csv").string()};
}

Outcome ablation_determinism() {
  const auto cfg = config::RunConfig::defaults(config::Profile::desk);
  const auto data = desk_dataset();
  const double lambdas[] = {0.9, 0.75, 0.5, 0.25};
  const std::size_t frozen[] = {0};
  const auto a = eval::ablation_csv(eval::lambda_ablation(cfg, lambdas, frozen, data, 11));
  const auto b = eval::ablation_csv(eval::lambda_ablation(cfg, lambdas, frozen, data, 11));
  fs::create_directories(g_out);
  eval::write_text(g_out / "criterion7_ablation.csv", a);
  const bool header = a.starts_with("Method,0.9,0.75,0.5,0.25\n");
  return {a == b && header, std::string("header ") + (header ? "ok" : "wrong") +
                                 ", reruns byte-identical: " + (a == b ? "yes" : "no") + "; " +
                                 a.substr(a.find('\n') + 1, a.size() - a.find('\n') - 2)};
}

Outcome schedule_endpoints() {
  const auto cfg = config::RunConfig::defaults(config::Profile::paper);
  const auto pre = cfg.pretrain_settings().schedule;
  const auto probe = cfg.probe_settings().schedule;
  const double l0 = train::lr_at(0, pre), lw = train::lr_at(pre.warmup_steps(), pre),
               lf = train::lr_at(pre.total_steps(), pre);
  const double d0 = train::lr_at(0, probe), df = train::lr_at(probe.total_steps(), probe);
  const bool pass = l0 == 0.0 && lw == 2e-4 && lf == 1e-6 && d0 == 1e-3 && df == 0.0;
  return {pass, "pretrain lr(0)=" + fmt("%g", l0) + " lr(" + std::to_string(pre.warmup_steps()) +
                    ")=" + fmt("%g", lw) + " lr(" + std::to_string(pre.total_steps()) +
                    ")=" + fmt("%g", lf) + "; probe " + fmt("%g", d0) + " -> " + fmt("%g", df)};
}

Outcome resume_identity() {
  const auto cfg = config::RunConfig::defaults(config::Profile::desk);
  const auto data = desk_videos(8, 3);
  const auto path = fs::temp_directory_path() / "locjepa_acceptance_resume.vckp";
  train::Pretrainer full(cfg.model, cfg.grid(), cfg.pretrain_settings(), 5);
  const auto a = full.run(data, 12);
  train::Pretrainer first(cfg.model, cfg.grid(), cfg.pretrain_settings(), 5);
  auto b = first.run(data, 6);
  first.save(path);
  train::Pretrainer second(cfg.model, cfg.grid(), cfg.pretrain_settings(), 12345);
  second.load(path);
  const auto rest = second.run(data, 6);
  b.insert(b.end(), rest.begin(), rest.end());
  fs::remove(path);
  bool params_equal = true;
  for (const auto* which : {"online", "target"}) {
    const auto& x = which[0] == 'o' ? full.model().online : full.model().target;
    const auto& y = which[0] == 'o' ? second.model().online : second.model().target;
    for (const auto& e : x.entries()) {
      const auto u = e.var.value(), v = y.get(e.name).value();
      params_equal = params_equal && std::equal(u.begin(), u.end(), v.begin(), v.end());
    }
  }
  return {a == b && params_equal, "12 steps vs 6 + save/load + 6: logs identical " +
                                      std::string(a == b ? "yes" : "no") + ", parameters identical " +
                                      (params_equal ? "yes" : "no")};
}

Outcome localisation_learnability() {
  const auto cfg = config::RunConfig::defaults(config::Profile::desk);
  const auto grid = cfg.grid();
  const auto dim = cfg.model.encoder.embed_dim;
  std::vector<std::size_t> all(grid.count());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  const nets::EmbeddingSeq<float> seq{
      diff::Var<float>::leaf(tok::positional_embedding<float>(grid, dim), false), all};
  const auto everything = mask_of(grid.count(), all);

  nets::ParamStore<float> store;
  Rng rng(8);
  const nets::LocalisationMlp<float> mlp(store, "loc.", dim, rng);
  train::AdamW<float> opt(store, {0.9, 0.999, 1e-8, 0.0});
  const train::Schedule sched{1e-3, 1e-5, 0, 500, 1};
  auto loss_on = [&](std::span<const losses::TokenPair> pairs) {
    const diff::Var<float> in[] = {losses::pair_inputs(seq, pairs)};
    const Tensor<float> tgt[] = {losses::pair_targets<float>(pairs, grid)};
    return losses::localisation_loss<float>(mlp, in, tgt);
  };
  for (std::size_t step = 0; step < 500; ++step) {
    const auto pairs = losses::sample_pairs(everything, cfg.loss.n_pairs, rng);
    store.zero_grad();
    diff::backward(loss_on(pairs));
    opt.step(train::lr_at(step, sched));
  }
  Rng held_out(777);
  const auto eval_pairs = losses::sample_pairs(everything, 4000, held_out);
  diff::NoGradGuard no_grad;
  const double final_loss = loss_on(eval_pairs).item();
  return {final_loss < 0.01, "500 steps on exact positional encodings (D=" + std::to_string(dim) +
                                 ", grid " + std::to_string(grid.count()) +
                                 " tokens): held-out L_ll " + fmt("%.5f", final_loss) +
                                 " (need < 0.01)"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int k = 1; k < argc; ++k) {
    const std::string a = argv[k];
    if (a == "--out" && k + 1 < argc) {
      g_out = argv[++k];
    } else {
      only.insert(std::stoi(a));
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_correctness},
      {"stop-gradient and freezing", stop_gradient_and_freeze},
      {"offset oracle", offset_oracle},
      {"metrics oracle", metrics_oracle},
      {"loss decrease (desk, 200 steps)", loss_decrease},
      {"directional reproduction (10% fraction)", directional_reproduction},
      {"lambda ablation determinism", ablation_determinism},
      {"schedule endpoints", schedule_endpoints},
      {"resume identity", resume_identity},
      {"localisation learnability", localisation_learnability},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = int(k) + 1;
    if (!only.empty() && !only.contains(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("criterion %2d %s  %s: %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL",
                criteria[k].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
