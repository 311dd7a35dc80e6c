#include "locjepa/eval/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "locjepa/common/error.hpp"
#include "locjepa/common/log.hpp"
#include "locjepa/train/pretrain.hpp"
#include "locjepa/train/probe_train.hpp"

namespace locjepa::eval {
namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string pm(const MeanSd& m) { return fmt("%.3f", m.mean) + " ± " + fmt("%.3f", m.sd); }

std::vector<data::VideoRecord> read_labelled(const std::filesystem::path& root,
                                             const std::string& split) {
  auto videos = data::read_split(root, split);
  for (const auto& v : videos) {
    if (!v.labels) {
      throw DataError("split '" + split + "' video '" + v.id + "' has no labels.vtns");
    }
  }
  return videos;
}

std::vector<data::VideoRecord> train_subset(const config::RunConfig& config,
                                            const LabelledData& data, int fraction) {
  data::DatasetSplit split;
  for (const auto& v : data.train) split.train_ids.push_back(v.id);
  for (const auto& v : data.val) split.val_ids.push_back(v.id);
  for (const auto& v : data.test) split.test_ids.push_back(v.id);
  split.validate();
  const auto keep = data::subsample_train(split, fraction, config.data.split_seed);
  std::vector<data::VideoRecord> out;
  for (const auto& v : data.train) {
    if (std::binary_search(keep.begin(), keep.end(), v.id)) out.push_back(v);
  }
  return out;
}

/// Averages per-video records across seeds (same video order in every run).
std::vector<MetricsRecord> average_runs(const std::vector<std::vector<MetricsRecord>>& runs) {
  std::vector<MetricsRecord> out = runs.front();
  for (std::size_t v = 0; v < out.size(); ++v) {
    ClassScores sum;
    std::map<std::int32_t, std::pair<ClassScores, int>> per;
    for (const auto& run : runs) {
      const auto& r = run.at(v);
      if (r.video_id != out[v].video_id) throw DataError("sweep: video order differs across seeds");
      sum.dsc += r.macro.dsc;
      sum.ji += r.macro.ji;
      sum.ppv += r.macro.ppv;
      sum.recall += r.macro.recall;
      for (const auto& [c, s] : r.per_class) {
        auto& [acc, n] = per[c];
        acc.dsc += s.dsc;
        acc.ji += s.ji;
        acc.ppv += s.ppv;
        acc.recall += s.recall;
        ++n;
      }
    }
    const double n = double(runs.size());
    out[v].macro = {sum.dsc / n, sum.ji / n, sum.ppv / n, sum.recall / n};
    out[v].per_class.clear();
    for (const auto& [c, p] : per) {
      const auto& [acc, k] = p;
      out[v].per_class[c] = {acc.dsc / k, acc.ji / k, acc.ppv / k, acc.recall / k};
    }
  }
  return out;
}

std::vector<double> dsc_values(std::span<const MetricsRecord> records) {
  std::vector<double> out;
  for (const auto& r : records) out.push_back(r.macro.dsc);
  return out;
}

std::string polyline_svg(const std::string& title, const std::string& x_label,
                         const std::vector<std::string>& names,
                         const std::vector<std::vector<std::pair<double, double>>>& series) {
  const double w = 640, h = 360, left = 60, right = 20, top = 30, bottom = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series)
    for (const auto& [x, y] : s) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (w - left - right); };
  auto py = [&](double y) { return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom); };
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\">" << title << "</text>\n"
      << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right << "\" y2=\""
      << h - bottom << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << h - bottom << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << w / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">" << x_label
      << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double y = y0 + (y1 - y0) * k / 4.0;
    svg << "<text x=\"" << left - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">"
        << fmt("%.3g", y) << "</text>\n";
    const double x = x0 + (x1 - x0) * k / 4.0;
    svg << "<text x=\"" << px(x) << "\" y=\"" << h - bottom + 16 << "\" text-anchor=\"middle\">"
        << fmt("%.3g", x) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* colour = colours[s % 5];
    svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
    for (const auto& [x, y] : series[s]) svg << fmt("%.2f", px(x)) << ',' << fmt("%.2f", py(y)) << ' ';
    svg << "\"/>\n";
    svg << "<text x=\"" << w - right - 4 << "\" y=\"" << top + 14 * (s + 1)
        << "\" text-anchor=\"end\" fill=\"" << colour << "\">" << names[s] << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

LabelledData load_labelled(const std::filesystem::path& root) {
  LabelledData d{read_labelled(root, "train"), read_labelled(root, "val"),
                 read_labelled(root, "test")};
  if (d.train.empty()) throw DataError(root.string() + ": no training videos");
  return d;
}

nets::CheckpointFile pretrain_encoder(const config::RunConfig& config,
                                      std::span<const data::VideoRecord> train, std::uint64_t seed,
                                      std::vector<train::StepLog>* logs) {
  train::Pretrainer trainer(config.model, config.grid(), config.pretrain_settings(), seed);
  auto run = trainer.run(train, config.pretrain_steps());
  if (logs) logs->insert(logs->end(), run.begin(), run.end());
  return trainer.checkpoint({{"config", config.to_json()}, {"seed", seed}});
}

std::vector<MetricsRecord> probe_and_score(const config::RunConfig& config,
                                           const nets::CheckpointFile* encoder,
                                           const LabelledData& data, int fraction,
                                           std::uint64_t seed,
                                           std::span<const data::VideoRecord> eval_split) {
  train::ProbeTrainer trainer(config.model, config.grid(), config.probe_settings(), seed);
  if (encoder) trainer.load_encoder(*encoder);
  const auto subset = train_subset(config, data, fraction);
  trainer.run(subset, config.probe_steps());
  return trainer.evaluate(eval_split);
}

std::vector<SweepRow> fraction_sweep(const config::RunConfig& config,
                                     std::span<const MethodSpec> methods, const LabelledData& data,
                                     std::span<const int> fractions,
                                     std::span<const std::uint64_t> seeds) {
  if (methods.empty() || fractions.empty() || seeds.empty()) {
    throw UsageError("fraction_sweep: methods, fractions and seeds must be non-empty");
  }
  for (const auto& m : methods) {
    if (m.encoders.size() > 1 && m.encoders.size() != seeds.size()) {
      throw UsageError("fraction_sweep: method '" + m.label + "' has " +
                       std::to_string(m.encoders.size()) + " encoders for " +
                       std::to_string(seeds.size()) + " seeds");
    }
    if (!m.baseline.empty() &&
        std::none_of(methods.begin(), methods.end(),
                     [&](const MethodSpec& o) { return o.label == m.baseline; })) {
      throw UsageError("fraction_sweep: unknown baseline '" + m.baseline + "'");
    }
  }
  std::vector<SweepRow> rows;
  for (const auto& m : methods) {
    for (const int fraction : fractions) {
      std::vector<std::vector<MetricsRecord>> runs;
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        const nets::CheckpointFile* enc = nullptr;
        if (m.encoders.size() == 1) enc = &m.encoders[0];
        if (m.encoders.size() > 1) enc = &m.encoders[s];
        runs.push_back(probe_and_score(config, enc, data, fraction, seeds[s], data.test));
        log::info("sweep ", m.label, " ", fraction, "% seed ", seeds[s], " DSC ",
                  summarize(runs.back()).dsc.mean);
      }
      SweepRow row;
      row.method = m.label;
      row.fraction = fraction;
      row.baseline = m.baseline;
      row.records = average_runs(runs);
      row.summary = summarize(row.records);
      rows.push_back(std::move(row));
    }
  }
  for (auto& row : rows) {
    if (row.baseline.empty()) continue;
    const auto base = std::find_if(rows.begin(), rows.end(), [&](const SweepRow& r) {
      return r.method == row.baseline && r.fraction == row.fraction;
    });
    if (row.records.size() < 2) {
      log::info("sweep: ", row.method, " has fewer than 2 test videos; no p-value");
      continue;
    }
    row.p_value = paired_significance(dsc_values(row.records), dsc_values(base->records));
  }
  return rows;
}

std::string method_label(std::size_t frozen_blocks, bool with_localisation) {
  std::string s = "V-JEPA";
  if (frozen_blocks > 0) s += " (" + std::to_string(frozen_blocks) + "b)";
  if (with_localisation) s += " + LL";
  return s;
}

AblationTable lambda_ablation(const config::RunConfig& config, std::span<const double> lambdas,
                              std::span<const std::size_t> frozen_variants,
                              const LabelledData& data, std::uint64_t seed) {
  if (lambdas.empty()) throw UsageError("lambda_ablation: empty lambda list");
  for (const double l : lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) {
      throw UsageError("lambda_ablation: lambda " + std::to_string(l) + " outside [0, 1]");
    }
  }
  if (data.val.empty()) throw DataError("lambda_ablation: no validation videos");
  AblationTable table;
  table.lambdas.assign(lambdas.begin(), lambdas.end());
  for (const auto frozen : frozen_variants) {
    AblationRow row{method_label(frozen, true), frozen, {}};
    for (const double l : lambdas) {
      auto cfg = config;
      cfg.loss.lambda = l;
      cfg.model.encoder.frozen_blocks = frozen;
      cfg.validate();
      const auto encoder = pretrain_encoder(cfg, data.train, seed);
      const auto records = probe_and_score(cfg, &encoder, data, cfg.data.fraction, seed, data.val);
      row.dsc.push_back(summarize(records).dsc.mean);
      log::info("ablation ", row.method, " lambda ", l, " val DSC ", row.dsc.back());
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "Method,%,DSC ± SD,JI ± SD,PPV ± SD,Recall ± SD,Baseline,p\n";
  for (const auto& r : rows) {
    out += r.method + "," + std::to_string(r.fraction) + "," + pm(r.summary.dsc) + "," +
           pm(r.summary.ji) + "," + pm(r.summary.ppv) + "," + pm(r.summary.recall) + "," +
           r.baseline + "," + (r.p_value ? fmt("%.3g", *r.p_value) : std::string()) + "\n";
  }
  return out;
}

std::string ablation_csv(const AblationTable& table) {
  std::string out = "Method";
  for (const double l : table.lambdas) out += "," + fmt("%g", l);
  out += "\n";
  for (const auto& r : table.rows) {
    out += r.method;
    for (const double d : r.dsc) out += "," + fmt("%.3f", d);
    out += "\n";
  }
  return out;
}

std::string metrics_csv(std::span<const MetricsRecord> records) {
  std::string out = "video,DSC,JI,PPV,Recall,DSC_SD,JI_SD,PPV_SD,Recall_SD\n";
  for (const auto& r : records) {
    out += r.video_id + "," + fmt("%.6f", r.macro.dsc) + "," + fmt("%.6f", r.macro.ji) + "," +
           fmt("%.6f", r.macro.ppv) + "," + fmt("%.6f", r.macro.recall) + ",,,,\n";
  }
  const auto s = summarize(records);
  out += "aggregate," + fmt("%.6f", s.dsc.mean) + "," + fmt("%.6f", s.ji.mean) + "," +
         fmt("%.6f", s.ppv.mean) + "," + fmt("%.6f", s.recall.mean) + "," + fmt("%.6f", s.dsc.sd) +
         "," + fmt("%.6f", s.ji.sd) + "," + fmt("%.6f", s.ppv.sd) + "," + fmt("%.6f", s.recall.sd) +
         "\n";
  return out;
}

nlohmann::json records_json(std::span<const MetricsRecord> records) {
  auto scores_json = [](const ClassScores& s) {
    return nlohmann::json{{"dsc", s.dsc}, {"ji", s.ji}, {"ppv", s.ppv}, {"recall", s.recall}};
  };
  nlohmann::json videos = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [c, s] : r.per_class) per[std::to_string(c)] = scores_json(s);
    videos.push_back({{"video", r.video_id}, {"macro", scores_json(r.macro)}, {"per_class", per}});
  }
  const auto s = summarize(records);
  auto ms = [](const MeanSd& m) { return nlohmann::json{{"mean", m.mean}, {"sd", m.sd}}; };
  return {{"videos", videos},
          {"aggregate",
           {{"dsc", ms(s.dsc)}, {"ji", ms(s.ji)}, {"ppv", ms(s.ppv)}, {"recall", ms(s.recall)}}}};
}

nlohmann::json sweep_json(std::span<const SweepRow> rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j = records_json(r.records);
    j["method"] = r.method;
    j["fraction"] = r.fraction;
    j["baseline"] = r.baseline;
    j["p"] = r.p_value ? nlohmann::json(*r.p_value) : nlohmann::json(nullptr);
    out.push_back(std::move(j));
  }
  return out;
}

std::string loss_svg(std::span<const train::StepLog> logs) {
  std::vector<std::vector<std::pair<double, double>>> series(3);
  for (const auto& l : logs) {
    series[0].emplace_back(double(l.step), l.loss.combined);
    series[1].emplace_back(double(l.step), l.loss.jepa);
    series[2].emplace_back(double(l.step), l.loss.local);
  }
  return polyline_svg("pretraining loss", "step", {"combined", "jepa", "local"}, series);
}

std::string ablation_svg(const AblationTable& table) {
  std::vector<std::string> names;
  std::vector<std::vector<std::pair<double, double>>> series;
  for (const auto& r : table.rows) {
    names.push_back(r.method);
    auto& s = series.emplace_back();
    for (std::size_t k = 0; k < r.dsc.size(); ++k) s.emplace_back(table.lambdas[k], r.dsc[k]);
    std::sort(s.begin(), s.end());
  }
  return polyline_svg("validation DSC vs lambda", "lambda", names, series);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace locjepa::eval
