#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "locjepa/config/run_config.hpp"
#include "locjepa/data/dataset.hpp"
#include "locjepa/eval/metrics.hpp"
#include "locjepa/nets/checkpoint.hpp"

namespace locjepa::eval {

/// Labelled train/val/test videos of a dataset directory.
struct LabelledData {
  std::vector<data::VideoRecord> train, val, test;
};
LabelledData load_labelled(const std::filesystem::path& root);

/// Pretrains an encoder on the frames of `train` with `config` (lambda and
/// frozen blocks included). Logs are appended to `logs` when given.
nets::CheckpointFile pretrain_encoder(const config::RunConfig& config,
                                      std::span<const data::VideoRecord> train, std::uint64_t seed,
                                      std::vector<train::StepLog>* logs = nullptr);

/// Trains a probe on the `fraction` subset of `data.train` on top of `encoder`
/// (random init when null) and scores every video of `eval_split`.
std::vector<MetricsRecord> probe_and_score(const config::RunConfig& config,
                                           const nets::CheckpointFile* encoder,
                                           const LabelledData& data, int fraction,
                                           std::uint64_t seed,
                                           std::span<const data::VideoRecord> eval_split);

struct MethodSpec {
  std::string label;
  /// Empty: random-init encoder. One entry: shared by all seeds. Otherwise one per seed.
  std::vector<nets::CheckpointFile> encoders;
  /// Label of the method this one is tested against ("" for none).
  std::string baseline;
};

struct SweepRow {
  std::string method;
  int fraction = 100;
  MetricsSummary summary;
  std::string baseline;
  std::optional<double> p_value;
  std::vector<MetricsRecord> records;  // per test video, averaged over seeds
};

/// One probe per (method, fraction, seed), evaluated on the test split.
/// Rows are ordered by method, then fraction as given.
std::vector<SweepRow> fraction_sweep(const config::RunConfig& config,
                                     std::span<const MethodSpec> methods, const LabelledData& data,
                                     std::span<const int> fractions,
                                     std::span<const std::uint64_t> seeds);

struct AblationRow {
  std::string method;
  std::size_t frozen_blocks = 0;
  std::vector<double> dsc;  // validation DSC, one per lambda
};

struct AblationTable {
  std::vector<double> lambdas;
  std::vector<AblationRow> rows;
};

/// Pretrain and probe once per (frozen-block variant, lambda); reports mean
/// validation DSC.
AblationTable lambda_ablation(const config::RunConfig& config, std::span<const double> lambdas,
                              std::span<const std::size_t> frozen_variants,
                              const LabelledData& data, std::uint64_t seed);

std::string method_label(std::size_t frozen_blocks, bool with_localisation);

// Reports. CSV numbers use fixed precision so reruns are byte-identical.
std::string sweep_csv(std::span<const SweepRow> rows);
std::string ablation_csv(const AblationTable& table);
/// One row per video plus a final aggregate row.
std::string metrics_csv(std::span<const MetricsRecord> records);
nlohmann::json records_json(std::span<const MetricsRecord> records);
nlohmann::json sweep_json(std::span<const SweepRow> rows);

/// Static line plots.
std::string loss_svg(std::span<const train::StepLog> logs);
std::string ablation_svg(const AblationTable& table);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace locjepa::eval
