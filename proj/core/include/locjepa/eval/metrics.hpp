#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "locjepa/diff/tensor.hpp"

namespace locjepa::eval {

struct Confusion {
  std::uint64_t tp = 0, fp = 0, fn = 0;

  Confusion& operator+=(const Confusion& o);
  bool operator==(const Confusion&) const = default;
};

/// Pixel counts of class `c` over the whole volume; shapes must agree.
Confusion confusion_counts(std::span<const std::int32_t> pred, std::span<const std::int32_t> truth,
                           std::int32_t c);
Confusion confusion_counts(const Tensor<std::int32_t>& pred, const Tensor<std::int32_t>& truth,
                           std::int32_t c);

/// Each returns 1.0 when prediction and truth are both empty for the class,
/// and 0.0 when only its own denominator is empty.
double dsc(const Confusion& c);
double ji(const Confusion& c);
double ppv(const Confusion& c);
double recall(const Confusion& c);

struct ClassScores {
  double dsc = 0, ji = 0, ppv = 0, recall = 0;
};
ClassScores scores(const Confusion& c);

struct MetricsRecord {
  std::string video_id;
  std::map<std::int32_t, ClassScores> per_class;  // foreground classes present in pred or truth
  ClassScores macro;
};

/// Per-class counts for classes 1..num_classes, accumulated by callers
/// across clips of one video.
std::vector<Confusion> class_counts(const Tensor<std::int32_t>& pred,
                                    const Tensor<std::int32_t>& truth, std::int32_t num_classes);

/// Macro average over foreground classes that appear in prediction or truth.
/// A video with no foreground anywhere scores 1.0.
MetricsRecord make_record(const std::string& video_id, std::span<const Confusion> counts);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1); 0 for n < 2
};
MeanSd mean_sd(std::span<const double> values);

struct MetricsSummary {
  MeanSd dsc, ji, ppv, recall;
};
MetricsSummary summarize(std::span<const MetricsRecord> records);

/// Two-sided paired t-test on a - b. Identical inputs give 1; zero-variance
/// differences with a nonzero mean give 0.
double paired_significance(std::span<const double> a, std::span<const double> b);

}  // namespace locjepa::eval
