#include "locjepa/eval/metrics.hpp"

#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "locjepa/common/error.hpp"

namespace locjepa::eval {
namespace {

double ratio(std::uint64_t num, std::uint64_t den, bool both_empty) {
  if (den == 0) return both_empty ? 1.0 : 0.0;
  return double(num) / double(den);
}

bool both_empty(const Confusion& c) { return c.tp == 0 && c.fp == 0 && c.fn == 0; }

}  // namespace

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

Confusion confusion_counts(std::span<const std::int32_t> pred, std::span<const std::int32_t> truth,
                           std::int32_t c) {
  if (pred.size() != truth.size()) {
    throw ShapeError("confusion_counts: " + std::to_string(pred.size()) + " predicted pixels vs " +
                     std::to_string(truth.size()) + " labelled");
  }
  Confusion out;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const bool p = pred[k] == c;
    const bool t = truth[k] == c;
    out.tp += p && t;
    out.fp += p && !t;
    out.fn += !p && t;
  }
  return out;
}

Confusion confusion_counts(const Tensor<std::int32_t>& pred, const Tensor<std::int32_t>& truth,
                           std::int32_t c) {
  if (pred.shape != truth.shape) {
    throw ShapeError("confusion_counts: shape " + to_string(pred.shape) + " vs " +
                     to_string(truth.shape));
  }
  return confusion_counts(pred.values(), truth.values(), c);
}

double dsc(const Confusion& c) { return ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, both_empty(c)); }
double ji(const Confusion& c) { return ratio(c.tp, c.tp + c.fp + c.fn, both_empty(c)); }
double ppv(const Confusion& c) { return ratio(c.tp, c.tp + c.fp, both_empty(c)); }
double recall(const Confusion& c) { return ratio(c.tp, c.tp + c.fn, both_empty(c)); }

ClassScores scores(const Confusion& c) { return {dsc(c), ji(c), ppv(c), recall(c)}; }

std::vector<Confusion> class_counts(const Tensor<std::int32_t>& pred,
                                    const Tensor<std::int32_t>& truth, std::int32_t num_classes) {
  if (pred.shape != truth.shape) {
    throw ShapeError("class_counts: shape " + to_string(pred.shape) + " vs " +
                     to_string(truth.shape));
  }
  std::vector<Confusion> out(static_cast<std::size_t>(num_classes));
  for (std::size_t k = 0; k < pred.data.size(); ++k) {
    const auto p = pred.data[k];
    const auto t = truth.data[k];
    if (p == t) {
      if (p >= 1 && p <= num_classes) ++out[p - 1].tp;
      continue;
    }
    if (p >= 1 && p <= num_classes) ++out[p - 1].fp;
    if (t >= 1 && t <= num_classes) ++out[t - 1].fn;
  }
  return out;
}

MetricsRecord make_record(const std::string& video_id, std::span<const Confusion> counts) {
  MetricsRecord r;
  r.video_id = video_id;
  ClassScores sum;
  std::size_t n = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (both_empty(counts[c])) continue;
    const auto s = scores(counts[c]);
    r.per_class[static_cast<std::int32_t>(c + 1)] = s;
    sum.dsc += s.dsc;
    sum.ji += s.ji;
    sum.ppv += s.ppv;
    sum.recall += s.recall;
    ++n;
  }
  if (n == 0) {
    r.macro = {1.0, 1.0, 1.0, 1.0};
  } else {
    r.macro = {sum.dsc / n, sum.ji / n, sum.ppv / n, sum.recall / n};
  }
  return r;
}

MeanSd mean_sd(std::span<const double> values) {
  MeanSd out;
  if (values.empty()) return out;
  for (auto v : values) out.mean += v;
  out.mean /= double(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (auto v : values) ss += (v - out.mean) * (v - out.mean);
  out.sd = std::sqrt(ss / double(values.size() - 1));
  return out;
}

MetricsSummary summarize(std::span<const MetricsRecord> records) {
  std::vector<double> d, j, p, r;
  for (const auto& rec : records) {
    d.push_back(rec.macro.dsc);
    j.push_back(rec.macro.ji);
    p.push_back(rec.macro.ppv);
    r.push_back(rec.macro.recall);
  }
  return {mean_sd(d), mean_sd(j), mean_sd(p), mean_sd(r)};
}

double paired_significance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("paired_significance: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + " values");
  }
  if (a.size() < 2) throw ShapeError("paired_significance: need at least 2 pairs");
  std::vector<double> diff(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) diff[k] = a[k] - b[k];
  const auto [mean, sd] = mean_sd(diff);
  if (sd == 0.0) return mean == 0.0 ? 1.0 : 0.0;
  const double t = mean / (sd / std::sqrt(double(diff.size())));
  const boost::math::students_t dist(double(diff.size() - 1));
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
  return std::min(1.0, p);
}

}  // namespace locjepa::eval
