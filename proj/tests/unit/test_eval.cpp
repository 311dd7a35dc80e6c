#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "locjepa/common/error.hpp"
#include "locjepa/common/rng.hpp"
#include "locjepa/data/synthetic.hpp"
#include "locjepa/eval/harness.hpp"
#include "locjepa/eval/metrics.hpp"

using namespace locjepa;
using namespace locjepa::eval;
namespace fs = std::filesystem;

namespace {

Tensor<std::int32_t> mask(Shape shape, std::vector<std::int32_t> v) {
  return Tensor<std::int32_t>(std::move(shape), std::move(v));
}

Confusion brute(const Tensor<std::int32_t>& p, const Tensor<std::int32_t>& t, std::int32_t c) {
  Confusion out;
  for (std::size_t y = 0; y < p.dim(0); ++y)
    for (std::size_t x = 0; x < p.dim(1); ++x) {
      const bool a = p.data[y * p.dim(1) + x] == c, b = t.data[y * p.dim(1) + x] == c;
      out.tp += a && b;
      out.fp += a && !b;
      out.fn += !a && b;
    }
  return out;
}

}  // namespace

TEST(Confusion, Examples) {
  const auto t = mask({4, 4}, {0, 1, 1, 0,  //
                               0, 1, 0, 0,  //
                               0, 0, 0, 0,  //
                               0, 0, 0, 0});
  EXPECT_EQ(confusion_counts(t, t, 1), (Confusion{3, 0, 0}));
  const auto bg = mask({4, 4}, std::vector<std::int32_t>(16, 0));
  EXPECT_EQ(confusion_counts(bg, t, 1), (Confusion{0, 0, 3}));
  // 2 overlap, 1 extra predicted, 1 extra true
  const auto p = mask({4, 4}, {0, 1, 1, 1,  //
                               0, 0, 0, 0,  //
                               0, 0, 0, 0,  //
                               0, 0, 0, 0});
  EXPECT_EQ(confusion_counts(p, t, 1), (Confusion{2, 1, 1}));
  EXPECT_THROW(confusion_counts(p, mask({2, 2}, {0, 0, 0, 0}), 1), Error);
}

TEST(Scores, Formulas) {
  const Confusion c{2, 1, 1};
  EXPECT_DOUBLE_EQ(dsc(c), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(ji(c), 0.5);
  EXPECT_DOUBLE_EQ(ppv(c), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(recall(c), 2.0 / 3.0);
  const auto perfect = scores({5, 0, 0});
  EXPECT_EQ(perfect.dsc, 1.0);
  EXPECT_EQ(perfect.ji, 1.0);
  EXPECT_EQ(perfect.ppv, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
}

TEST(Scores, EmptyConventions) {
  const auto both = scores({0, 0, 0});
  EXPECT_EQ(both.dsc, 1.0);
  EXPECT_EQ(both.ppv, 1.0);
  const auto no_pred = scores({0, 0, 4});
  EXPECT_EQ(no_pred.ppv, 0.0);
  EXPECT_EQ(no_pred.recall, 0.0);
  EXPECT_EQ(no_pred.dsc, 0.0);
  const auto no_truth = scores({0, 3, 0});
  EXPECT_EQ(no_truth.recall, 0.0);
  EXPECT_EQ(no_truth.ppv, 0.0);
}

TEST(Scores, RandomMasksMatchBruteForceAndIdentity) {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    Tensor<std::int32_t> p({8, 8}), t({8, 8});
    for (auto& v : p.data) v = std::int32_t(rng.index(4));
    for (auto& v : t.data) v = std::int32_t(rng.index(4));
    for (std::int32_t c = 1; c <= 3; ++c) {
      const auto fast = confusion_counts(p, t, c);
      EXPECT_EQ(fast, brute(p, t, c));
      const auto s = scores(fast);
      EXPECT_NEAR(s.dsc, 2 * s.ji / (1 + s.ji), 1e-12);
      for (double v : {s.dsc, s.ji, s.ppv, s.recall}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
  }
}

TEST(Record, MacroOverPresentForegroundClasses) {
  const Confusion counts[] = {{2, 1, 1}, {0, 0, 0}, {3, 0, 0}};
  const auto r = make_record("v", counts);
  EXPECT_EQ(r.per_class.size(), 2u);
  EXPECT_TRUE(r.per_class.count(1));
  EXPECT_TRUE(r.per_class.count(3));
  EXPECT_DOUBLE_EQ(r.macro.dsc, (2.0 / 3.0 + 1.0) / 2.0);
  const Confusion none[] = {{0, 0, 0}, {0, 0, 0}};
  EXPECT_EQ(make_record("e", none).macro.dsc, 1.0);
}

TEST(Record, ClassCountsSkipBackground) {
  const auto t = mask({2, 2}, {0, 1, 2, 2});
  const auto p = mask({2, 2}, {1, 1, 2, 0});
  const auto c = class_counts(p, t, 3);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0], (Confusion{1, 1, 0}));
  EXPECT_EQ(c[1], (Confusion{1, 0, 1}));
  EXPECT_EQ(c[2], (Confusion{0, 0, 0}));
  const auto truth_as_pred = make_record("t", class_counts(t, t, 3));
  EXPECT_EQ(truth_as_pred.macro.dsc, 1.0);
  EXPECT_EQ(truth_as_pred.macro.recall, 1.0);
}

TEST(Summary, MeanAndSampleSd) {
  const double v[] = {1, 2, 3, 4};
  const auto m = mean_sd(v);
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_DOUBLE_EQ(m.sd, std::sqrt(5.0 / 3.0));
  const double one[] = {7};
  EXPECT_EQ(mean_sd(one).sd, 0.0);
}

TEST(Significance, IdenticalInputsGiveOne) {
  const double a[] = {0.5, 0.6, 0.7};
  EXPECT_EQ(paired_significance(a, a), 1.0);
}

TEST(Significance, ReferenceValue) {
  // diffs (1,2,3,4,5): t = 3 sqrt(5) / sqrt(2.5), df 4.
  // Two-sided p from scipy.stats.ttest_rel: 0.013235599563682695
  const double a[] = {1, 2, 3, 4, 5};
  const double b[] = {0, 0, 0, 0, 0};
  EXPECT_NEAR(paired_significance(a, b), 0.013235599563682695, 1e-12);
  // scipy.stats.ttest_rel([.8,.7,.9,.6], [.75,.72,.8,.5]) -> 0.1359933560146752
  const double c[] = {0.8, 0.7, 0.9, 0.6};
  const double d[] = {0.75, 0.72, 0.8, 0.5};
  EXPECT_NEAR(paired_significance(c, d), 0.1359933560146752, 1e-12);
}

TEST(Significance, ConstantShiftWithJitter) {
  const double a[] = {0.5, 0.6, 0.7, 0.8};
  const double b[] = {0.4, 0.5 + 1e-4, 0.6 - 1e-4, 0.7};
  EXPECT_LT(paired_significance(a, b), 0.01);
  const double c[] = {0.4, 0.5, 0.6, 0.7};
  EXPECT_EQ(paired_significance(a, c) <= 1e-6, true);
}

TEST(Significance, SymmetricAndValidated) {
  Rng rng(2);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> a(6), b(6);
    for (auto& x : a) x = rng.uniform();
    for (auto& x : b) x = rng.uniform();
    const double p = paired_significance(a, b);
    EXPECT_EQ(p, paired_significance(b, a));
    EXPECT_GT(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
  const double one[] = {1.0};
  EXPECT_THROW(paired_significance(one, one), Error);
  const double two[] = {1.0, 2.0};
  const double three[] = {1.0, 2.0, 3.0};
  EXPECT_THROW(paired_significance(two, three), Error);
}

TEST(Reports, SweepCsvLayout) {
  SweepRow row;
  row.method = "V-JEPA + LL";
  row.fraction = 10;
  row.summary.dsc = {0.81234, 0.0456};
  row.baseline = "V-JEPA";
  row.p_value = 0.0132;
  const SweepRow rows[] = {row};
  const auto csv = sweep_csv(rows);
  EXPECT_EQ(csv,
            "Method,%,DSC ± SD,JI ± SD,PPV ± SD,Recall ± SD,Baseline,p\n"
            "V-JEPA + LL,10,0.812 ± 0.046,0.000 ± 0.000,0.000 ± 0.000,0.000 ± 0.000,V-JEPA,0.0132\n");
}

TEST(Reports, AblationCsvLayout) {
  AblationTable t{{0.9, 0.75, 0.5, 0.25}, {{"V-JEPA + LL", 0, {0.1, 0.2, 0.3, 0.4}}}};
  EXPECT_EQ(ablation_csv(t), "Method,0.9,0.75,0.5,0.25\nV-JEPA + LL,0.100,0.200,0.300,0.400\n");
  EXPECT_EQ(method_label(2, true), "V-JEPA (2b) + LL");
  EXPECT_EQ(method_label(0, false), "V-JEPA");
}

TEST(Reports, MetricsCsvHasAggregateRow) {
  const Confusion c1[] = {{1, 0, 0}};
  const Confusion c2[] = {{1, 1, 0}};
  const MetricsRecord recs[] = {make_record("a", c1), make_record("b", c2)};
  const auto csv = metrics_csv(recs);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);  // header + 2 + aggregate
  EXPECT_NE(csv.find("aggregate,"), std::string::npos);
  const auto j = records_json(recs);
  EXPECT_EQ(j.dump(), records_json(recs).dump());
}

// Harness runs on a tiny generated dataset.
class HarnessTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "locjepa_eval_harness";
    fs::remove_all(root_);
    data::PhantomParams p;
    p.frames = 16;
    const char* splits[] = {"train", "train", "train", "train", "val", "test", "test"};
    for (std::size_t k = 0; k < 7; ++k) {
      const auto v = data::generate_synthetic_video(k, p);
      data::write_video(root_, splits[k], {"video_" + std::to_string(k), v.frames, v.labels});
    }
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static config::RunConfig tiny_config() {
    auto c = config::RunConfig::defaults(config::Profile::desk);
    c.data.root = root_.string();
    c.tokenizer.clip_frames = 4;
    c.tokenizer.frame_step = 2;
    c.model.encoder = {1, 16, 2, 2.0, 0};
    c.loss.n_pairs = 10;
    c.schedule.batch_size = 2;
    c.schedule.pretrain_epochs = 1;
    c.schedule.warmup_epochs = 0.1;
    c.schedule.probe_batch_size = 2;
    c.schedule.probe_epochs = 2;
    c.validate();
    return c;
  }

  static fs::path root_;
};
fs::path HarnessTest::root_;

TEST_F(HarnessTest, SweepRowsAndDeterminism) {
  const auto cfg = tiny_config();
  const auto data = load_labelled(root_);
  EXPECT_EQ(data.train.size(), 4u);
  const auto enc = pretrain_encoder(cfg, data.train, 1);
  std::vector<MethodSpec> methods{{"Random init", {}, ""},
                                  {"A", {enc}, "Random init"},
                                  {"B", {enc}, "Random init"}};
  const int fractions[] = {100, 50};
  const std::uint64_t seeds[] = {3};
  const auto rows = fraction_sweep(cfg, methods, data, fractions, seeds);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[2].method, "A");
  EXPECT_EQ(rows[3].fraction, 50);
  EXPECT_TRUE(rows[2].p_value.has_value());
  EXPECT_FALSE(rows[0].p_value.has_value());
  EXPECT_EQ(rows[2].records.size(), data.test.size());
  // identical method twice -> identical rows
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(rows[2 + k].summary.dsc.mean, rows[4 + k].summary.dsc.mean);
    EXPECT_EQ(rows[2 + k].summary.recall.sd, rows[4 + k].summary.recall.sd);
  }
  const auto csv = sweep_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);

  methods[1].baseline = "nope";
  EXPECT_THROW(fraction_sweep(cfg, methods, data, fractions, seeds), UsageError);
}

TEST_F(HarnessTest, AblationShapeAndDeterminism) {
  const auto cfg = tiny_config();
  const auto data = load_labelled(root_);
  const double lambdas[] = {0.9, 0.25};
  const std::size_t frozen[] = {0};
  const auto a = lambda_ablation(cfg, lambdas, frozen, data, 5);
  ASSERT_EQ(a.rows.size(), 1u);
  EXPECT_EQ(a.rows[0].dsc.size(), 2u);
  EXPECT_EQ(a.lambdas, (std::vector<double>{0.9, 0.25}));
  const auto b = lambda_ablation(cfg, lambdas, frozen, data, 5);
  EXPECT_EQ(ablation_csv(a), ablation_csv(b));
  const double bad[] = {1.5};
  EXPECT_THROW(lambda_ablation(cfg, bad, frozen, data, 5), UsageError);
  EXPECT_THROW(lambda_ablation(cfg, {}, frozen, data, 5), UsageError);
}
