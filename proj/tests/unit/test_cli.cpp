#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "locjepa/cli/app.hpp"
#include "locjepa/data/tensor_io.hpp"
#include "locjepa/nets/checkpoint.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = locjepa::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<json> jsonl(const fs::path& p) {
  std::vector<json> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) out.push_back(json::parse(line));
  return out;
}

std::size_t lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

}  // namespace

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "locjepa_cli_test";
    fs::remove_all(root_);
    fs::create_directories(root_);
    config_ = (root_ / "tiny.json").string();
    std::ofstream(config_) << json{
        {"model", {{"depth", 2}, {"embed_dim", 16}, {"heads", 2}}},
        {"tokenizer", {{"frame_step", 2}}},
        {"loss", {{"n_pairs", 10}}},
        {"schedule",
         {{"batch_size", 1}, {"pretrain_epochs", 0.4}, {"warmup_epochs", 0.1},
          {"probe_batch_size", 1}, {"probe_epochs", 0.3}}}}
        .dump();
    data_ = (root_ / "data").string();
    ASSERT_EQ(cli({"generate-data", "--out", data_, "--videos", "6", "--frames", "16",
                   "--seed", "1"})
                  .code,
              0);
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static std::vector<std::string> common() { return {"--config", config_, "--data", data_}; }
  static std::vector<std::string> with(std::vector<std::string> head,
                                       std::vector<std::string> tail = {}) {
    auto c = common();
    head.insert(head.end(), c.begin(), c.end());
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
  }
  static std::string pretrained() {
    static const std::string path = [] {
      const auto dir = (root_ / "pre").string();
      EXPECT_EQ(cli(with({"pretrain", "--out", dir})).code, 0);
      return dir + "/checkpoint.vckp";
    }();
    return path;
  }

  static fs::path root_;
  static std::string config_, data_;
};
fs::path CliTest::root_;
std::string CliTest::config_, CliTest::data_;

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"bogus"}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
  EXPECT_EQ(cli(with({"pretrain"}, {"--lambda", "1.5", "--out", (root_ / "x").string()})).code, 2);
  EXPECT_EQ(cli(with({"pretrain"}, {"--mask", "stripes"})).code, 2);
  EXPECT_EQ(cli({"pretrain", "--profile", "huge"}).code, 2);
  const auto bad = (root_ / "bad.json").string();
  std::ofstream(bad) << R"({"loss": {"lamda": 0.5}})";
  const auto r = cli({"pretrain", "--config", bad, "--data", data_});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("loss.lamda"), std::string::npos);
}

TEST_F(CliTest, GenerateDataLayoutAndDeterminism) {
  const auto a = root_ / "gen_a", b = root_ / "gen_b";
  for (const auto& d : {a, b}) {
    ASSERT_EQ(cli({"generate-data", "--out", d.string(), "--videos", "12", "--frames", "8",
                   "--seed", "5"})
                  .code,
              0);
  }
  std::size_t dirs = 0;
  for (const auto* split : {"train", "val", "test"}) {
    for (const auto& e : fs::directory_iterator(a / split)) {
      dirs += e.is_directory();
      for (const auto& f : fs::directory_iterator(e.path())) {
        const auto rel = fs::relative(f.path(), a);
        EXPECT_EQ(slurp(f.path()), slurp(b / rel)) << rel;
      }
    }
  }
  EXPECT_EQ(dirs, 12u);
  EXPECT_EQ(slurp(a / "manifest.json"), slurp(b / "manifest.json"));
  const auto m = json::parse(slurp(a / "manifest.json"));
  EXPECT_EQ(m.at("videos"), 12);

  const auto again = cli({"generate-data", "--out", a.string(), "--videos", "12"});
  EXPECT_EQ(again.code, 3);
  EXPECT_EQ(cli({"generate-data", "--out", a.string(), "--videos", "3", "--frames", "8",
                 "--force"})
                .code,
            0);
  EXPECT_EQ(cli({"generate-data", "--out", (root_ / "g").string(), "--size", "big"}).code, 2);
}

TEST_F(CliTest, IndivisibleSizeRejectedDownstream) {
  const auto d = (root_ / "odd").string();
  ASSERT_EQ(cli({"generate-data", "--out", d, "--videos", "3", "--frames", "16", "--size",
                 "30x30"})
                .code,
            0);
  auto j = json::parse(slurp(config_));
  j["data"] = {{"height", 30}, {"width", 30}};
  std::ofstream(root_ / "odd.json") << j.dump();
  const auto r = cli({"pretrain", "--config", (root_ / "odd.json").string(), "--data", d, "--out",
                      (root_ / "odd_run").string()});
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_NE(r.err.find("H (height)"), std::string::npos) << r.err;
}

TEST_F(CliTest, PretrainDefaultsAndLambdaOne) {
  pretrained();
  const auto log = jsonl(root_ / "pre" / "pretrain_log.jsonl");
  ASSERT_EQ(log.size(), 4u);
  for (const auto& l : log) EXPECT_EQ(l.at("lambda"), 0.25);
  EXPECT_TRUE(fs::exists(root_ / "pre" / "loss.svg"));
  EXPECT_TRUE(fs::exists(root_ / "pre" / "config.json"));

  const auto dir = root_ / "pre_l1";
  ASSERT_EQ(cli(with({"pretrain", "--out", dir.string(), "--lambda", "1"})).code, 0);
  for (const auto& l : jsonl(dir / "pretrain_log.jsonl")) {
    EXPECT_EQ(l.at("combined"), l.at("jepa"));
    EXPECT_GT(l.at("local").get<double>(), 0.0);
  }
}

TEST_F(CliTest, FullyFrozenEncoderStaysBitwise) {
  const auto dir = root_ / "frozen";
  ASSERT_EQ(cli(with({"pretrain", "--out", dir.string(), "--frozen-blocks", "2", "--save-every",
                      "1"}))
                .code,
            0);
  const auto first = locjepa::nets::read_checkpoint(dir / "checkpoint_step1.vckp");
  const auto last = locjepa::nets::read_checkpoint(dir / "checkpoint.vckp");
  std::size_t compared = 0;
  for (const auto& [name, t] : last.tensors) {
    if (name.rfind("online.encoder.", 0) != 0) continue;
    ++compared;
    const auto* before = first.find(name);
    ASSERT_NE(before, nullptr) << name;
    EXPECT_EQ(locjepa::data::encode_tensor(t), locjepa::data::encode_tensor(*before)) << name;
  }
  EXPECT_GT(compared, 0u);
  EXPECT_EQ(cli(with({"pretrain", "--out", dir.string(), "--frozen-blocks", "3"})).code, 2);
}

TEST_F(CliTest, ResumeMatchesUnbrokenLog) {
  const auto dir = root_ / "resume";
  ASSERT_EQ(cli(with({"pretrain", "--out", dir.string(), "--save-every", "2"})).code, 0);
  const auto full = slurp(dir / "pretrain_log.jsonl");
  ASSERT_EQ(cli(with({"pretrain", "--out", dir.string(), "--resume",
                      (dir / "checkpoint_step2.vckp").string()}))
                .code,
            0);
  EXPECT_EQ(slurp(dir / "pretrain_log.jsonl"), full);
}

TEST_F(CliTest, ProbeFlags) {
  EXPECT_EQ(cli(with({"probe", "--out", (root_ / "p0").string()})).code, 2);
  EXPECT_EQ(cli(with({"probe", "--random-init", "--encoder-ckpt", pretrained()})).code, 2);
  EXPECT_EQ(cli(with({"probe", "--random-init", "--fraction", "0"})).code, 2);
  EXPECT_EQ(cli(with({"probe", "--encoder-ckpt", (root_ / "nope.vckp").string()})).code, 3);

  const auto dir = root_ / "probe_default";
  ASSERT_EQ(cli(with({"probe", "--random-init", "--out", dir.string()})).code, 0);
  const auto ckpt = locjepa::nets::read_checkpoint(dir / "probe.vckp");
  EXPECT_EQ(ckpt.manifest.at("config").at("data").at("fraction"), 100);
  EXPECT_EQ(ckpt.manifest.at("train_ids").size(), 4u);
  EXPECT_EQ(ckpt.manifest.at("encoder"), "random-init");
  const auto log = jsonl(dir / "probe_log.jsonl");
  ASSERT_FALSE(log.empty());
  EXPECT_TRUE(log.back().contains("val_dsc"));
}

TEST_F(CliTest, EvaluateReportsAreStable) {
  const auto dir = root_ / "probe_eval";
  ASSERT_EQ(cli(with({"probe", "--encoder-ckpt", pretrained(), "--fraction", "50", "--out",
                      dir.string()}))
                .code,
            0);
  const auto probe = (dir / "probe.vckp").string();
  const auto csv1 = (root_ / "r1.csv").string(), csv2 = (root_ / "r2.csv").string();
  const auto js = (root_ / "r.json").string();
  ASSERT_EQ(cli({"evaluate", "--probe-ckpt", probe, "--data", data_, "--report", csv1, "--report",
                 js})
                .code,
            0);
  ASSERT_EQ(cli({"evaluate", "--probe-ckpt", probe, "--data", data_, "--report", csv2}).code, 0);
  const auto text = slurp(csv1);
  EXPECT_EQ(text, slurp(csv2));
  std::size_t tests = 0;
  for (const auto& e : fs::directory_iterator(fs::path(data_) / "test")) tests += e.is_directory();
  EXPECT_EQ(lines(text), tests + 2);  // header + videos + aggregate
  EXPECT_TRUE(json::parse(slurp(js)).is_object() || json::parse(slurp(js)).is_array());

  EXPECT_EQ(cli({"evaluate", "--probe-ckpt", pretrained(), "--data", data_}).code, 3);
  EXPECT_EQ(cli({"evaluate", "--probe-ckpt", probe, "--data", data_, "--split", "nope"}).code, 3);
  EXPECT_EQ(cli({"evaluate"}).code, 2);
}

TEST_F(CliTest, EvaluateUnlabelledSplit) {
  const auto d = root_ / "unlabelled";
  fs::copy(data_, d, fs::copy_options::recursive);
  for (const auto& e : fs::directory_iterator(d / "test")) {
    for (const auto& f : fs::directory_iterator(e.path())) {
      if (f.path().filename().string().find("label") != std::string::npos) fs::remove(f.path());
    }
  }
  const auto dir = root_ / "probe_unl";
  ASSERT_EQ(cli(with({"probe", "--random-init", "--out", dir.string()})).code, 0);
  const auto r =
      cli({"evaluate", "--probe-ckpt", (dir / "probe.vckp").string(), "--data", d.string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("unlabelled"), std::string::npos) << r.err;
}

TEST_F(CliTest, AblateTableShape) {
  EXPECT_EQ(cli(with({"ablate", "--lambdas", ","})).code, 2);
  EXPECT_EQ(cli(with({"ablate", "--lambdas", "2"})).code, 2);
  const auto a = cli(with({"ablate", "--lambdas", "0.5", "--out", (root_ / "abl1").string()}));
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out.substr(0, a.out.find('\n')), "Method,0.5");
  EXPECT_EQ(slurp(root_ / "abl1" / "ablation.csv"), a.out);
  const auto b = cli(with({"ablate", "--lambdas", "0.5", "--out", (root_ / "abl2").string()}));
  EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, SweepChecksCheckpointsFirst) {
  const auto missing = cli(with({"sweep", "--method", "R=random", "--method",
                                 "V=" + (root_ / "nope.vckp").string()}));
  EXPECT_EQ(missing.code, 3);
  EXPECT_EQ(cli(with({"sweep", "--method", "R"})).code, 2);
  EXPECT_EQ(cli(with({"sweep", "--method", "R=random", "--baseline", "Q=R"})).code, 2);
  const auto r = cli(with({"sweep", "--method", "R=random", "--method", "V=" + pretrained(),
                           "--baseline", "V=R", "--fractions", "50", "--seeds", "1,2", "--out",
                           (root_ / "sweep").string()}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(r.out), 3u);
  EXPECT_TRUE(fs::exists(root_ / "sweep" / "sweep.json"));
}

TEST_F(CliTest, NonFiniteLossExitsFour) {
  const auto cfg = (root_ / "explode.json").string();
  auto j = json::parse(slurp(config_));
  j["schedule"]["base_lr"] = 1e38;
  j["schedule"]["warmup_epochs"] = 0.0;
  j["schedule"]["grad_clip"] = 1e38;
  std::ofstream(cfg) << j.dump();
  const auto r = cli({"pretrain", "--config", cfg, "--data", data_, "--steps", "6", "--out",
                      (root_ / "explode").string()});
  EXPECT_EQ(r.code, 4) << r.err;
}
