#include <benchmark/benchmark.h>

#include "locjepa/common/rng.hpp"
#include "locjepa/config/run_config.hpp"
#include "locjepa/data/dataset.hpp"
#include "locjepa/data/synthetic.hpp"
#include "locjepa/diff/ops.hpp"
#include "locjepa/eval/metrics.hpp"
#include "locjepa/nets/model.hpp"
#include "locjepa/train/pretrain.hpp"

using namespace locjepa;

namespace {

Tensor<float> random_tensor(Shape shape, Rng& rng) {
  Tensor<float> t(std::move(shape));
  for (auto& v : t.data) v = float(rng.uniform(-1, 1));
  return t;
}

void BM_MatmulForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const auto a0 = random_tensor({n, n}, rng), b0 = random_tensor({n, n}, rng);
  for (auto _ : state) {
    auto a = diff::Var<float>::leaf(a0, true);
    auto b = diff::Var<float>::leaf(b0, true);
    diff::backward(diff::sum(diff::matmul(a, b)));
    benchmark::DoNotOptimize(a.grad().data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_MatmulForwardBackward)->Arg(64)->Arg(256);

void BM_EncoderForward(benchmark::State& state) {
  const auto cfg = config::RunConfig::defaults(config::Profile::desk);
  const nets::ProbeModel<float> model(cfg.model, cfg.grid(), 1);
  const auto video = data::generate_synthetic_video(3, cfg.data.phantom);
  const auto clip = data::clip_at(video.frames, cfg.tokenizer.frame_step, cfg.tokenizer.clip_frames, 0);
  for (auto _ : state) {
    auto f = model.frozen_features(clip.frames);
    benchmark::DoNotOptimize(f.embeddings.value().data());
  }
}
BENCHMARK(BM_EncoderForward)->Unit(benchmark::kMillisecond);

void BM_PretrainStep(benchmark::State& state) {
  const auto cfg = config::RunConfig::defaults(config::Profile::desk);
  std::vector<data::VideoRecord> videos;
  for (std::uint64_t k = 0; k < 4; ++k) {
    auto v = data::generate_synthetic_video(k, cfg.data.phantom);
    videos.push_back({"v" + std::to_string(k), v.frames, v.labels});
  }
  train::Pretrainer trainer(cfg.model, cfg.grid(), cfg.pretrain_settings(), 7);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step(videos).loss.combined);
}
BENCHMARK(BM_PretrainStep)->Unit(benchmark::kMillisecond);

void BM_ConfusionCounts(benchmark::State& state) {
  Rng rng(2);
  Tensor<std::int32_t> p({8, 32, 32}), t({8, 32, 32});
  for (auto& v : p.data) v = std::int32_t(rng.index(4));
  for (auto& v : t.data) v = std::int32_t(rng.index(4));
  for (auto _ : state) benchmark::DoNotOptimize(eval::class_counts(p, t, 3));
}
BENCHMARK(BM_ConfusionCounts);

}  // namespace

BENCHMARK_MAIN();
