#include <benchmark/benchmark.h>

#include "mmrec/metrics.hpp"
#include "mmrec/model.hpp"
#include "mmrec/pipeline.hpp"
#include "mmrec/rng.hpp"
#include "mmrec/transformer.hpp"

using namespace mmrec;

namespace {

ModelConfig bench_config() {
  ModelConfig cfg;
  cfg.d = 16;
  cfg.d_visual = cfg.d_textual = cfg.d_audio = 16;
  cfg.vocab.genders = {"f", "m", "x"};
  cfg.vocab.regions = {"r0", "r1", "r2", "r3", "r4", "r5", "r6", "r7"};
  cfg.vocab.registration_buckets = {"b0", "b1", "b2", "b3", "b4"};
  return cfg;
}

ModalityFeatures random_features(Rng& rng, int dims) {
  ModalityFeatures f;
  for (int m = 0; m < kModalityCount; ++m) {
    f.features[static_cast<std::size_t>(m)].resize(static_cast<std::size_t>(dims));
    for (auto& v : f.features[static_cast<std::size_t>(m)]) v = rng.uniform(-1.0, 1.0);
    f.present[static_cast<std::size_t>(m)] = true;
  }
  return f;
}

void bm_fusion_forward(benchmark::State& state) {
  ModelConfig cfg = bench_config();
  ModelParams params = ModelParams::glorot(cfg, 1);
  Rng rng(2);
  ModalityFeatures feats = random_features(rng, 16);
  for (auto _ : state) {
    FusedEmbedding out = fuse_features(feats, params.fusion);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(bm_fusion_forward);

void bm_transformer_block_forward(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  ModelConfig cfg = bench_config();
  ModelParams params = ModelParams::glorot(cfg, 3);
  Rng rng(4);
  Matrix x(n, cfg.d);
  for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
  std::vector<char> valid(static_cast<std::size_t>(n), 1);
  for (auto _ : state) {
    Matrix out = transformer_block(x, params.encoder[0], valid);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(bm_transformer_block_forward)->Arg(10)->Arg(25)->Arg(50);

void bm_example_loss_backward(benchmark::State& state) {
  int history = static_cast<int>(state.range(0));
  ModelConfig cfg = bench_config();
  Model model;
  model.config = cfg;
  model.params = ModelParams::glorot(cfg, 5);
  Rng rng(6);
  std::vector<ModalityFeatures> items;
  for (int i = 0; i < history + 1; ++i) items.push_back(random_features(rng, 16));
  StaticProfile profile{"f", "r3", "b1"};
  ResolvedExample ex;
  for (int i = 0; i < history; ++i) ex.history.push_back(&items[static_cast<std::size_t>(i)]);
  ex.target = &items.back();
  ex.profile = &profile;
  ex.label = 1.0;
  ModelParams grads = ModelParams::zeros(cfg);
  ModelWorkspace ws;
  for (auto _ : state) {
    double loss = example_loss(model, ex, &grads, ws);
    benchmark::DoNotOptimize(loss);
  }
}
BENCHMARK(bm_example_loss_backward)->Arg(5)->Arg(15)->Arg(50);

void bm_retrieve_5000(benchmark::State& state) {
  ModelConfig cfg = bench_config();
  ModelParams params = ModelParams::glorot(cfg, 7);
  Rng rng(8);
  std::vector<VideoRecord> videos;
  for (int i = 0; i < 5000; ++i) {
    VideoRecord v;
    v.id = i;
    v.features = random_features(rng, 16);
    videos.push_back(std::move(v));
  }
  Catalog catalog = Catalog::build(videos, params.fusion);
  Vec z(16);
  for (auto& v : z) v = rng.uniform(0.0, 1.0);
  std::set<VideoId> exclude = {10, 20, 30};
  for (auto _ : state) {
    auto out = retrieve(z, catalog, 200, exclude, catalog.fingerprint());
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(bm_retrieve_5000);

void bm_auc_100k(benchmark::State& state) {
  Rng rng(9);
  std::vector<std::pair<double, int>> scored;
  for (int i = 0; i < 100000; ++i) scored.emplace_back(rng.uniform01(), rng.uniform01() < 0.2 ? 1 : 0);
  for (auto _ : state) {
    double v = auc(scored);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(bm_auc_100k);

}  // namespace

BENCHMARK_MAIN();
