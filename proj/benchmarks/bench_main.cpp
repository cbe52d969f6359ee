#include <benchmark/benchmark.h>

#include "tsxfidel/dataset.hpp"
#include "tsxfidel/explainers.hpp"
#include "tsxfidel/metrics.hpp"
#include "tsxfidel/models.hpp"

namespace {

using namespace tsxfidel;

struct Fixture {
  dataset::FramedDataset data;
  models::GbrModel gbr;
};

// Driver data, 4 features, L = 6, t0 = 2, default boosting settings.
const Fixture& fixture() {
  static const Fixture f = [] {
    const auto series =
        dataset::make_synthetic({.n_series = 2, .length = 600, .features = 4}, 1);
    auto data = dataset::frame_dataset(series, 6, 2, 0.8);
    auto gbr = models::fit_gbr(data.train, {});
    return Fixture{std::move(data), std::move(gbr)};
  }();
  return f;
}

void BM_GbrPredictHorizon(benchmark::State& state) {
  const auto& f = fixture();
  const auto& x = f.data.test.front().x;
  for (auto _ : state) benchmark::DoNotOptimize(f.gbr.predict_horizon(x, 0));
}
BENCHMARK(BM_GbrPredictHorizon);

void BM_GbrFit(benchmark::State& state) {
  const auto& f = fixture();
  const models::GbrParams params{.n_trees = static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(models::fit_gbr(f.data.train, params));
}
BENCHMARK(BM_GbrFit)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_OmissionAllHorizons(benchmark::State& state) {
  const auto& f = fixture();
  const auto explainer = explainers::make_explainer(explainers::ExplainerKind::kOmissionLocal, {});
  const auto& x = f.data.test.front().x;
  for (auto _ : state) benchmark::DoNotOptimize(explainer->explain(f.gbr, x, {}, 0));
}
BENCHMARK(BM_OmissionAllHorizons);

void BM_KernelShap(benchmark::State& state) {
  const auto& f = fixture();
  const explainers::KernelShapConfig cfg{.n_coalitions = static_cast<std::size_t>(state.range(0)),
                                         .n_background = 16};
  const auto& x = f.data.test.front().x;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(explainers::explain_kernel_shap(f.gbr, x, 0, f.data.pool, cfg, ++seed));
  }
}
BENCHMARK(BM_KernelShap)->Arg(256)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_AopcrSample(benchmark::State& state) {
  const auto& f = fixture();
  const auto& x = f.data.test.front().x;
  const auto imp = explainers::explain_omission(f.gbr, x, 0, explainers::ReplacementKind::kLocalMean);
  const auto ranking = explainers::rank_cells(imp, explainers::Direction::kMostPositive);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::aopcr_sample(f.gbr, x, ranking, 0, 10, f.data.pool, ++seed));
  }
}
BENCHMARK(BM_AopcrSample);

void BM_AptSample(benchmark::State& state) {
  const auto& f = fixture();
  const auto& x = f.data.test.front().x;
  const auto imp = explainers::explain_omission(f.gbr, x, 0, explainers::ReplacementKind::kLocalMean);
  const auto ranking = explainers::rank_cells(imp, explainers::Direction::kMostPositive);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::apt_sample(f.gbr, x, ranking, 0, -0.1, f.data.pool, ++seed));
  }
}
BENCHMARK(BM_AptSample);

}  // namespace

BENCHMARK_MAIN();
