// Serial reference vs OpenMP path for each parallel kernel. The Exec argument
// is the benchmark's first range value: 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include <random>

#include "dnt/classifier.hpp"
#include "dnt/geo.hpp"
#include "dnt/netsim.hpp"
#include "support/fixtures.hpp"

using namespace dnt;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

const dataset::FoldedDataset& bench_dataset() {
    static const auto ds = [] {
        const auto samples = dnt::testing::scenario_samples(dnt::testing::separable_scenario(100, 1));
        return dataset::make_folds(dataset::balance_classes(samples, 1), 1);
    }();
    return ds;
}

void BM_RunScenario(benchmark::State& state) {
    const auto cfg = dnt::testing::separable_scenario(static_cast<int>(state.range(1)), 3);
    for (auto _ : state) benchmark::DoNotOptimize(netsim::run_scenario(cfg, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * state.range(1) * 3);
}
BENCHMARK(BM_RunScenario)->ArgsProduct({{0, 1}, {100, 1000}})->Unit(benchmark::kMillisecond);

void BM_DistanceMatrix(benchmark::State& state) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> lat(-90, 90);
    std::uniform_real_distribution<double> lon(-180, 180);
    std::vector<geo::GeoPoint> pts(static_cast<std::size_t>(state.range(1)));
    for (auto& p : pts) p = {lat(gen), lon(gen)};
    for (auto _ : state) benchmark::DoNotOptimize(geo::distance_matrix(pts, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * state.range(1) * state.range(1));
}
BENCHMARK(BM_DistanceMatrix)->ArgsProduct({{0, 1}, {200, 1000}})->Unit(benchmark::kMillisecond);

void BM_CrossValidate(benchmark::State& state) {
    classifier::CnnConfig cfg;
    cfg.epochs = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(classifier::cross_validate(bench_dataset(), cfg, exec_of(state)));
}
BENCHMARK(BM_CrossValidate)->ArgsProduct({{0, 1}, {10}})->Unit(benchmark::kMillisecond);

void BM_PredictBatch(benchmark::State& state) {
    classifier::CnnConfig cfg;
    cfg.epochs = 5;
    static const auto model = classifier::train_cnn(bench_dataset(), cfg, 0);
    std::vector<std::vector<double>> rows;
    while (rows.size() < static_cast<std::size_t>(state.range(1))) {
        for (const auto& s : bench_dataset().samples) rows.push_back(s.values);
    }
    rows.resize(static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(model.predict_batch(rows, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_PredictBatch)->ArgsProduct({{0, 1}, {10000}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
