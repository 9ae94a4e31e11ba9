#include <benchmark/benchmark.h>

#include <vector>

#include "grnr/pipeline.hpp"
#include "grnr/postproc.hpp"
#include "grnr/regression.hpp"
#include "grnr/support.hpp"
#include "grnr/synthetic.hpp"

namespace {

using namespace grnr;

const FeatureStack& workload() {
    static const FeatureStack stack = [] {
        const synthetic::MapShape shapes[] = {{2, 512, 32, 32}, {3, 1024, 16, 16}};
        return synthetic::random_stack(7, shapes);
    }();
    return stack;
}

const FeatureMap& square_map(int side, int channels) {
    static std::vector<std::pair<std::pair<int, int>, FeatureStack>> cache;
    for (const auto& [key, stack] : cache) {
        if (key == std::pair{side, channels}) return stack.maps.front();
    }
    const synthetic::MapShape shape[] = {{2, channels, side, side}};
    cache.emplace_back(std::pair{side, channels}, synthetic::random_stack(11, shape));
    return cache.back().second.maps.front();
}

void BM_GlobalSampling(benchmark::State& state) {
    const auto& map = square_map(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    const auto patches = core::to_patch_matrix(map);
    for (auto _ : state) {
        benchmark::DoNotOptimize(core::sample_global_support(patches, map.height, map.width, 10));
    }
    state.SetItemsProcessed(state.iterations() * map.height * map.width);
}
BENCHMARK(BM_GlobalSampling)->Args({16, 1024})->Args({32, 512})->Args({64, 256})->Unit(benchmark::kMillisecond);

void BM_ScoreMap(benchmark::State& state) {
    const auto& map = square_map(32, 512);
    const auto patches = core::to_patch_matrix(map);
    core::RegressionConfig cfg;
    const auto global = core::sample_global_support(patches, map.height, map.width, cfg.k);
    const int threads = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            core::score_map_for_hierarchy(patches, map.level, map.height, map.width, global, cfg, threads));
    }
    state.SetItemsProcessed(state.iterations() * map.height * map.width);
}
BENCHMARK(BM_ScoreMap)->Arg(1)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_Finalize(benchmark::State& state) {
    const auto& stack = workload();
    PipelineConfig cfg;
    const auto det = detect_from_features(stack, cfg, 256, 256);
    const int side = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(postproc::finalize(det.hierarchy_maps, side, side, cfg.sigma));
    }
}
BENCHMARK(BM_Finalize)->Arg(256)->Arg(320)->Unit(benchmark::kMillisecond);

void BM_DetectFromFeatures(benchmark::State& state) {
    const auto& stack = workload();
    PipelineConfig cfg;
    cfg.threads = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(detect_from_features(stack, cfg, 256, 256));
    }
}
BENCHMARK(BM_DetectFromFeatures)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
