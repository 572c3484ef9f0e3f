#include <benchmark/benchmark.h>

#include "nevae/metrics.hpp"

using namespace nevae;

namespace {

void BM_MutualInformation(benchmark::State& state) {
    const auto cap = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    Model model = make_model(64, {32}, 8, rng);
    SyntheticSpec spec;
    spec.intrinsic_dim = 4;
    spec.ambient_dim = 64;
    spec.n_samples = cap;
    spec.seed = 5;
    Dataset ds = make_synthetic(spec);
    for (auto _ : state) {
        Rng mi_rng(7);
        benchmark::DoNotOptimize(mutual_information(model.encoder, ds, 1, mi_rng, cap));
    }
}
BENCHMARK(BM_MutualInformation)->Arg(256)->Arg(1024);

void BM_ReencodeError(benchmark::State& state) {
    Rng rng(2);
    Model model = make_model(64, {32}, 8, rng);
    SyntheticSpec spec;
    spec.intrinsic_dim = 4;
    spec.ambient_dim = 64;
    spec.n_samples = 1024;
    spec.seed = 6;
    Dataset ds = make_synthetic(spec);
    for (auto _ : state) {
        Rng re_rng(8);
        benchmark::DoNotOptimize(reencode_error(model, ds, re_rng));
    }
}
BENCHMARK(BM_ReencodeError);

}  // namespace

BENCHMARK_MAIN();
