#include <benchmark/benchmark.h>

#include "nevae/losses.hpp"

using namespace nevae;

namespace {

void BM_TotalLoss(benchmark::State& state) {
    const bool reencode = state.range(0) != 0;
    Rng rng(1);
    Model model = make_model(784, {128, 128}, 8, rng);
    Tensor x = Tensor::from_data({64, 784}, rng.uniform_vector(64 * 784, 0.0, 1.0));
    LossConfig cfg;
    cfg.variant = reencode ? LossVariant::NeSe : LossVariant::Vanilla;
    Rng noise(2);
    for (auto _ : state) {
        GradTape tape;
        for (auto* p : model.params()) tape.watch(*p);
        BatchLoss out = total_loss(x, model, cfg, 1.0, noise);
        tape.backward(out.total);
        benchmark::DoNotOptimize(out.report.total);
    }
}
BENCHMARK(BM_TotalLoss)->Arg(0)->Arg(1);

void BM_NeLp(benchmark::State& state) {
    Rng rng(3);
    Tensor z = Tensor::from_data({128, 32}, rng.normal_vector(128 * 32));
    Tensor mu = Tensor::from_data({128, 32}, rng.normal_vector(128 * 32));
    Tensor lv = Tensor::from_data({128, 32}, rng.uniform_vector(128 * 32, -2.0, 2.0));
    for (auto _ : state) {
        Tensor out = ne_lp(z, mu, lv, 0.0);
        benchmark::DoNotOptimize(out.data().data());
    }
}
BENCHMARK(BM_NeLp);

}  // namespace

BENCHMARK_MAIN();
