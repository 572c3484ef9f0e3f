#include <benchmark/benchmark.h>

#include "nevae/adam.hpp"
#include "nevae/rng.hpp"
#include "nevae/tensor.hpp"

using namespace nevae;

namespace {

Tensor random_tensor(Rng& rng, Shape shape) {
    return Tensor::from_data(shape, rng.normal_vector(shape_numel(shape)));
}

void BM_MatmulForward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    Tensor a = random_tensor(rng, {n, n});
    Tensor b = random_tensor(rng, {n, n});
    for (auto _ : state) {
        Tensor c = matmul(a, b);
        benchmark::DoNotOptimize(c.data().data());
    }
    state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_MatmulForward)->Arg(64)->Arg(128)->Arg(256);

void BM_MlpForwardBackward(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    Rng rng(2);
    Tensor x = random_tensor(rng, {batch, 784});
    Tensor w1 = random_tensor(rng, {784, 128});
    Tensor b1 = Tensor::zeros({128});
    Tensor w2 = random_tensor(rng, {128, 16});
    Tensor b2 = Tensor::zeros({16});
    for (auto _ : state) {
        GradTape tape;
        tape.watch(w1);
        tape.watch(b1);
        tape.watch(w2);
        tape.watch(b2);
        Tensor h = tanh(add(matmul(x, w1), b1));
        Tensor out = add(matmul(h, w2), b2);
        Tensor loss = mean_all(square(out));
        tape.backward(loss);
        benchmark::DoNotOptimize(w1.grad().data());
    }
}
BENCHMARK(BM_MlpForwardBackward)->Arg(32)->Arg(128);

void BM_AdamStep(benchmark::State& state) {
    Rng rng(3);
    std::vector<Tensor> params{random_tensor(rng, {784, 128}), random_tensor(rng, {128})};
    std::vector<Tensor> grads{random_tensor(rng, {784, 128}), random_tensor(rng, {128})};
    AdamState opt;
    for (auto _ : state) {
        adam_step(params, grads, opt);
        benchmark::DoNotOptimize(params[0].data().data());
    }
}
BENCHMARK(BM_AdamStep);

}  // namespace

BENCHMARK_MAIN();
