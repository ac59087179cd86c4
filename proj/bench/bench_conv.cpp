#include <benchmark/benchmark.h>

#include <random>

#include "baf/ops.hpp"
#include "baf/tensor.hpp"

using baf::Tensor;

namespace {

Tensor rand_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    Tensor t(std::move(shape));
    for (float& v : t.data) v = dist(rng);
    return t;
}

void bench_conv_forward(benchmark::State& state, bool parallel) {
    const auto f = static_cast<std::size_t>(state.range(0));
    const auto dim = static_cast<std::size_t>(state.range(1));
    const Tensor in = rand_tensor({f, dim, dim}, 1);
    const Tensor k = rand_tensor({f, f, 3, 3}, 2);
    for (auto _ : state) {
        Tensor out = parallel ? baf::ops::conv2d_forward(in, k)
                              : baf::ops::serial::conv2d_forward(in, k);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(f * f * 9 * dim * dim));
}

void bench_conv_backward(benchmark::State& state, bool parallel) {
    const auto f = static_cast<std::size_t>(state.range(0));
    const auto dim = static_cast<std::size_t>(state.range(1));
    const Tensor in = rand_tensor({f, dim, dim}, 3);
    const Tensor k = rand_tensor({f, f, 3, 3}, 4);
    const Tensor go = rand_tensor({f, dim, dim}, 5);
    for (auto _ : state) {
        auto grads = parallel ? baf::ops::conv2d_backward(in, k, go)
                              : baf::ops::serial::conv2d_backward(in, k, go);
        benchmark::DoNotOptimize(grads.grad_input.data.data());
    }
}

void omp_forward(benchmark::State& s) { bench_conv_forward(s, true); }
void serial_forward(benchmark::State& s) { bench_conv_forward(s, false); }
void omp_backward(benchmark::State& s) { bench_conv_backward(s, true); }
void serial_backward(benchmark::State& s) { bench_conv_backward(s, false); }

}  // namespace

BENCHMARK(omp_forward)->Args({16, 128})->Args({32, 128})->Args({64, 64});
BENCHMARK(serial_forward)->Args({16, 128})->Args({32, 128})->Args({64, 64});
BENCHMARK(omp_backward)->Args({16, 128})->Args({32, 128})->Args({64, 64});
BENCHMARK(serial_backward)->Args({16, 128})->Args({32, 128})->Args({64, 64});

BENCHMARK_MAIN();
