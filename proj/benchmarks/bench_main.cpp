#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "rulf/adam.hpp"
#include "rulf/eval.hpp"
#include "rulf/model.hpp"
#include "rulf/preprocess.hpp"
#include "rulf/rng.hpp"
#include "rulf/synth.hpp"
#include "rulf/tape.hpp"
#include "rulf/tensor.hpp"

namespace {

using namespace rulf;

// Operating shape of the full-size networks: 24 logs of 82 parameters.
constexpr std::size_t kL = 24;
constexpr std::size_t kM = 82;

Tensor random_window(std::uint64_t seed) {
    Rng rng(seed);
    Tensor window({kL, kM});
    for (std::size_t i = 0; i < window.size(); ++i) window[i] = rng.uniform(0.0, 1.0);
    return window;
}

Model make_model(Architecture arch) { return Model::build({arch, kL, kM, 42}); }

void BM_Predict(benchmark::State& state, Architecture arch) {
    const Model model = make_model(arch);
    const Tensor window = random_window(7);
    for (auto _ : state) benchmark::DoNotOptimize(model.predict(window));
}

// Cost of one training sample: graph construction, forward pass, and the
// gradient sweep back to every parameter.
void BM_ForwardBackward(benchmark::State& state, Architecture arch) {
    const Model model = make_model(arch);
    const Tensor window = random_window(7);
    for (auto _ : state) {
        Tape tape;
        std::vector<ValueRef> params;
        const ValueRef out = model.forward(tape, window, &params);
        Tensor seed(tape.value(out).shape());
        seed[0] = 1.0;
        tape.backward(out, seed);
        benchmark::DoNotOptimize(tape.grad(params.front()).data());
    }
}

void BM_AdamStep(benchmark::State& state, Architecture arch) {
    Model model = make_model(arch);
    std::vector<Tensor> grads;
    Rng rng(11);
    for (const Tensor& p : model.params()) {
        Tensor g(p.shape());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.uniform(-1.0, 1.0);
        grads.push_back(std::move(g));
    }
    AdamState opt = AdamState::like(model.params());
    const AdamConfig cfg;
    for (auto _ : state) {
        adam_step(model.params(), grads, opt, cfg);
        benchmark::DoNotOptimize(model.params().front().data());
    }
}

void BM_ClipGlobalNorm(benchmark::State& state) {
    const Model model = make_model(Architecture::ForeNet2d);
    std::vector<Tensor> grads;
    Rng rng(11);
    for (const Tensor& p : model.params()) {
        Tensor g(p.shape());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.uniform(-1.0, 1.0);
        grads.push_back(std::move(g));
    }
    for (auto _ : state) {
        std::vector<Tensor> working = grads;
        benchmark::DoNotOptimize(clip_global_norm(working, 5.0));
    }
}

LabeledDataset make_labeled_fixture(std::size_t n) {
    Rng rng(3);
    Tensor matrix({n, kM});
    for (std::size_t i = 0; i < matrix.size(); ++i) matrix[i] = rng.uniform(0.0, 1.0);
    LabeledDataset ds;
    ds.failure_tag = 1;
    ds.turbine = "T01";
    const auto scaled = minmax_fit_transform(matrix);
    ds.matrix = scaled.first;
    ds.scaling = scaled.second;
    ds.labels = linear_degradation(n);
    ds.label_scale = static_cast<double>(n - 1);
    for (double& label : ds.labels) label /= ds.label_scale;
    return ds;
}

void BM_BuildWindowed(benchmark::State& state) {
    const LabeledDataset ds = make_labeled_fixture(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        const WindowedDataset w = build_windowed(ds, kL, 50, 1);
        benchmark::DoNotOptimize(w.inputs.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MinmaxFitTransform(benchmark::State& state) {
    Rng rng(5);
    Tensor matrix({static_cast<std::size_t>(state.range(0)), kM});
    for (std::size_t i = 0; i < matrix.size(); ++i) matrix[i] = rng.uniform(-3.0, 9.0);
    for (auto _ : state) {
        const auto scaled = minmax_fit_transform(matrix);
        benchmark::DoNotOptimize(scaled.first.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_CorrelationMatrix(benchmark::State& state) {
    Rng rng(5);
    Tensor matrix({static_cast<std::size_t>(state.range(0)), kM});
    for (std::size_t i = 0; i < matrix.size(); ++i) matrix[i] = rng.uniform(-1.0, 1.0);
    for (auto _ : state) {
        const Tensor corr = correlation_matrix(matrix);
        benchmark::DoNotOptimize(corr.data());
    }
}

void BM_SynthGenerate(benchmark::State& state) {
    SynthConfig cfg;
    cfg.seed = 9;
    for (auto _ : state) {
        const SynthOutput fixture = generate(cfg);
        benchmark::DoNotOptimize(fixture.records.data());
    }
}

BENCHMARK_CAPTURE(BM_Predict, forenet2d, Architecture::ForeNet2d);
BENCHMARK_CAPTURE(BM_Predict, forenet3d, Architecture::ForeNet3d);
BENCHMARK_CAPTURE(BM_ForwardBackward, forenet2d, Architecture::ForeNet2d);
BENCHMARK_CAPTURE(BM_ForwardBackward, forenet3d, Architecture::ForeNet3d);
BENCHMARK_CAPTURE(BM_AdamStep, forenet2d, Architecture::ForeNet2d);
BENCHMARK_CAPTURE(BM_AdamStep, forenet3d, Architecture::ForeNet3d);
BENCHMARK(BM_ClipGlobalNorm);
BENCHMARK(BM_BuildWindowed)->Arg(1000)->Arg(4000);
BENCHMARK(BM_MinmaxFitTransform)->Arg(1000)->Arg(4000);
BENCHMARK(BM_CorrelationMatrix)->Arg(1000);
BENCHMARK(BM_SynthGenerate);

} // namespace

BENCHMARK_MAIN();
