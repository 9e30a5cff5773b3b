#include <benchmark/benchmark.h>

#include "plgan/dataio.hpp"
#include "plgan/hough.hpp"
#include "plgan/metrics.hpp"
#include "plgan/networks.hpp"
#include "plgan/nn.hpp"
#include "plgan/rng.hpp"
#include "plgan/tensor.hpp"
#include "plgan/trainer.hpp"

namespace {

using plgan::Tensor;

Tensor random_probs(int h, int w, std::uint64_t seed) {
    plgan::Rng rng(seed);
    Tensor t({h, w});
    for (std::int64_t k = 0; k < t.numel(); ++k)
        t[k] = static_cast<float>(rng.uniform(0.02, 0.98));
    return t;
}

Tensor random_mask(int h, int w, std::uint64_t seed, double density = 0.05) {
    plgan::Rng rng(seed);
    Tensor t({h, w});
    for (std::int64_t k = 0; k < t.numel(); ++k)
        t[k] = rng.uniform() < density ? 1.0f : 0.0f;
    return t;
}

Tensor random_image(int size, std::uint64_t seed) {
    plgan::Rng rng(seed);
    Tensor t({3, size, size});
    for (std::int64_t k = 0; k < t.numel(); ++k)
        t[k] = static_cast<float>(rng.uniform(-1.0, 1.0));
    return t;
}

void BM_HoughMap(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const Tensor p = random_probs(size, size, 1);
    plgan::HoughConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(plgan::hough_map(p, cfg));
    state.SetItemsProcessed(state.iterations() * size * size * cfg.M);
}
BENCHMARK(BM_HoughMap)->Arg(64)->Arg(128);

void BM_HoughLossGrad(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const Tensor gt = random_mask(size, size, 2);
    const Tensor pred = random_probs(size, size, 3);
    plgan::HoughConfig cfg;
    Tensor grad({size, size});
    for (auto _ : state) {
        grad.fill(0.0f);
        plgan::hough_loss_grad(gt, pred, cfg, 1.0, grad);
        benchmark::DoNotOptimize(grad);
    }
}
BENCHMARK(BM_HoughLossGrad)->Arg(64)->Arg(128);

void BM_Conv2dForward(benchmark::State& state) {
    plgan::nn::Conv2d conv("bench.conv", 16, 16, 3, 1, 1);
    const Tensor x = random_image(128, 4).reshaped({1, 3, 128, 128});
    plgan::nn::Conv2d first("bench.in", 3, 16, 3, 1, 1);
    const Tensor y = first.forward(x, nullptr);
    for (auto _ : state) benchmark::DoNotOptimize(conv.forward(y, nullptr));
}
BENCHMARK(BM_Conv2dForward);

void BM_Conv2dBackward(benchmark::State& state) {
    plgan::nn::Conv2d conv("bench.conv", 16, 16, 3, 1, 1);
    Tensor x({1, 16, 128, 128});
    plgan::Rng rng(5);
    for (std::int64_t k = 0; k < x.numel(); ++k)
        x[k] = static_cast<float>(rng.uniform(-1.0, 1.0));
    Tensor ones({1, 16, 128, 128});
    ones.fill(1.0f);
    for (auto _ : state) {
        plgan::nn::Tape tape;
        benchmark::DoNotOptimize(conv.forward(x, &tape));
        benchmark::DoNotOptimize(tape.backward(ones));
    }
}
BENCHMARK(BM_Conv2dBackward);

plgan::NetworkBundle bench_bundle() {
    plgan::GeneratorSpec spec;
    spec.base_width = 16;
    spec.n_resblocks = 2;
    spec.disc_base_width = 16;
    plgan::NetworkBundle nets = plgan::build_networks(spec);
    plgan::init_weights(nets, 11);
    return nets;
}

void BM_GeneratorForward(benchmark::State& state) {
    plgan::NetworkBundle nets = bench_bundle();
    const Tensor img = random_image(128, 6);
    for (auto _ : state) benchmark::DoNotOptimize(plgan::generator_forward(nets, img));
}
BENCHMARK(BM_GeneratorForward);

void BM_Predict(benchmark::State& state) {
    plgan::NetworkBundle nets = bench_bundle();
    const Tensor img = random_image(128, 7);
    for (auto _ : state) benchmark::DoNotOptimize(plgan::predict(nets, img));
}
BENCHMARK(BM_Predict);

void BM_TrainStep(benchmark::State& state) {
    plgan::TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 1;
    cfg.image_size = 64;
    cfg.net.base_width = 16;
    cfg.net.n_resblocks = 2;
    cfg.net.disc_base_width = 16;
    plgan::Trainer trainer(cfg);
    const std::vector<plgan::Sample> samples = plgan::synth_thin_lines(1, 64, 2, 8);
    const std::vector<const plgan::Sample*> batch{&samples[0]};
    for (auto _ : state) benchmark::DoNotOptimize(trainer.train_step(batch, 1e-4));
}
BENCHMARK(BM_TrainStep);

void BM_SquaredEuclideanDT(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const Tensor mask = random_mask(size, size, 9);
    for (auto _ : state) benchmark::DoNotOptimize(plgan::squared_euclidean_dt(mask));
}
BENCHMARK(BM_SquaredEuclideanDT)->Arg(256)->Arg(512);

void BM_RelaxedMetrics(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const Tensor pred = random_mask(size, size, 10);
    const Tensor gt = random_mask(size, size, 11);
    for (auto _ : state) benchmark::DoNotOptimize(plgan::relaxed_metrics(pred, gt, 2.0));
}
BENCHMARK(BM_RelaxedMetrics)->Arg(256)->Arg(512);

void BM_RasterizePolygons(benchmark::State& state) {
    plgan::Rng rng(12);
    std::vector<plgan::PolygonAnnotation> annos(4);
    for (plgan::PolygonAnnotation& a : annos) {
        a.label = "cable";
        for (int v = 0; v < 12; ++v)
            a.points.emplace_back(static_cast<float>(rng.uniform(0.0, 512.0)),
                                  static_cast<float>(rng.uniform(0.0, 512.0)));
    }
    for (auto _ : state) benchmark::DoNotOptimize(plgan::rasterize_polygons(annos, 512, 512));
}
BENCHMARK(BM_RasterizePolygons);

} // namespace

BENCHMARK_MAIN();
