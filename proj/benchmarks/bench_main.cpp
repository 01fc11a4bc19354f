// bench_main.cpp

#include <random>

#include <benchmark/benchmark.h>

#include "mclpbeam/beamform.hpp"
#include "mclpbeam/mclp.hpp"
#include "mclpbeam/numerics.hpp"
#include "mclpbeam/simharness.hpp"
#include "mclpbeam/stft.hpp"

namespace mb = mclpbeam;

namespace {

mb::AudioBuffer Noise(int channels, int samples) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    mb::AudioBuffer a;
    a.samples.resize(channels, samples);
    for (Eigen::Index i = 0; i < a.samples.size(); ++i) a.samples(i) = g(rng);
    return a;
}

void BM_StftRoundTrip(benchmark::State &state) {
    const mb::AudioBuffer a = Noise(4, static_cast<int>(state.range(0)));
    const mb::StftConfig cfg;
    for (auto _ : state) {
        const mb::Spectrogram s = mb::AnalyzePadded(a, cfg);
        benchmark::DoNotOptimize(mb::SynthesizePadded(s, cfg, a.num_samples()));
    }
    state.SetItemsProcessed(state.iterations() * a.samples.size());
}
BENCHMARK(BM_StftRoundTrip)->Arg(16000)->Arg(48000)->Unit(benchmark::kMillisecond);

void BM_Mclp(benchmark::State &state) {
    mb::SceneConfig scene;
    scene.num_channels = static_cast<int>(state.range(0));
    scene.decay_t60 = 0.3;
    scene.snr_db = 10.0;
    const mb::SceneTruth t = mb::SimulateScene(mb::SpeechShapedSource(1.0, 16000.0, 1), scene);
    const mb::Spectrogram spec = mb::AnalyzePadded(t.mixed, mb::StftConfig{});
    const mb::MclpConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(mb::RunMclp(spec, cfg));
}
BENCHMARK(BM_Mclp)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_GeneralizedEig(benchmark::State &state) {
    const int dim = static_cast<int>(state.range(0));
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    auto hpd = [&] {
        Eigen::MatrixXcd b(dim, dim);
        for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = {g(rng), g(rng)};
        return mb::HermitianMatrix(b * b.adjoint() + 0.1 * Eigen::MatrixXcd::Identity(dim, dim));
    };
    const mb::HermitianMatrix xx = hpd(), vv = hpd();
    for (auto _ : state) benchmark::DoNotOptimize(mb::MaxGeneralizedEigvec(xx, vv));
}
BENCHMARK(BM_GeneralizedEig)->Arg(2)->Arg(4)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
