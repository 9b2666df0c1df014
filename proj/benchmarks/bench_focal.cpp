#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "focal/nn.hpp"
#include "focal/objectives.hpp"
#include "focal/signal.hpp"

using namespace focal;

namespace {

Eigen::MatrixXd unit_columns(int d, int n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(d, n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  m.colwise().normalize();
  return m;
}

RawWindow random_window(int length, int channels, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  RawWindow w;
  w.samples.resize(length, channels);
  for (Eigen::Index i = 0; i < w.samples.size(); ++i) w.samples.data()[i] = g(rng);
  return w;
}

BatchEmbeddings random_batch(int modalities, int sequences, int length, int dim, Rng& rng) {
  BatchEmbeddings b;
  for (int s = 0; s < sequences; ++s) {
    for (int i = 0; i < length; ++i) b.seq_of.push_back(s);
  }
  for (int v = 0; v < 2; ++v) {
    for (int j = 0; j < modalities; ++j) {
      b.shared[v].push_back(unit_columns(dim, sequences * length, rng));
      b.priv[v].push_back(unit_columns(dim, sequences * length, rng));
    }
  }
  return b;
}

void BM_Stft(benchmark::State& state) {
  Rng rng(1);
  const RawWindow w = random_window(static_cast<int>(state.range(0)), 3, rng);
  const IntervalConfig cfg{20, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(stft(w, cfg));
}
BENCHMARK(BM_Stft)->Arg(200)->Arg(1000);

void BM_TotalLoss(benchmark::State& state) {
  Rng rng(2);
  const BatchEmbeddings b = random_batch(2, static_cast<int>(state.range(0)), 4, 64, rng);
  const LossConfig cfg;
  BatchGradients g;
  for (auto _ : state) benchmark::DoNotOptimize(total_loss(b, cfg, &g));
}
BENCHMARK(BM_TotalLoss)->Arg(16)->Arg(64);

void BM_TemporalLoss(benchmark::State& state) {
  Rng rng(3);
  const int sequences = static_cast<int>(state.range(0));
  const Eigen::MatrixXd z = unit_columns(128, sequences * 4, rng);
  std::vector<int> seq;
  for (int s = 0; s < sequences; ++s) {
    for (int i = 0; i < 4; ++i) seq.push_back(s);
  }
  Eigen::MatrixXd grad;
  for (auto _ : state) benchmark::DoNotOptimize(temporal_loss(z, seq, 1.0, &grad));
}
BENCHMARK(BM_TemporalLoss)->Arg(16)->Arg(64);

void BM_EncoderForwardBackward(benchmark::State& state) {
  Rng rng(4);
  const int n = static_cast<int>(state.range(0));
  const IntervalConfig iv{20, 0.0};
  std::vector<ModalitySample> samples;
  for (int i = 0; i < n; ++i) samples.push_back(stft(random_window(200, 1, rng), iv));
  std::vector<const ModalitySample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  const ModalityShape shape{"m", 1, iv.intervals(200), iv.bins(), iv.interval_len};
  ModalityEncoder enc(shape, EncoderConfig{}, rng);
  const EncoderConfig defaults;
  const Eigen::MatrixXd d_shared = Eigen::MatrixXd::Constant(defaults.proj_dim, n, 0.01);
  for (auto _ : state) {
    const ModalityOutput out = enc.forward(ptrs);
    enc.backward(out, d_shared, d_shared);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_EncoderForwardBackward)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
