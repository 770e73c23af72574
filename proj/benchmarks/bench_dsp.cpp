// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <benchmark/benchmark.h>

#include <cmath>

#include "echo/bandsplit.hpp"
#include "echo/dsp.hpp"
#include "echo/rng.hpp"

namespace {

echo::Waveform make_wave(int fs, double seconds) {
  echo::Waveform w;
  w.sample_rate_hz = fs;
  const int n = static_cast<int>(seconds * fs);
  w.samples.resize(n);
  echo::Rng rng(42);
  for (int i = 0; i < n; ++i) {
    w.samples[i] = std::sin(2.0 * 3.141592653589793 * 60.0 * i / fs) + 0.1 * rng.normal();
  }
  return w;
}

void BM_StftMagnitude(benchmark::State& state) {
  const echo::Waveform w = make_wave(static_cast<int>(state.range(0)), 1.0);
  const echo::StftConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(echo::stft_magnitude(w, cfg));
  }
}
BENCHMARK(BM_StftMagnitude)->Arg(16000)->Arg(32000)->Arg(48000);

void BM_SplitBands(benchmark::State& state) {
  const echo::Waveform w = make_wave(16000, 4.0);
  const echo::Spectrogram spec = echo::stft_magnitude(w, echo::StftConfig{});
  const echo::BandSplitConfig cfg{32, 64, 100.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(echo::split_bands(spec, cfg));
  }
}
BENCHMARK(BM_SplitBands);

}  // namespace
