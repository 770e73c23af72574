// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <benchmark/benchmark.h>

#include <cmath>

#include "echo/encoder.hpp"
#include "echo/rng.hpp"

namespace {

echo::Waveform make_wave(int fs, double seconds) {
  echo::Waveform w;
  w.sample_rate_hz = fs;
  const int n = static_cast<int>(seconds * fs);
  w.samples.resize(n);
  echo::Rng rng(42);
  for (int i = 0; i < n; ++i) {
    w.samples[i] = std::sin(2.0 * 3.141592653589793 * 120.0 * i / fs) + 0.1 * rng.normal();
  }
  return w;
}

void BM_EncodeSignalToy(benchmark::State& state) {
  const echo::EchoConfig cfg = echo::EchoConfig::preset("toy");
  echo::Rng rng(7);
  const echo::EncoderParams ep = echo::init_encoder_params(cfg, rng);
  const echo::Waveform w = make_wave(16000, state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(echo::encode_signal(w, ep));
  }
}
BENCHMARK(BM_EncodeSignalToy)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
