// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "echo/bandsplit.hpp"
#include "echo/dsp.hpp"
#include "echo/errors.hpp"
#include "echo/rng.hpp"

namespace {

constexpr double kPi = 3.14159265358979323846;

echo::Spectrogram random_spectrogram(int fs, double seconds, echo::Rng& rng) {
  echo::Waveform w;
  w.sample_rate_hz = fs;
  w.samples.resize(static_cast<size_t>(seconds * fs));
  for (double& v : w.samples) v = rng.uniform(-1.0, 1.0);
  return echo::stft_magnitude(w, echo::StftConfig{});
}

}  // namespace

TEST_CASE("center frequency scalar examples") {
  // Half-open band [15, 17) at fs 16 kHz, n_fft 400: bins 15 and 16, center
  // bin 15.5, bin width 40 Hz -> 620 Hz.
  CHECK(echo::center_frequency(15, 17, 16000, 400) == doctest::Approx(620.0).epsilon(1e-12));
  // Single-bin band [0, 1): center at dc.
  CHECK(echo::center_frequency(0, 1, 16000, 400) == 0.0);
  // [32, 64) at 16 kHz: center bin 47.5 -> 1900 Hz.
  CHECK(echo::center_frequency(32, 64, 16000, 400) == doctest::Approx(1900.0).epsilon(1e-12));
}

TEST_CASE("center frequency and normalized position match scalar oracles") {
  echo::Rng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const int fs = 8000 + static_cast<int>(rng.uniform_int(48000));
    const int n_fft = 2 * (50 + static_cast<int>(rng.uniform_int(600)));
    const int max_bin = n_fft / 2 + 1;
    const int b_start = static_cast<int>(rng.uniform_int(max_bin - 1));
    const int width = 1 + static_cast<int>(rng.uniform_int(max_bin - b_start));
    const int b_end = b_start + width;

    const double want_fc = ((b_start + b_end - 1) / 2.0) * (static_cast<double>(fs) / n_fft);
    const double got_fc = echo::center_frequency(b_start, b_end, fs, n_fft);
    CHECK(got_fc == doctest::Approx(want_fc).epsilon(1e-12));

    const double want_p = want_fc / (fs / 2.0);
    CHECK(echo::normalized_position(got_fc, fs) == doctest::Approx(want_p).epsilon(1e-12));
  }
}

TEST_CASE("normalized position rejects centers above nyquist") {
  CHECK_THROWS_AS(echo::normalized_position(9000.0, 16000), echo::InvalidInputError);
  CHECK(echo::normalized_position(8000.0, 16000) == 1.0);
}

TEST_CASE("frequency pe entries match the scalar formula") {
  echo::Rng rng(22);
  for (int trial = 0; trial < 1000; ++trial) {
    const double p = rng.uniform();
    const int d = 2 * (1 + static_cast<int>(rng.uniform_int(64)));
    const double gamma = rng.uniform(1.0, 500.0);
    const std::vector<double> pe = echo::frequency_pe(p, d, gamma);
    REQUIRE(static_cast<int>(pe.size()) == d);
    for (int i = 0; i < d / 2; ++i) {
      const double angle = gamma * p / std::pow(10000.0, (2.0 * i) / d);
      CHECK(pe[2 * i] == doctest::Approx(std::sin(angle)).epsilon(1e-12));
      CHECK(pe[2 * i + 1] == doctest::Approx(std::cos(angle)).epsilon(1e-12));
    }
    for (double v : pe) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("equal relative position gives bitwise-equal pe across sampling rates") {
  // Doubling fs doubles n_fft (25 ms window), so a band with center bin 2c at
  // the doubled rate sits at the same p as center bin c at the base rate.
  echo::Rng rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    // Center bin c at 16 kHz can be half-integer; track 2c as an integer.
    const int twice_c = 2 + static_cast<int>(rng.uniform_int(396));

    // Any 16 kHz band with b_start + b_end - 1 == 2c has center c.
    const int lo = std::max(0, twice_c - 200);
    const int hi = twice_c / 2;
    const int b_start16 = lo + static_cast<int>(rng.uniform_int(hi - lo + 1));
    const int b_end16 = twice_c + 1 - b_start16;
    const double fc16 = echo::center_frequency(b_start16, b_end16, 16000, 400);
    const double p16 = echo::normalized_position(fc16, 16000);

    // 32 kHz band with integer center 2c, odd width clamped to the bin range.
    const int w = std::min({3, twice_c, 400 - twice_c});
    const int b_start32 = twice_c - w;
    const int b_end32 = twice_c + w + 1;
    const double fc32 = echo::center_frequency(b_start32, b_end32, 32000, 800);
    const double p32 = echo::normalized_position(fc32, 32000);

    REQUIRE(p16 == p32);  // exact: both scale numerator and denominator by 2
    const std::vector<double> pe16 = echo::frequency_pe(p16, 64, 100.0);
    const std::vector<double> pe32 = echo::frequency_pe(p32, 64, 100.0);
    for (size_t i = 0; i < pe16.size(); ++i) {
      CHECK(std::abs(pe16[i] - pe32[i]) <= 1e-12);
    }
  }
}

TEST_CASE("band count is proportional to sampling rate at fixed window_ms") {
  echo::Rng rng(24);
  const echo::BandSplitConfig cfg{32, 64, 100.0};
  const echo::Spectrogram s16 = random_spectrogram(16000, 0.5, rng);
  const echo::Spectrogram s32 = random_spectrogram(32000, 0.5, rng);
  const echo::BandSet b16 = echo::split_bands(s16, cfg);
  const echo::BandSet b32 = echo::split_bands(s32, cfg);
  CHECK(b16.K == 6);   // floor(201 / 32)
  CHECK(b32.K == 12);  // floor(401 / 32)
  CHECK(b32.K == 2 * b16.K);
}

TEST_CASE("split bands partitions the low bins exactly and discards the rest") {
  echo::Rng rng(25);
  const echo::Spectrogram spec = random_spectrogram(16000, 0.4, rng);
  const echo::BandSplitConfig cfg{32, 64, 100.0};
  const echo::BandSet set = echo::split_bands(spec, cfg);
  REQUIRE(set.K == static_cast<int>(set.bands.size()));
  REQUIRE(set.K == spec.F / 32);
  CHECK(set.sample_rate_hz == 16000);

  for (int k = 0; k < set.K; ++k) {
    const echo::SubBand& b = set.bands[k];
    CHECK(b.band_index == k);
    CHECK(b.bin_start == k * 32);
    CHECK(b.bin_end == (k + 1) * 32);
    CHECK(b.W == 32);
    CHECK(b.T == spec.T);
    // Band content is a bitwise copy of the spectrogram rows.
    for (int w = 0; w < b.W; ++w) {
      for (int t = 0; t < b.T; ++t) {
        CHECK(b.at(w, t) == spec.at(b.bin_start + w, t));
      }
    }
    // Carried metadata matches the free functions.
    const double fc = echo::center_frequency(b.bin_start, b.bin_end, 16000, spec.n_fft);
    CHECK(b.center_freq_hz == fc);
    CHECK(b.normalized_position == echo::normalized_position(fc, 16000));
    const std::vector<double> pe = echo::frequency_pe(b.normalized_position, 64, 100.0);
    REQUIRE(b.freq_pe.size() == pe.size());
    for (size_t i = 0; i < pe.size(); ++i) CHECK(b.freq_pe[i] == pe[i]);
  }
}

TEST_CASE("split bands rejects spectrograms narrower than one band") {
  echo::Rng rng(26);
  const echo::Spectrogram spec = random_spectrogram(16000, 0.4, rng);
  const echo::BandSplitConfig cfg{300, 64, 100.0};  // W larger than F = 201
  CHECK_THROWS_AS(echo::split_bands(spec, cfg), echo::InvalidInputError);
}
