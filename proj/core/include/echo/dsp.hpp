// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <vector>

namespace echo {

struct Waveform {
  std::vector<double> samples;  // dimensionless amplitude
  int sample_rate_hz = 0;

  double duration_s() const {
    return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }
};

// Throws InvalidInputError unless the waveform is non-empty, has a positive
// rate and only finite samples.
void validate(const Waveform& w);

enum class WindowFn { kHann };

struct StftConfig {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  WindowFn window_fn = WindowFn::kHann;
  bool log_compress = false;  // off by default; log1p on magnitudes when set

  // Window length in samples: round(window_ms/1000 * fs), odd values rounded
  // down to even so that F = n_fft/2 + 1 holds with n_fft = window length.
  int window_len_samples(int sample_rate_hz) const;
  int hop_len_samples(int sample_rate_hz) const;

  void validate() const;  // 0 < hop_ms <= window_ms
};

struct Spectrogram {
  std::vector<double> mags;  // row-major F x T, non-negative
  int F = 0;
  int T = 0;
  int sample_rate_hz = 0;
  int n_fft = 0;    // equals the analysis window length
  int hop_len = 0;  // samples between frame starts

  double bin_hz() const { return static_cast<double>(sample_rate_hz) / n_fft; }
  double at(int f, int t) const { return mags[static_cast<size_t>(f) * T + t]; }
  double& at(int f, int t) { return mags[static_cast<size_t>(f) * T + t]; }
};

// Number of full analysis frames: floor((num_samples - window_len)/hop_len)+1.
// Requires num_samples >= window_len.
int frame_count(size_t num_samples, int window_len, int hop_len);

// Zero-mean, unit population-std copy. A degenerate input (std < 1e-12) maps
// to all zeros. Sample rate is preserved.
Waveform normalize_waveform(const Waveform& w);

// Magnitude STFT with a periodic Hann window and n_fft = window length
// (no frame zero-padding, so bin_hz stays constant across sampling rates for
// a fixed window_ms). Signals shorter than one window are rejected.
Spectrogram stft_magnitude(const Waveform& w, const StftConfig& cfg);

// Periodic Hann window of length n: 0.5*(1 - cos(2*pi*i/n)).
std::vector<double> hann_window(int n);

}  // namespace echo
