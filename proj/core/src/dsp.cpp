// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "echo/dsp.hpp"

#include <cmath>
#include <numbers>

#include "echo/errors.hpp"
#include "echo/fft.hpp"

namespace echo {

void validate(const Waveform& w) {
  if (w.samples.empty()) throw InvalidInputError("waveform is empty");
  if (w.sample_rate_hz <= 0) throw InvalidInputError("waveform sample rate must be positive");
  for (double s : w.samples) {
    if (!std::isfinite(s)) throw InvalidInputError("waveform contains non-finite samples");
  }
}

int StftConfig::window_len_samples(int sample_rate_hz) const {
  int len = static_cast<int>(std::lround(window_ms / 1000.0 * sample_rate_hz));
  if (len % 2 != 0) len -= 1;
  if (len < 2) throw ConfigError("stft window shorter than 2 samples at this rate");
  return len;
}

int StftConfig::hop_len_samples(int sample_rate_hz) const {
  int hop = static_cast<int>(std::lround(hop_ms / 1000.0 * sample_rate_hz));
  if (hop < 1) throw ConfigError("stft hop shorter than 1 sample at this rate");
  return hop;
}

void StftConfig::validate() const {
  if (!(hop_ms > 0.0) || !(hop_ms <= window_ms)) {
    throw ConfigError("stft config requires 0 < hop_ms <= window_ms");
  }
}

int frame_count(size_t num_samples, int window_len, int hop_len) {
  if (window_len < 1 || hop_len < 1) throw ConfigError("frame_count: bad window/hop");
  if (num_samples < static_cast<size_t>(window_len)) {
    throw InvalidInputError("signal shorter than one analysis window");
  }
  return static_cast<int>((num_samples - static_cast<size_t>(window_len)) /
                          static_cast<size_t>(hop_len)) +
         1;
}

Waveform normalize_waveform(const Waveform& w) {
  validate(w);
  const size_t n = w.samples.size();
  double mean = 0.0;
  for (double s : w.samples) mean += s;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double s : w.samples) var += (s - mean) * (s - mean);
  var /= static_cast<double>(n);  // population variance
  double std = std::sqrt(var);
  Waveform out;
  out.sample_rate_hz = w.sample_rate_hz;
  out.samples.resize(n);
  if (std < 1e-12) {
    // degenerate (constant) input maps to all zeros
    return out;
  }
  for (size_t i = 0; i < n; ++i) out.samples[i] = (w.samples[i] - mean) / std;
  return out;
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<size_t>(i)] =
        0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / static_cast<double>(n)));
  }
  return w;
}

Spectrogram stft_magnitude(const Waveform& w, const StftConfig& cfg) {
  validate(w);
  cfg.validate();
  const int win = cfg.window_len_samples(w.sample_rate_hz);
  const int hop = cfg.hop_len_samples(w.sample_rate_hz);
  const int T = frame_count(w.samples.size(), win, hop);
  const int F = win / 2 + 1;

  Spectrogram spec;
  spec.F = F;
  spec.T = T;
  spec.sample_rate_hz = w.sample_rate_hz;
  spec.n_fft = win;
  spec.hop_len = hop;
  spec.mags.assign(static_cast<size_t>(F) * static_cast<size_t>(T), 0.0);

  const std::vector<double> window = hann_window(win);
  const RealDft dft(win);
  std::vector<double> frame(static_cast<size_t>(win));
  std::vector<std::complex<double>> bins(static_cast<size_t>(F));
  for (int t = 0; t < T; ++t) {
    const size_t start = static_cast<size_t>(t) * static_cast<size_t>(hop);
    for (int i = 0; i < win; ++i) {
      frame[static_cast<size_t>(i)] = w.samples[start + static_cast<size_t>(i)] *
                                      window[static_cast<size_t>(i)];
    }
    dft.transform(frame.data(), bins.data());
    for (int f = 0; f < F; ++f) {
      double mag = std::abs(bins[static_cast<size_t>(f)]);
      spec.at(f, t) = cfg.log_compress ? std::log1p(mag) : mag;
    }
  }
  return spec;
}

}  // namespace echo
