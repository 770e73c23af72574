// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "echo/bandsplit.hpp"

#include <cmath>
#include <cstring>

#include "echo/errors.hpp"

namespace echo {

void BandSplitConfig::validate() const {
  if (band_width < 1) throw ConfigError("band_width must be >= 1");
  if (pe_dim < 2 || pe_dim % 2 != 0) throw ConfigError("pe_dim must be a positive even integer");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
}

double center_frequency(int b_start, int b_end, int sample_rate_hz, int n_fft) {
  if (b_start < 0 || b_end <= b_start) throw InvalidInputError("bad bin range");
  return (static_cast<double>(b_start) + static_cast<double>(b_end) - 1.0) / 2.0 *
         (static_cast<double>(sample_rate_hz) / static_cast<double>(n_fft));
}

double normalized_position(double center_freq_hz, int sample_rate_hz) {
  const double nyquist = static_cast<double>(sample_rate_hz) / 2.0;
  if (center_freq_hz < 0.0 || center_freq_hz > nyquist) {
    throw InvalidInputError("center frequency outside [0, Nyquist]");
  }
  return center_freq_hz / nyquist;
}

std::vector<double> frequency_pe(double p, int d, double gamma) {
  if (p < 0.0 || p > 1.0) throw InvalidInputError("normalized position outside [0, 1]");
  if (d < 2 || d % 2 != 0) throw ConfigError("pe dimension must be a positive even integer");
  std::vector<double> pe(static_cast<size_t>(d));
  for (int i = 0; i < d / 2; ++i) {
    double freq = gamma * p / std::pow(10000.0, 2.0 * i / static_cast<double>(d));
    pe[static_cast<size_t>(2 * i)] = std::sin(freq);
    pe[static_cast<size_t>(2 * i + 1)] = std::cos(freq);
  }
  return pe;
}

BandSet split_bands(const Spectrogram& spec, const BandSplitConfig& cfg) {
  cfg.validate();
  const int W = cfg.band_width;
  if (spec.F < W) throw InvalidInputError("spectrogram has fewer bins than one band");

  BandSet set;
  set.K = spec.F / W;
  set.sample_rate_hz = spec.sample_rate_hz;
  set.bands.reserve(static_cast<size_t>(set.K));
  for (int k = 0; k < set.K; ++k) {
    SubBand band;
    band.band_index = k;
    band.bin_start = k * W;
    band.bin_end = (k + 1) * W;
    band.W = W;
    band.T = spec.T;
    band.mags.resize(static_cast<size_t>(W) * static_cast<size_t>(spec.T));
    std::memcpy(band.mags.data(), spec.mags.data() + static_cast<size_t>(band.bin_start) * spec.T,
                band.mags.size() * sizeof(double));
    band.center_freq_hz = center_frequency(band.bin_start, band.bin_end, spec.sample_rate_hz,
                                           spec.n_fft);
    band.normalized_position = normalized_position(band.center_freq_hz, spec.sample_rate_hz);
    band.freq_pe = frequency_pe(band.normalized_position, cfg.pe_dim, cfg.gamma);
    set.bands.push_back(std::move(band));
  }
  return set;
}

}  // namespace echo
