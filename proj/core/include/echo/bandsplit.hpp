// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "echo/dsp.hpp"

namespace echo {

struct BandSplitConfig {
  int band_width = 32;   // W, frequency bins per sub-band
  int pe_dim = 192;      // d, must be even (encoder embedding dim)
  double gamma = 100.0;  // scaling factor applied to the normalized position

  void validate() const;
};

struct SubBand {
  int band_index = 0;  // k, 0-based ascending in frequency
  int bin_start = 0;   // half-open [bin_start, bin_end)
  int bin_end = 0;
  std::vector<double> mags;  // row-major W x T slice of the spectrogram
  int W = 0;
  int T = 0;
  double center_freq_hz = 0.0;
  double normalized_position = 0.0;  // p in [0, 1]
  std::vector<double> freq_pe;       // sinusoidal encoding of p, length pe_dim

  double at(int w, int t) const { return mags[static_cast<size_t>(w) * T + t]; }
};

struct BandSet {
  std::vector<SubBand> bands;  // ascending, contiguous from bin 0
  int K = 0;
  int sample_rate_hz = 0;
};

// Center frequency of bins [b_start, b_end): ((b_start + b_end - 1)/2) * fs/n_fft.
double center_frequency(int b_start, int b_end, int sample_rate_hz, int n_fft);

// p = f_c / (fs/2). Rejects center frequencies above Nyquist.
double normalized_position(double center_freq_hz, int sample_rate_hz);

// Sinusoidal frequency positional encoding:
//   out[2i]   = sin(gamma * p / 10000^(2i/d))
//   out[2i+1] = cos(gamma * p / 10000^(2i/d))
// Depends only on p, so bands at equal relative positions share encodings
// across sampling rates.
std::vector<double> frequency_pe(double p, int d, double gamma);

// Uniform split into K = floor(F/W) sub-bands; the top F mod W bins are
// discarded. Each band carries its center frequency, normalized position and
// frequency PE.
BandSet split_bands(const Spectrogram& spec, const BandSplitConfig& cfg);

}  // namespace echo
