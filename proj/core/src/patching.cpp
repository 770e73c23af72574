// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "echo/patching.hpp"

#include <algorithm>

namespace echo {

int patch_count(int num_frames, int patch_len, int stride) {
  if (num_frames < 1) throw InvalidInputError("patch_count: num_frames must be >= 1");
  if (patch_len < 1 || stride < 1) throw ConfigError("patch_count: bad patch geometry");
  int t = std::max(num_frames, patch_len);
  return (t - patch_len) / stride + 1;
}

PatchSequence extract_patches(const SubBand& band, const PatchConfig& cfg) {
  cfg.validate();
  if (band.W < 1 || band.T < 1) throw InvalidInputError("extract_patches: empty band");

  const int L = cfg.patch_len;
  const int P = patch_count(band.T, L, cfg.stride);

  PatchSequence seq;
  seq.num_patches = P;
  seq.band_width = band.W;
  seq.patch_len = L;
  seq.row_dim = band.W * L;
  seq.rows.assign(static_cast<size_t>(P) * seq.row_dim, 0.0);

  for (int p = 0; p < P; ++p) {
    const int t0 = p * cfg.stride;
    double* dst = seq.rows.data() + static_cast<size_t>(p) * seq.row_dim;
    for (int w = 0; w < band.W; ++w) {
      const double* src = band.mags.data() + static_cast<size_t>(w) * band.T;
      const int valid = std::min(L, band.T - t0);  // trailing frames stay zero
      for (int l = 0; l < valid; ++l) dst[static_cast<size_t>(w) * L + l] = src[t0 + l];
    }
  }
  return seq;
}

}  // namespace echo
