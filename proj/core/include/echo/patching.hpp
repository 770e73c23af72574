// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "echo/bandsplit.hpp"
#include "echo/errors.hpp"

namespace echo {

struct PatchConfig {
  int patch_len = 32;  // frames per patch
  int stride = 16;     // frames between patch starts

  void validate() const {
    if (patch_len < 1) throw ConfigError("patch_len must be >= 1");
    if (stride < 1 || stride > patch_len)
      throw ConfigError("stride must be in [1, patch_len]");
  }
};

// Number of patches for a band with num_frames frames. Inputs shorter than
// one patch are right zero-padded up to patch_len, so the count is >= 1.
int patch_count(int num_frames, int patch_len, int stride);

// Flattened overlapping patches of one sub-band, ready for projection.
// Row p holds patch p starting at frame p*stride; flat index layout is
// w * patch_len + l (bin-major, frame-within-patch minor). Frames past the
// end of the band read as zero.
struct PatchSequence {
  std::vector<double> rows;  // num_patches x (band_width * patch_len)
  int num_patches = 0;
  int row_dim = 0;
  int band_width = 0;
  int patch_len = 0;

  const double* row(int p) const { return rows.data() + static_cast<size_t>(p) * row_dim; }
};

PatchSequence extract_patches(const SubBand& band, const PatchConfig& cfg);

}  // namespace echo
