// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace echo {

// In-place iterative radix-2 FFT. Size must be a power of two.
void fft_pow2(std::vector<std::complex<double>>& a, bool inverse);

// Forward DFT of a real frame of arbitrary length n:
//   X_f = sum_k x_k exp(-2*pi*i*f*k/n),  f = 0 .. n/2.
// Power-of-two sizes go through the radix-2 path directly; other sizes use
// Bluestein's chirp-z reformulation on top of it. All tables are precomputed
// per instance; transform() is const and safe to call concurrently.
class RealDft {
 public:
  explicit RealDft(int n);

  int size() const { return n_; }
  int num_bins() const { return n_ / 2 + 1; }

  // out must hold num_bins() entries.
  void transform(const double* frame, std::complex<double>* out) const;

 private:
  int n_;
  bool pow2_;
  size_t m_;                                // internal FFT length
  std::vector<std::complex<double>> twiddle_;  // exp(-2*pi*i*j/m), j < m/2
  std::vector<std::complex<double>> chirp_;    // exp(-i*pi*k^2/n), k < n
  std::vector<std::complex<double>> fft_b_;    // FFT of the chirp kernel
};

}  // namespace echo
