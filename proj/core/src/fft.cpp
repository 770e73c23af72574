// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "echo/fft.hpp"

#include <cmath>
#include <numbers>

#include "echo/errors.hpp"

namespace echo {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_pow2(size_t x) { return x != 0 && (x & (x - 1)) == 0; }

size_t next_pow2(size_t x) {
  size_t p = 1;
  while (p < x) p <<= 1;
  return p;
}

std::vector<std::complex<double>> make_twiddles(size_t m) {
  std::vector<std::complex<double>> w(m / 2);
  for (size_t j = 0; j < m / 2; ++j) {
    double ang = -2.0 * kPi * static_cast<double>(j) / static_cast<double>(m);
    w[j] = {std::cos(ang), std::sin(ang)};
  }
  return w;
}

void fft_with_table(std::complex<double>* a, size_t m,
                    const std::vector<std::complex<double>>& w, bool inverse) {
  // bit-reversal permutation
  for (size_t i = 1, j = 0; i < m; ++i) {
    size_t bit = m >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= m; len <<= 1) {
    size_t half = len >> 1;
    size_t stride = m / len;
    for (size_t block = 0; block < m; block += len) {
      for (size_t j = 0; j < half; ++j) {
        std::complex<double> tw = w[j * stride];
        if (inverse) tw = std::conj(tw);
        std::complex<double> u = a[block + j];
        std::complex<double> v = a[block + j + half] * tw;
        a[block + j] = u + v;
        a[block + j + half] = u - v;
      }
    }
  }
  if (inverse) {
    double inv = 1.0 / static_cast<double>(m);
    for (size_t i = 0; i < m; ++i) a[i] *= inv;
  }
}

}  // namespace

void fft_pow2(std::vector<std::complex<double>>& a, bool inverse) {
  if (!is_pow2(a.size())) throw UsageError("fft_pow2: size must be a power of two");
  auto w = make_twiddles(a.size());
  fft_with_table(a.data(), a.size(), w, inverse);
}

RealDft::RealDft(int n) : n_(n) {
  if (n < 2) throw ConfigError("RealDft: n must be >= 2");
  pow2_ = is_pow2(static_cast<size_t>(n));
  if (pow2_) {
    m_ = static_cast<size_t>(n);
    twiddle_ = make_twiddles(m_);
    return;
  }
  m_ = next_pow2(2 * static_cast<size_t>(n) - 1);
  twiddle_ = make_twiddles(m_);
  // chirp c_k = exp(-i*pi*k^2/n); k^2 reduced mod 2n keeps trig arguments small
  const uint64_t two_n = 2ULL * static_cast<uint64_t>(n);
  chirp_.resize(static_cast<size_t>(n));
  for (uint64_t k = 0; k < static_cast<uint64_t>(n); ++k) {
    uint64_t r = (k * k) % two_n;
    double ang = -kPi * static_cast<double>(r) / static_cast<double>(n);
    chirp_[static_cast<size_t>(k)] = {std::cos(ang), std::sin(ang)};
  }
  // circular kernel b_j = conj(c_j), mirrored for negative lags
  std::vector<std::complex<double>> b(m_, {0.0, 0.0});
  for (size_t j = 0; j < static_cast<size_t>(n); ++j) {
    b[j] = std::conj(chirp_[j]);
    if (j > 0) b[m_ - j] = std::conj(chirp_[j]);
  }
  fft_with_table(b.data(), m_, twiddle_, false);
  fft_b_ = std::move(b);
}

void RealDft::transform(const double* frame, std::complex<double>* out) const {
  const size_t n = static_cast<size_t>(n_);
  const size_t bins = static_cast<size_t>(num_bins());
  if (pow2_) {
    std::vector<std::complex<double>> a(n);
    for (size_t i = 0; i < n; ++i) a[i] = {frame[i], 0.0};
    fft_with_table(a.data(), n, twiddle_, false);
    for (size_t f = 0; f < bins; ++f) out[f] = a[f];
    return;
  }
  std::vector<std::complex<double>> a(m_, {0.0, 0.0});
  for (size_t k = 0; k < n; ++k) a[k] = frame[k] * chirp_[k];
  fft_with_table(a.data(), m_, twiddle_, false);
  for (size_t i = 0; i < m_; ++i) a[i] *= fft_b_[i];
  fft_with_table(a.data(), m_, twiddle_, true);
  for (size_t f = 0; f < bins; ++f) out[f] = a[f] * chirp_[f];
}

}  // namespace echo
