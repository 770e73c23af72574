// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <set>
#include <vector>

#include "doctest.h"
#include "echo/fft.hpp"
#include "echo/rng.hpp"

namespace {

constexpr double kPi = 3.14159265358979323846;

// O(n^2) reference DFT, written independently of the FFT implementation.
std::vector<std::complex<double>> dft_reference(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<std::complex<double>> out(n / 2 + 1);
  for (int f = 0; f <= n / 2; ++f) {
    std::complex<double> acc(0.0, 0.0);
    for (int k = 0; k < n; ++k) {
      const double angle = -2.0 * kPi * f * k / n;
      acc += x[k] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[f] = acc;
  }
  return out;
}

}  // namespace

TEST_CASE("real dft matches brute-force reference for pow2 and bluestein sizes") {
  echo::Rng rng(11);
  for (int n : {2, 4, 8, 16, 64, 3, 5, 12, 15, 100, 160, 400, 441, 1200}) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    const echo::RealDft dft(n);
    REQUIRE(dft.num_bins() == n / 2 + 1);
    std::vector<std::complex<double>> got(dft.num_bins());
    dft.transform(x.data(), got.data());
    const auto want = dft_reference(x);
    for (int f = 0; f < dft.num_bins(); ++f) {
      CAPTURE(n);
      CAPTURE(f);
      CHECK(std::abs(got[f] - want[f]) < 1e-9 * std::max(1.0, std::abs(want[f])));
    }
  }
}

TEST_CASE("dft of a bin-aligned sinusoid concentrates in one bin") {
  const int n = 128;
  std::vector<double> x(n);
  for (int k = 0; k < n; ++k) x[k] = std::cos(2.0 * kPi * 5.0 * k / n);
  const echo::RealDft dft(n);
  std::vector<std::complex<double>> out(dft.num_bins());
  dft.transform(x.data(), out.data());
  for (int f = 0; f < dft.num_bins(); ++f) {
    const double mag = std::abs(out[f]);
    if (f == 5) {
      CHECK(mag == doctest::Approx(n / 2.0).epsilon(1e-9));
    } else {
      CHECK(mag < 1e-9 * n);
    }
  }
}

TEST_CASE("rng uniform stays in range and is deterministic per seed") {
  echo::Rng a(42);
  echo::Rng b(42);
  for (int i = 0; i < 1000; ++i) {
    const double va = a.uniform();
    CHECK(va >= 0.0);
    CHECK(va < 1.0);
    CHECK(va == b.uniform());
  }
  echo::Rng c(43);
  bool any_diff = false;
  echo::Rng a2(42);
  for (int i = 0; i < 16; ++i) any_diff |= (a2.uniform() != c.uniform());
  CHECK(any_diff);
}

TEST_CASE("rng uniform_int covers the range without bias sentinels") {
  echo::Rng rng(7);
  std::set<uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const uint64_t v = rng.uniform_int(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("rng forks are independent of parent draw position and of each other") {
  echo::Rng parent(99);
  echo::Rng f1 = parent.fork("data");
  (void)parent.uniform();
  (void)parent.uniform();
  echo::Rng parent2(99);
  echo::Rng f2 = parent2.fork("data");
  // Fork depends only on (parent seed, name), not on how much the parent drew.
  for (int i = 0; i < 50; ++i) CHECK(f1.uniform() == f2.uniform());

  echo::Rng g1 = parent2.fork("mask");
  echo::Rng g2 = parent2.fork("data");
  bool differs = false;
  for (int i = 0; i < 16; ++i) differs |= (g1.uniform() != g2.uniform());
  CHECK(differs);
}

TEST_CASE("rng serialize round-trip continues the exact stream") {
  echo::Rng rng(123);
  for (int i = 0; i < 17; ++i) (void)rng.normal();
  const std::string blob = rng.serialize();
  echo::Rng restored = echo::Rng::deserialize(blob);
  for (int i = 0; i < 100; ++i) CHECK(rng.normal() == restored.normal());
}

TEST_CASE("sample_without_replacement returns distinct in-range sorted-free indices") {
  echo::Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 1 + rng.uniform_int(30);
    const size_t k = rng.uniform_int(n + 1);
    const std::vector<size_t> got = rng.sample_without_replacement(n, k);
    REQUIRE(got.size() == k);
    std::set<size_t> uniq(got.begin(), got.end());
    CHECK(uniq.size() == k);
    for (size_t v : got) CHECK(v < n);
  }
}

TEST_CASE("truncated normal draws stay within two standard deviations") {
  echo::Rng rng(8);
  for (int i = 0; i < 5000; ++i) {
    CHECK(std::abs(rng.truncated_normal(0.02)) <= 2.0 * 0.02);
  }
}

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(echo::fnv1a64(std::string_view("")) == 0xcbf29ce484222325ULL);
  CHECK(echo::fnv1a64(std::string_view("a")) == 0xaf63dc4c8601ec8cULL);
  CHECK(echo::fnv1a64(std::string_view("foobar")) == 0x85944171f73967e8ULL);
}
