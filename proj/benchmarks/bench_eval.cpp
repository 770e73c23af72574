// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <benchmark/benchmark.h>

#include "echo/evaluation.hpp"
#include "echo/rng.hpp"

namespace {

echo::EmbeddingSet make_set(int m, int e, uint64_t seed) {
  echo::EmbeddingSet set;
  echo::Rng rng(seed);
  for (int i = 0; i < m; ++i) {
    std::vector<double> v(e);
    for (double& x : v) x = rng.normal();
    set.append("id" + std::to_string(i), v, i % 2 == 0 ? "a" : "b");
  }
  return set;
}

void BM_KnnAnomalyScore(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const echo::EmbeddingSet train = make_set(m, 384, 1);
  const echo::EmbeddingSet query = make_set(1, 384, 2);
  const std::vector<double> q(query.row(0), query.row(0) + query.E);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        echo::knn_anomaly_score(train, q, 1, echo::Distance::kEuclidean, true));
  }
}
BENCHMARK(BM_KnnAnomalyScore)->Arg(100)->Arg(1000);

void BM_RocAuc(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  echo::Rng rng(3);
  std::vector<double> neg(n);
  std::vector<double> pos(n);
  for (double& v : neg) v = rng.normal();
  for (double& v : pos) v = rng.normal() + 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(echo::roc_auc(neg, pos));
  }
}
BENCHMARK(BM_RocAuc)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
