// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "echo/errors.hpp"
#include "echo/ops.hpp"
#include "echo/params.hpp"
#include "echo/rng.hpp"
#include "echo/tensor.hpp"

using echo::nn::Tensor;

namespace {

// ----- dense-loop references, straight from the math, no shared code -------

std::vector<double> ref_matmul(const std::vector<double>& a, const std::vector<double>& b,
                               int n, int k, int m) {
  std::vector<double> out(static_cast<size_t>(n) * m, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int c = 0; c < k; ++c) acc += a[i * k + c] * b[c * m + j];
      out[i * m + j] = acc;
    }
  }
  return out;
}

std::vector<double> ref_softmax_rows(const std::vector<double>& x, int n, int m) {
  std::vector<double> out(x.size());
  for (int i = 0; i < n; ++i) {
    double mx = x[i * m];
    for (int j = 1; j < m; ++j) mx = std::max(mx, x[i * m + j]);
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
      out[i * m + j] = std::exp(x[i * m + j] - mx);
      sum += out[i * m + j];
    }
    for (int j = 0; j < m; ++j) out[i * m + j] /= sum;
  }
  return out;
}

std::vector<double> ref_layer_norm(const std::vector<double>& x, const std::vector<double>& g,
                                   const std::vector<double>& b, int n, int m, double eps) {
  std::vector<double> out(x.size());
  for (int i = 0; i < n; ++i) {
    double mean = 0.0;
    for (int j = 0; j < m; ++j) mean += x[i * m + j];
    mean /= m;
    double var = 0.0;
    for (int j = 0; j < m; ++j) {
      const double d = x[i * m + j] - mean;
      var += d * d;
    }
    var /= m;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < m; ++j) out[i * m + j] = (x[i * m + j] - mean) * inv * g[j] + b[j];
  }
  return out;
}

double ref_gelu(double v) { return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))); }

struct RefAttn {
  std::vector<double> wq, wk, wv, wo;  // d x d
  std::vector<double> bq, bk, bv, bo;  // d
};

std::vector<double> ref_linear(const std::vector<double>& x, const std::vector<double>& w,
                               const std::vector<double>& b, int n, int d_in, int d_out) {
  std::vector<double> out = ref_matmul(x, w, n, d_in, d_out);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d_out; ++j) out[i * d_out + j] += b[j];
  }
  return out;
}

std::vector<double> ref_mha(const std::vector<double>& x, const RefAttn& p, int n, int d,
                            int heads) {
  const int dh = d / heads;
  const std::vector<double> q = ref_linear(x, p.wq, p.bq, n, d, d);
  const std::vector<double> k = ref_linear(x, p.wk, p.bk, n, d, d);
  const std::vector<double> v = ref_linear(x, p.wv, p.bv, n, d, d);
  std::vector<double> ctx(static_cast<size_t>(n) * d, 0.0);
  for (int h = 0; h < heads; ++h) {
    std::vector<double> scores(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int c = 0; c < dh; ++c) acc += q[i * d + h * dh + c] * k[j * d + h * dh + c];
        scores[i * n + j] = acc / std::sqrt(static_cast<double>(dh));
      }
    }
    const std::vector<double> attn = ref_softmax_rows(scores, n, n);
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < dh; ++c) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += attn[i * n + j] * v[j * d + h * dh + c];
        ctx[i * d + h * dh + c] = acc;
      }
    }
  }
  return ref_linear(ctx, p.wo, p.bo, n, d, d);
}

Tensor rand_tensor(std::vector<int> shape, echo::Rng& rng, bool requires_grad = false,
                   double scale = 1.0) {
  size_t n = 1;
  for (int s : shape) n *= static_cast<size_t>(s);
  std::vector<double> data(n);
  for (double& v : data) v = rng.uniform(-scale, scale);
  return Tensor::from_vector(std::move(data), std::move(shape), requires_grad);
}

bool fd_ok(const std::function<Tensor()>& loss,
           const std::vector<std::pair<std::string, Tensor>>& params, int coords = 20) {
  echo::Rng rng(777);
  const echo::nn::GradCheckReport rep =
      echo::nn::finite_difference_check(loss, params, rng, coords);
  if (!rep.pass) {
    for (const echo::nn::GradCheckIssue& f : rep.failures) {
      MESSAGE("fd mismatch at ", f.param, "[", f.index, "]: analytic ", f.analytic,
              " numeric ", f.numeric, " rel ", f.rel_err);
    }
  }
  return rep.pass;
}

}  // namespace

TEST_CASE("matmul forward matches the loop reference") {
  echo::Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(6));
    const int k = 1 + static_cast<int>(rng.uniform_int(6));
    const int m = 1 + static_cast<int>(rng.uniform_int(6));
    Tensor a = rand_tensor({n, k}, rng);
    Tensor b = rand_tensor({k, m}, rng);
    const Tensor c = echo::nn::matmul(a, b);
    const auto want = ref_matmul(a.values(), b.values(), n, k, m);
    REQUIRE(c.values().size() == want.size());
    for (size_t i = 0; i < want.size(); ++i) {
      CHECK(c.values()[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("softmax rows sum to one and match the reference") {
  echo::Rng rng(2);
  Tensor x = rand_tensor({5, 7}, rng, false, 4.0);
  const Tensor s = echo::nn::softmax_rows(x);
  const auto want = ref_softmax_rows(x.values(), 5, 7);
  for (size_t i = 0; i < want.size(); ++i) {
    CHECK(s.values()[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
  for (int i = 0; i < 5; ++i) {
    double sum = 0.0;
    for (int j = 0; j < 7; ++j) sum += s.values()[i * 7 + j];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("layer norm normalizes rows and matches the reference") {
  echo::Rng rng(3);
  Tensor x = rand_tensor({4, 9}, rng, false, 3.0);
  Tensor g = rand_tensor({9}, rng);
  Tensor b = rand_tensor({9}, rng);
  const Tensor out = echo::nn::layer_norm(x, g, b, 1e-5);
  const auto want = ref_layer_norm(x.values(), g.values(), b.values(), 4, 9, 1e-5);
  for (size_t i = 0; i < want.size(); ++i) {
    CHECK(out.values()[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
  // With unit gain and zero bias, rows come out zero-mean.
  Tensor ones = Tensor::full({9}, 1.0);
  Tensor zeros = Tensor::zeros({9});
  const Tensor norm = echo::nn::layer_norm(x, ones, zeros, 1e-12);
  for (int i = 0; i < 4; ++i) {
    double mean = 0.0;
    for (int j = 0; j < 9; ++j) mean += norm.values()[i * 9 + j];
    CHECK(std::abs(mean / 9.0) < 1e-9);
  }
}

TEST_CASE("gelu matches the exact erf form") {
  echo::Rng rng(4);
  Tensor x = rand_tensor({3, 5}, rng, false, 3.0);
  const Tensor y = echo::nn::gelu(x);
  for (size_t i = 0; i < x.values().size(); ++i) {
    CHECK(y.values()[i] == doctest::Approx(ref_gelu(x.values()[i])).epsilon(1e-12));
  }
  CHECK(echo::nn::gelu(Tensor::scalar(0.0)).item() == 0.0);
}

TEST_CASE("multi-head attention matches the dense-loop reference within 1e-9") {
  echo::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int heads_pool[] = {1, 2, 4};
    const int heads = heads_pool[rng.uniform_int(3)];
    const int dh = 1 + static_cast<int>(rng.uniform_int(4));
    const int d = heads * dh;
    const int n = 1 + static_cast<int>(rng.uniform_int(8));
    if (d > 16) continue;

    Tensor x = rand_tensor({n, d}, rng);
    echo::nn::AttentionParams p;
    p.wq = rand_tensor({d, d}, rng);
    p.wk = rand_tensor({d, d}, rng);
    p.wv = rand_tensor({d, d}, rng);
    p.wo = rand_tensor({d, d}, rng);
    p.bq = rand_tensor({d}, rng);
    p.bk = rand_tensor({d}, rng);
    p.bv = rand_tensor({d}, rng);
    p.bo = rand_tensor({d}, rng);

    RefAttn rp{p.wq.values(), p.wk.values(), p.wv.values(), p.wo.values(),
               p.bq.values(), p.bk.values(), p.bv.values(), p.bo.values()};
    const Tensor got = echo::nn::multi_head_attention(x, p, heads);
    const auto want = ref_mha(x.values(), rp, n, d, heads);
    REQUIRE(got.values().size() == want.size());
    for (size_t i = 0; i < want.size(); ++i) {
      CHECK(got.values()[i] == doctest::Approx(want[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("transformer block matches a from-scratch reference within 1e-9") {
  echo::Rng rng(6);
  for (int trial = 0; trial < 25; ++trial) {
    const int heads = 2;
    const int d = 8;
    const int n = 1 + static_cast<int>(rng.uniform_int(8));
    const int hidden = 4 * d;

    Tensor x = rand_tensor({n, d}, rng);
    echo::nn::BlockParams bp;
    bp.ln1_gain = rand_tensor({d}, rng);
    bp.ln1_bias = rand_tensor({d}, rng);
    bp.ln2_gain = rand_tensor({d}, rng);
    bp.ln2_bias = rand_tensor({d}, rng);
    bp.attn.wq = rand_tensor({d, d}, rng);
    bp.attn.wk = rand_tensor({d, d}, rng);
    bp.attn.wv = rand_tensor({d, d}, rng);
    bp.attn.wo = rand_tensor({d, d}, rng);
    bp.attn.bq = rand_tensor({d}, rng);
    bp.attn.bk = rand_tensor({d}, rng);
    bp.attn.bv = rand_tensor({d}, rng);
    bp.attn.bo = rand_tensor({d}, rng);
    bp.mlp_w1 = rand_tensor({d, hidden}, rng);
    bp.mlp_b1 = rand_tensor({hidden}, rng);
    bp.mlp_w2 = rand_tensor({hidden, d}, rng);
    bp.mlp_b2 = rand_tensor({d}, rng);

    const Tensor got = echo::nn::transformer_block(x, bp, heads, 1e-5);

    // Reference: pre-norm residual block.
    const auto ln1 = ref_layer_norm(x.values(), bp.ln1_gain.values(), bp.ln1_bias.values(), n,
                                    d, 1e-5);
    RefAttn rp{bp.attn.wq.values(), bp.attn.wk.values(), bp.attn.wv.values(),
               bp.attn.wo.values(), bp.attn.bq.values(), bp.attn.bk.values(),
               bp.attn.bv.values(), bp.attn.bo.values()};
    const auto attn_out = ref_mha(ln1, rp, n, d, heads);
    std::vector<double> y(x.values());
    for (size_t i = 0; i < y.size(); ++i) y[i] += attn_out[i];

    const auto ln2 = ref_layer_norm(y, bp.ln2_gain.values(), bp.ln2_bias.values(), n, d, 1e-5);
    auto h = ref_linear(ln2, bp.mlp_w1.values(), bp.mlp_b1.values(), n, d, hidden);
    for (double& v : h) v = ref_gelu(v);
    const auto mlp_out = ref_linear(h, bp.mlp_w2.values(), bp.mlp_b2.values(), n, hidden, d);
    for (size_t i = 0; i < y.size(); ++i) y[i] += mlp_out[i];

    REQUIRE(got.values().size() == y.size());
    for (size_t i = 0; i < y.size(); ++i) {
      CHECK(got.values()[i] == doctest::Approx(y[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("elementwise and shape ops pass finite-difference checks") {
  echo::Rng rng(7);

  Tensor a = rand_tensor({3, 4}, rng, true);
  Tensor b = rand_tensor({3, 4}, rng, true);
  CHECK(fd_ok([=]() { return echo::nn::mean_all(echo::nn::mul(echo::nn::add(a, b),
                                                              echo::nn::sub(a, b))); },
              {{"a", a}, {"b", b}}));

  Tensor c = rand_tensor({2, 6}, rng, true);
  CHECK(fd_ok([=]() { return echo::nn::sum_all(echo::nn::scale(c, 1.7)); }, {{"c", c}}));

  Tensor m1 = rand_tensor({3, 5}, rng, true);
  Tensor m2 = rand_tensor({5, 2}, rng, true);
  CHECK(fd_ok([=]() { return echo::nn::mean_all(echo::nn::matmul(m1, m2)); },
              {{"m1", m1}, {"m2", m2}}));

  Tensor tr = rand_tensor({4, 3}, rng, true);
  CHECK(fd_ok(
      [=]() { return echo::nn::mean_all(echo::nn::matmul(echo::nn::transpose(tr), tr)); },
      {{"tr", tr}}));

  Tensor x = rand_tensor({4, 6}, rng, true);
  Tensor v = rand_tensor({6}, rng, true);
  CHECK(fd_ok([=]() { return echo::nn::mean_all(echo::nn::add_row_broadcast(x, v)); },
              {{"x", x}, {"v", v}}));

  Tensor mr = rand_tensor({4, 3}, rng, true);
  std::vector<double> coeffs = {0.0, 1.0, 0.5, 2.0};
  CHECK(fd_ok([=]() { return echo::nn::mean_all(echo::nn::mul_rows(mr, coeffs)); },
              {{"mr", mr}}));

  Tensor sl = rand_tensor({5, 8}, rng, true);
  CHECK(fd_ok(
      [=]() {
        return echo::nn::mean_all(echo::nn::concat_rows(
            {echo::nn::slice_rows(sl, 0, 2), echo::nn::slice_rows(sl, 3, 2)}));
      },
      {{"sl", sl}}));
  CHECK(fd_ok(
      [=]() {
        return echo::nn::mean_all(echo::nn::concat_cols(
            {echo::nn::slice_cols(sl, 0, 3), echo::nn::slice_cols(sl, 4, 4)}));
      },
      {{"sl", sl}}));

  Tensor ga = rand_tensor({6, 4}, rng, true);
  std::vector<int> idx = {5, 0, 3, 3};
  CHECK(fd_ok([=]() { return echo::nn::mean_all(echo::nn::gather_rows(ga, idx)); },
              {{"ga", ga}}));

  Tensor rs = rand_tensor({3, 4}, rng, true);
  CHECK(fd_ok([=]() { return echo::nn::mean_all(echo::nn::reshape(rs, {6, 2})); },
              {{"rs", rs}}));
}

TEST_CASE("nonlinear ops pass finite-difference checks") {
  echo::Rng rng(8);

  Tensor x = rand_tensor({3, 5}, rng, true, 2.0);
  CHECK(fd_ok([=]() { return echo::nn::mean_all(echo::nn::gelu(x)); }, {{"x", x}}));

  Tensor s = rand_tensor({4, 6}, rng, true, 2.0);
  Tensor st = rand_tensor({4, 6}, rng);
  CHECK(fd_ok([=]() { return echo::nn::mse(echo::nn::softmax_rows(s), st); }, {{"s", s}}));

  Tensor ln = rand_tensor({4, 7}, rng, true, 2.0);
  Tensor g = rand_tensor({7}, rng, true);
  Tensor bi = rand_tensor({7}, rng, true);
  Tensor lt = rand_tensor({4, 7}, rng);
  CHECK(fd_ok([=]() { return echo::nn::mse(echo::nn::layer_norm(ln, g, bi, 1e-5), lt); },
              {{"ln", ln}, {"g", g}, {"bi", bi}}));

  Tensor w = rand_tensor({5, 3}, rng, true);
  Tensor b = rand_tensor({3}, rng, true);
  Tensor in = rand_tensor({4, 5}, rng);
  Tensor lt2 = rand_tensor({4, 3}, rng);
  CHECK(fd_ok([=]() { return echo::nn::mse(echo::nn::linear(in, w, b), lt2); },
              {{"w", w}, {"b", b}}));
}

TEST_CASE("attention and block pass finite-difference checks") {
  echo::Rng rng(9);
  const int d = 6;
  const int n = 4;
  Tensor x = rand_tensor({n, d}, rng, true);
  echo::nn::AttentionParams p;
  p.wq = rand_tensor({d, d}, rng, true, 0.5);
  p.wk = rand_tensor({d, d}, rng, true, 0.5);
  p.wv = rand_tensor({d, d}, rng, true, 0.5);
  p.wo = rand_tensor({d, d}, rng, true, 0.5);
  p.bq = rand_tensor({d}, rng, true, 0.5);
  p.bk = rand_tensor({d}, rng, true, 0.5);
  p.bv = rand_tensor({d}, rng, true, 0.5);
  p.bo = rand_tensor({d}, rng, true, 0.5);
  Tensor target = rand_tensor({n, d}, rng);
  CHECK(fd_ok(
      [=]() { return echo::nn::mse(echo::nn::multi_head_attention(x, p, 2), target); },
      {{"x", x},
       {"wq", p.wq},
       {"wk", p.wk},
       {"wv", p.wv},
       {"wo", p.wo},
       {"bq", p.bq},
       {"bk", p.bk},
       {"bv", p.bv},
       {"bo", p.bo}},
      8));
}

TEST_CASE("mse worked example and gradient accumulation across backward calls") {
  Tensor a = Tensor::from_vector({1.0, 2.0}, {1, 2}, true);
  Tensor b = Tensor::from_vector({0.0, 0.0}, {1, 2});
  const Tensor loss = echo::nn::mse(a, b);
  CHECK(loss.item() == doctest::Approx(2.5).epsilon(1e-15));

  Tensor l1 = echo::nn::mse(a, b);
  l1.backward();
  const std::vector<double> g1 = a.grad();
  Tensor l2 = echo::nn::mse(a, b);
  l2.backward();
  // Leaves accumulate: second pass doubles the gradient.
  CHECK(a.grad()[0] == doctest::Approx(2.0 * g1[0]).epsilon(1e-12));
  CHECK(a.grad()[1] == doctest::Approx(2.0 * g1[1]).epsilon(1e-12));
  a.zero_grad();
  CHECK(a.grad()[0] == 0.0);
}

TEST_CASE("backward is rejected on non-scalar and unrecorded tensors") {
  echo::Rng rng(10);
  Tensor x = rand_tensor({2, 2}, rng, true);
  CHECK_THROWS_AS(x.backward(), echo::UsageError);  // not a scalar loss

  Tensor frozen;
  {
    echo::nn::NoGradGuard guard;
    frozen = echo::nn::sum_all(rand_tensor({2, 2}, rng, true));
  }
  CHECK_THROWS_AS(frozen.backward(), echo::UsageError);  // no graph recorded
}

TEST_CASE("no-grad guard suppresses graph recording") {
  echo::Rng rng(11);
  Tensor x = rand_tensor({2, 3}, rng, true);
  CHECK(echo::nn::grad_enabled());
  {
    echo::nn::NoGradGuard guard;
    CHECK_FALSE(echo::nn::grad_enabled());
    const Tensor y = echo::nn::scale(x, 2.0);
    CHECK_FALSE(y.requires_grad());
  }
  CHECK(echo::nn::grad_enabled());
}

TEST_CASE("shape errors are rejected") {
  echo::Rng rng(12);
  Tensor a = rand_tensor({2, 3}, rng);
  Tensor b = rand_tensor({3, 2}, rng);
  CHECK_THROWS_AS(echo::nn::add(a, b), echo::UsageError);
  CHECK_THROWS_AS(echo::nn::matmul(a, a), echo::UsageError);
  CHECK_THROWS_AS(echo::nn::slice_rows(a, 1, 5), echo::UsageError);
  CHECK_THROWS_AS(echo::nn::reshape(a, {4, 2}), echo::UsageError);
}
