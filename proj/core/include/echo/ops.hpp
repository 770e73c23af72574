// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <atomic>
#include <vector>

#include "echo/tensor.hpp"

namespace echo::nn {

// elementwise, same shape
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);

// 2-D
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add_row_broadcast(const Tensor& x, const Tensor& v);  // v added to every row
Tensor mul_rows(const Tensor& x, const std::vector<double>& row_coeffs);  // constants
Tensor slice_cols(const Tensor& x, int start, int len);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& x, int start, int len);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor gather_rows(const Tensor& x, const std::vector<int>& indices);
Tensor reshape(const Tensor& x, std::vector<int> shape);

// nonlinearities / normalization
Tensor softmax_rows(const Tensor& x);
Tensor gelu(const Tensor& x);  // exact erf form
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

// reductions / losses
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);
Tensor mse(const Tensor& a, const Tensor& b);  // mean over all elements

// x [n x in] * w [in x out] + b [out]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

struct AttentionParams {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
};

// Pre-norm ViT attention: per-head softmax(Q K^T / sqrt(d/h)) V, heads
// concatenated, output projection applied. No causal mask.
Tensor multi_head_attention(const Tensor& x, const AttentionParams& p, int heads);

struct BlockParams {
  Tensor ln1_gain, ln1_bias;
  AttentionParams attn;
  Tensor ln2_gain, ln2_bias;
  Tensor mlp_w1, mlp_b1, mlp_w2, mlp_b2;
};

// x + MHA(LN(x)); then y + MLP(LN(y)) with GELU.
Tensor transformer_block(const Tensor& x, const BlockParams& p, int heads,
                         double ln_eps = 1e-5);

namespace detail {
// Self-check negative control: skews the gelu derivative so the
// finite-difference suite must flag it. Never set outside self-check.
extern std::atomic<bool> perturb_gelu_gradient;
}  // namespace detail

}  // namespace echo::nn
