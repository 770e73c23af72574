// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "echo/ops.hpp"

#include <cmath>
#include <numbers>

#include "echo/errors.hpp"

namespace echo::nn {

namespace detail {
std::atomic<bool> perturb_gelu_gradient{false};
}

namespace {

using Impl = std::shared_ptr<TensorImpl>;

bool recording(std::initializer_list<const Tensor*> inputs) {
  if (!grad_enabled()) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

Tensor make_op(std::vector<int> shape, std::vector<double> data, bool record,
               std::vector<Impl> parents, std::function<void(TensorImpl&)> fn) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  if (record) {
    impl->requires_grad = true;
    impl->parents = std::move(parents);
    impl->backward_fn = std::move(fn);
  }
  return Tensor::wrap(std::move(impl));
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw UsageError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                      shape_str(b.shape()));
  }
}

void check_2d(const Tensor& t, const char* op) {
  if (t.shape().size() != 2) {
    throw UsageError(std::string(op) + ": expected 2-D tensor, got " + shape_str(t.shape()));
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  const double* pa = a.data();
  const double* pb = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = pa[i] + pb[i];
  bool rec = recording({&a, &b});
  Impl ia = a.impl(), ib = b.impl();
  return make_op(a.shape(), std::move(out), rec, {ia, ib}, [ia, ib](TensorImpl& self) {
    const auto& g = self.grad;
    if (ia->requires_grad) {
      auto& ga = ia->grad_ref();
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (ib->requires_grad) {
      auto& gb = ib->grad_ref();
      for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  const double* pa = a.data();
  const double* pb = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = pa[i] - pb[i];
  bool rec = recording({&a, &b});
  Impl ia = a.impl(), ib = b.impl();
  return make_op(a.shape(), std::move(out), rec, {ia, ib}, [ia, ib](TensorImpl& self) {
    const auto& g = self.grad;
    if (ia->requires_grad) {
      auto& ga = ia->grad_ref();
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (ib->requires_grad) {
      auto& gb = ib->grad_ref();
      for (size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  const double* pa = a.data();
  const double* pb = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = pa[i] * pb[i];
  bool rec = recording({&a, &b});
  Impl ia = a.impl(), ib = b.impl();
  return make_op(a.shape(), std::move(out), rec, {ia, ib}, [ia, ib](TensorImpl& self) {
    const auto& g = self.grad;
    if (ia->requires_grad) {
      auto& ga = ia->grad_ref();
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * ib->data[i];
    }
    if (ib->requires_grad) {
      auto& gb = ib->grad_ref();
      for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * ia->data[i];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  const double* pa = a.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = pa[i] * c;
  bool rec = recording({&a});
  Impl ia = a.impl();
  return make_op(a.shape(), std::move(out), rec, {ia}, [ia, c](TensorImpl& self) {
    auto& ga = ia->grad_ref();
    for (size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * c;
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul");
  check_2d(b, "matmul");
  const int n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k) {
    throw UsageError("matmul: inner dimensions disagree " + shape_str(a.shape()) + " * " +
                      shape_str(b.shape()));
  }
  std::vector<double> out(static_cast<size_t>(n) * m, 0.0);
  const double* pa = a.data();
  const double* pb = b.data();
  for (int i = 0; i < n; ++i) {
    for (int kk = 0; kk < k; ++kk) {
      const double aik = pa[static_cast<size_t>(i) * k + kk];
      if (aik == 0.0) continue;
      const double* brow = pb + static_cast<size_t>(kk) * m;
      double* orow = out.data() + static_cast<size_t>(i) * m;
      for (int j = 0; j < m; ++j) orow[j] += aik * brow[j];
    }
  }
  bool rec = recording({&a, &b});
  Impl ia = a.impl(), ib = b.impl();
  return make_op({n, m}, std::move(out), rec, {ia, ib}, [ia, ib, n, k, m](TensorImpl& self) {
    const double* g = self.grad.data();
    if (ia->requires_grad) {
      auto& ga = ia->grad_ref();
      // dA[i][kk] = dot(G row i, B row kk)
      for (int i = 0; i < n; ++i) {
        const double* grow = g + static_cast<size_t>(i) * m;
        for (int kk = 0; kk < k; ++kk) {
          const double* brow = ib->data.data() + static_cast<size_t>(kk) * m;
          double acc = 0.0;
          for (int j = 0; j < m; ++j) acc += grow[j] * brow[j];
          ga[static_cast<size_t>(i) * k + kk] += acc;
        }
      }
    }
    if (ib->requires_grad) {
      auto& gb = ib->grad_ref();
      // dB[kk][j] = sum_i A[i][kk] * G[i][j]
      for (int i = 0; i < n; ++i) {
        const double* grow = g + static_cast<size_t>(i) * m;
        for (int kk = 0; kk < k; ++kk) {
          const double aik = ia->data[static_cast<size_t>(i) * k + kk];
          if (aik == 0.0) continue;
          double* gbrow = gb.data() + static_cast<size_t>(kk) * m;
          for (int j = 0; j < m; ++j) gbrow[j] += aik * grow[j];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  check_2d(a, "transpose");
  const int n = a.rows(), m = a.cols();
  std::vector<double> out(a.numel());
  const double* pa = a.data();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      out[static_cast<size_t>(j) * n + i] = pa[static_cast<size_t>(i) * m + j];
    }
  }
  bool rec = recording({&a});
  Impl ia = a.impl();
  return make_op({m, n}, std::move(out), rec, {ia}, [ia, n, m](TensorImpl& self) {
    auto& ga = ia->grad_ref();
    const double* g = self.grad.data();
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < n; ++i) {
        ga[static_cast<size_t>(i) * m + j] += g[static_cast<size_t>(j) * n + i];
      }
    }
  });
}

Tensor add_row_broadcast(const Tensor& x, const Tensor& v) {
  check_2d(x, "add_row_broadcast");
  if (v.shape().size() != 1 || v.shape()[0] != x.cols()) {
    throw UsageError("add_row_broadcast: vector length " + shape_str(v.shape()) +
                      " does not match row width " + shape_str(x.shape()));
  }
  const int n = x.rows(), d = x.cols();
  std::vector<double> out(x.numel());
  const double* px = x.data();
  const double* pv = v.data();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      out[static_cast<size_t>(i) * d + j] = px[static_cast<size_t>(i) * d + j] + pv[j];
    }
  }
  bool rec = recording({&x, &v});
  Impl ix = x.impl(), iv = v.impl();
  return make_op(x.shape(), std::move(out), rec, {ix, iv}, [ix, iv, n, d](TensorImpl& self) {
    const double* g = self.grad.data();
    if (ix->requires_grad) {
      auto& gx = ix->grad_ref();
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
    }
    if (iv->requires_grad) {
      auto& gv = iv->grad_ref();
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) gv[j] += g[static_cast<size_t>(i) * d + j];
      }
    }
  });
}

Tensor mul_rows(const Tensor& x, const std::vector<double>& row_coeffs) {
  check_2d(x, "mul_rows");
  const int n = x.rows(), d = x.cols();
  if (row_coeffs.size() != static_cast<size_t>(n)) {
    throw UsageError("mul_rows: coefficient count does not match row count");
  }
  std::vector<double> out(x.numel());
  const double* px = x.data();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      out[static_cast<size_t>(i) * d + j] = px[static_cast<size_t>(i) * d + j] * row_coeffs[i];
    }
  }
  bool rec = recording({&x});
  Impl ix = x.impl();
  auto coeffs = row_coeffs;
  return make_op(x.shape(), std::move(out), rec, {ix},
                 [ix, coeffs = std::move(coeffs), n, d](TensorImpl& self) {
                   auto& gx = ix->grad_ref();
                   const double* g = self.grad.data();
                   for (int i = 0; i < n; ++i) {
                     for (int j = 0; j < d; ++j) {
                       gx[static_cast<size_t>(i) * d + j] +=
                           g[static_cast<size_t>(i) * d + j] * coeffs[static_cast<size_t>(i)];
                     }
                   }
                 });
}

Tensor slice_cols(const Tensor& x, int start, int len) {
  check_2d(x, "slice_cols");
  const int n = x.rows(), d = x.cols();
  if (start < 0 || len < 1 || start + len > d) throw UsageError("slice_cols: range out of bounds");
  std::vector<double> out(static_cast<size_t>(n) * len);
  const double* px = x.data();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < len; ++j) {
      out[static_cast<size_t>(i) * len + j] = px[static_cast<size_t>(i) * d + start + j];
    }
  }
  bool rec = recording({&x});
  Impl ix = x.impl();
  return make_op({n, len}, std::move(out), rec, {ix}, [ix, start, len, n, d](TensorImpl& self) {
    auto& gx = ix->grad_ref();
    const double* g = self.grad.data();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < len; ++j) {
        gx[static_cast<size_t>(i) * d + start + j] += g[static_cast<size_t>(i) * len + j];
      }
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw UsageError("concat_cols: no inputs");
  const int n = parts[0].rows();
  int d = 0;
  for (const Tensor& t : parts) {
    check_2d(t, "concat_cols");
    if (t.rows() != n) throw UsageError("concat_cols: row counts disagree");
    d += t.cols();
  }
  std::vector<double> out(static_cast<size_t>(n) * d);
  int off = 0;
  for (const Tensor& t : parts) {
    const int w = t.cols();
    const double* pt = t.data();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < w; ++j) {
        out[static_cast<size_t>(i) * d + off + j] = pt[static_cast<size_t>(i) * w + j];
      }
    }
    off += w;
  }
  bool rec = false;
  std::vector<Impl> parents;
  for (const Tensor& t : parts) {
    parents.push_back(t.impl());
    if (t.requires_grad()) rec = true;
  }
  rec = rec && grad_enabled();
  return make_op({n, d}, std::move(out), rec, parents, [parents, n, d](TensorImpl& self) {
    const double* g = self.grad.data();
    int off = 0;
    for (const Impl& p : parents) {
      const int w = p->shape[1];
      if (p->requires_grad) {
        auto& gp = p->grad_ref();
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < w; ++j) {
            gp[static_cast<size_t>(i) * w + j] += g[static_cast<size_t>(i) * d + off + j];
          }
        }
      }
      off += w;
    }
  });
}

Tensor slice_rows(const Tensor& x, int start, int len) {
  check_2d(x, "slice_rows");
  const int n = x.rows(), d = x.cols();
  if (start < 0 || len < 1 || start + len > n) throw UsageError("slice_rows: range out of bounds");
  std::vector<double> out(static_cast<size_t>(len) * d);
  const double* px = x.data();
  std::copy(px + static_cast<size_t>(start) * d, px + static_cast<size_t>(start + len) * d,
            out.begin());
  bool rec = recording({&x});
  Impl ix = x.impl();
  return make_op({len, d}, std::move(out), rec, {ix}, [ix, start, len, d](TensorImpl& self) {
    auto& gx = ix->grad_ref();
    const double* g = self.grad.data();
    for (size_t i = 0; i < static_cast<size_t>(len) * d; ++i) {
      gx[static_cast<size_t>(start) * d + i] += g[i];
    }
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw UsageError("concat_rows: no inputs");
  const int d = parts[0].cols();
  int n = 0;
  for (const Tensor& t : parts) {
    check_2d(t, "concat_rows");
    if (t.cols() != d) throw UsageError("concat_rows: column counts disagree");
    n += t.rows();
  }
  std::vector<double> out;
  out.reserve(static_cast<size_t>(n) * d);
  for (const Tensor& t : parts) out.insert(out.end(), t.data(), t.data() + t.numel());
  bool rec = false;
  std::vector<Impl> parents;
  for (const Tensor& t : parts) {
    parents.push_back(t.impl());
    if (t.requires_grad()) rec = true;
  }
  rec = rec && grad_enabled();
  return make_op({n, d}, std::move(out), rec, parents, [parents, d](TensorImpl& self) {
    const double* g = self.grad.data();
    size_t off = 0;
    for (const Impl& p : parents) {
      const size_t cnt = p->numel();
      if (p->requires_grad) {
        auto& gp = p->grad_ref();
        for (size_t i = 0; i < cnt; ++i) gp[i] += g[off + i];
      }
      off += cnt;
    }
  });
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& indices) {
  check_2d(x, "gather_rows");
  const int n = x.rows(), d = x.cols();
  for (int idx : indices) {
    if (idx < 0 || idx >= n) throw UsageError("gather_rows: index out of range");
  }
  std::vector<double> out(indices.size() * static_cast<size_t>(d));
  const double* px = x.data();
  for (size_t r = 0; r < indices.size(); ++r) {
    std::copy(px + static_cast<size_t>(indices[r]) * d, px + static_cast<size_t>(indices[r] + 1) * d,
              out.begin() + static_cast<long>(r * static_cast<size_t>(d)));
  }
  bool rec = recording({&x});
  Impl ix = x.impl();
  auto idx = indices;
  return make_op({static_cast<int>(indices.size()), d}, std::move(out), rec, {ix},
                 [ix, idx = std::move(idx), d](TensorImpl& self) {
                   auto& gx = ix->grad_ref();
                   const double* g = self.grad.data();
                   for (size_t r = 0; r < idx.size(); ++r) {
                     for (int j = 0; j < d; ++j) {
                       gx[static_cast<size_t>(idx[r]) * d + j] += g[r * static_cast<size_t>(d) + j];
                     }
                   }
                 });
}

Tensor reshape(const Tensor& x, std::vector<int> shape) {
  size_t n = 1;
  for (int v : shape) n *= static_cast<size_t>(v);
  if (n != x.numel()) {
    throw UsageError("reshape: element count mismatch for " + shape_str(shape));
  }
  std::vector<double> out(x.data(), x.data() + x.numel());
  bool rec = recording({&x});
  Impl ix = x.impl();
  return make_op(std::move(shape), std::move(out), rec, {ix}, [ix](TensorImpl& self) {
    auto& gx = ix->grad_ref();
    for (size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
  });
}

Tensor softmax_rows(const Tensor& x) {
  check_2d(x, "softmax_rows");
  const int n = x.rows(), d = x.cols();
  std::vector<double> out(x.numel());
  const double* px = x.data();
  for (int i = 0; i < n; ++i) {
    const double* row = px + static_cast<size_t>(i) * d;
    double mx = row[0];
    for (int j = 1; j < d; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    double* orow = out.data() + static_cast<size_t>(i) * d;
    for (int j = 0; j < d; ++j) {
      orow[j] = std::exp(row[j] - mx);
      sum += orow[j];
    }
    for (int j = 0; j < d; ++j) orow[j] /= sum;
  }
  bool rec = recording({&x});
  Impl ix = x.impl();
  return make_op(x.shape(), std::move(out), rec, {ix}, [ix, n, d](TensorImpl& self) {
    auto& gx = ix->grad_ref();
    const double* g = self.grad.data();
    const double* y = self.data.data();
    for (int i = 0; i < n; ++i) {
      const double* grow = g + static_cast<size_t>(i) * d;
      const double* yrow = y + static_cast<size_t>(i) * d;
      double dot = 0.0;
      for (int j = 0; j < d; ++j) dot += grow[j] * yrow[j];
      double* gxrow = gx.data() + static_cast<size_t>(i) * d;
      for (int j = 0; j < d; ++j) gxrow[j] += yrow[j] * (grow[j] - dot);
    }
  });
}

Tensor gelu(const Tensor& x) {
  std::vector<double> out(x.numel());
  const double* px = x.data();
  constexpr double inv_sqrt2 = std::numbers::sqrt2 / 2.0;
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = 0.5 * px[i] * (1.0 + std::erf(px[i] * inv_sqrt2));
  }
  bool rec = recording({&x});
  Impl ix = x.impl();
  return make_op(x.shape(), std::move(out), rec, {ix}, [ix](TensorImpl& self) {
    auto& gx = ix->grad_ref();
    constexpr double inv_sqrt2 = std::numbers::sqrt2 / 2.0;
    const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    const double skew = detail::perturb_gelu_gradient.load() ? 1.01 : 1.0;
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double v = ix->data[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
      const double pdf = inv_sqrt2pi * std::exp(-0.5 * v * v);
      gx[i] += self.grad[i] * (cdf + v * pdf) * skew;
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  check_2d(x, "layer_norm");
  const int n = x.rows(), d = x.cols();
  if (gain.shape() != std::vector<int>{d} || bias.shape() != std::vector<int>{d}) {
    throw UsageError("layer_norm: gain/bias must be vectors of row width");
  }
  std::vector<double> out(x.numel());
  std::vector<double> xhat(x.numel());
  std::vector<double> inv_std(static_cast<size_t>(n));
  const double* px = x.data();
  const double* pg = gain.data();
  const double* pb = bias.data();
  for (int i = 0; i < n; ++i) {
    const double* row = px + static_cast<size_t>(i) * d;
    double mean = 0.0;
    for (int j = 0; j < d; ++j) mean += row[j];
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= d;
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<size_t>(i)] = inv;
    for (int j = 0; j < d; ++j) {
      const size_t k = static_cast<size_t>(i) * d + j;
      xhat[k] = (row[j] - mean) * inv;
      out[k] = pg[j] * xhat[k] + pb[j];
    }
  }
  bool rec = recording({&x, &gain, &bias});
  Impl ix = x.impl(), ig = gain.impl(), ib = bias.impl();
  return make_op(x.shape(), std::move(out), rec, {ix, ig, ib},
                 [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std), n,
                  d](TensorImpl& self) {
                   const double* g = self.grad.data();
                   if (ig->requires_grad) {
                     auto& gg = ig->grad_ref();
                     for (int i = 0; i < n; ++i) {
                       for (int j = 0; j < d; ++j) {
                         gg[j] += g[static_cast<size_t>(i) * d + j] *
                                  xhat[static_cast<size_t>(i) * d + j];
                       }
                     }
                   }
                   if (ib->requires_grad) {
                     auto& gb = ib->grad_ref();
                     for (int i = 0; i < n; ++i) {
                       for (int j = 0; j < d; ++j) gb[j] += g[static_cast<size_t>(i) * d + j];
                     }
                   }
                   if (ix->requires_grad) {
                     auto& gx = ix->grad_ref();
                     std::vector<double> t(static_cast<size_t>(d));
                     for (int i = 0; i < n; ++i) {
                       const double* grow = g + static_cast<size_t>(i) * d;
                       const double* xrow = xhat.data() + static_cast<size_t>(i) * d;
                       double mean_t = 0.0, mean_tx = 0.0;
                       for (int j = 0; j < d; ++j) {
                         t[static_cast<size_t>(j)] = grow[j] * ig->data[static_cast<size_t>(j)];
                         mean_t += t[static_cast<size_t>(j)];
                         mean_tx += t[static_cast<size_t>(j)] * xrow[j];
                       }
                       mean_t /= d;
                       mean_tx /= d;
                       const double inv = inv_std[static_cast<size_t>(i)];
                       double* gxrow = gx.data() + static_cast<size_t>(i) * d;
                       for (int j = 0; j < d; ++j) {
                         gxrow[j] += inv * (t[static_cast<size_t>(j)] - mean_t - xrow[j] * mean_tx);
                       }
                     }
                   }
                 });
}

Tensor sum_all(const Tensor& x) {
  double s = 0.0;
  for (size_t i = 0; i < x.numel(); ++i) s += x.data()[i];
  bool rec = recording({&x});
  Impl ix = x.impl();
  return make_op({1}, {s}, rec, {ix}, [ix](TensorImpl& self) {
    auto& gx = ix->grad_ref();
    const double g = self.grad[0];
    for (double& v : gx) v += g;
  });
}

Tensor mean_all(const Tensor& x) {
  const double inv = 1.0 / static_cast<double>(x.numel());
  double s = 0.0;
  for (size_t i = 0; i < x.numel(); ++i) s += x.data()[i];
  s *= inv;
  bool rec = recording({&x});
  Impl ix = x.impl();
  return make_op({1}, {s}, rec, {ix}, [ix, inv](TensorImpl& self) {
    auto& gx = ix->grad_ref();
    const double g = self.grad[0] * inv;
    for (double& v : gx) v += g;
  });
}

Tensor mse(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mse");
  const double inv = 1.0 / static_cast<double>(a.numel());
  double s = 0.0;
  const double* pa = a.data();
  const double* pb = b.data();
  for (size_t i = 0; i < a.numel(); ++i) {
    const double diff = pa[i] - pb[i];
    s += diff * diff;
  }
  s *= inv;
  bool rec = recording({&a, &b});
  Impl ia = a.impl(), ib = b.impl();
  return make_op({1}, {s}, rec, {ia, ib}, [ia, ib, inv](TensorImpl& self) {
    const double g = self.grad[0];
    if (ia->requires_grad) {
      auto& ga = ia->grad_ref();
      for (size_t i = 0; i < ga.size(); ++i) {
        ga[i] += g * 2.0 * inv * (ia->data[i] - ib->data[i]);
      }
    }
    if (ib->requires_grad) {
      auto& gb = ib->grad_ref();
      for (size_t i = 0; i < gb.size(); ++i) {
        gb[i] -= g * 2.0 * inv * (ia->data[i] - ib->data[i]);
      }
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_row_broadcast(matmul(x, w), b);
}

Tensor multi_head_attention(const Tensor& x, const AttentionParams& p, int heads) {
  check_2d(x, "multi_head_attention");
  const int d = x.cols();
  if (heads < 1 || d % heads != 0) {
    throw UsageError("multi_head_attention: embed dim not divisible by head count");
  }
  const int dh = d / heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor q = linear(x, p.wq, p.bq);
  Tensor k = linear(x, p.wk, p.bk);
  Tensor v = linear(x, p.wv, p.bv);

  std::vector<Tensor> head_outputs;
  head_outputs.reserve(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Tensor qh = slice_cols(q, h * dh, dh);
    Tensor kh = slice_cols(k, h * dh, dh);
    Tensor vh = slice_cols(v, h * dh, dh);
    Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt_dh);
    Tensor attn = softmax_rows(scores);
    head_outputs.push_back(matmul(attn, vh));
  }
  Tensor merged = heads == 1 ? head_outputs[0] : concat_cols(head_outputs);
  return linear(merged, p.wo, p.bo);
}

Tensor transformer_block(const Tensor& x, const BlockParams& p, int heads, double ln_eps) {
  Tensor h1 = layer_norm(x, p.ln1_gain, p.ln1_bias, ln_eps);
  Tensor after_attn = add(x, multi_head_attention(h1, p.attn, heads));
  Tensor h2 = layer_norm(after_attn, p.ln2_gain, p.ln2_bias, ln_eps);
  Tensor hidden = gelu(linear(h2, p.mlp_w1, p.mlp_b1));
  return add(after_attn, linear(hidden, p.mlp_w2, p.mlp_b2));
}

}  // namespace echo::nn
