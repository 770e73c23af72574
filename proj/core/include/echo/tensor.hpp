// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace echo {
class Rng;
}

namespace echo::nn {

struct TensorImpl {
  std::vector<int> shape;
  std::vector<double> data;   // row-major
  std::vector<double> grad;   // empty until touched; then same length as data
  bool requires_grad = false;

  // reverse-mode record; present only on op outputs that require grad
  std::vector<std::shared_ptr<TensorImpl>> parents;
  std::function<void(TensorImpl&)> backward_fn;

  size_t numel() const { return data.size(); }
  std::vector<double>& grad_ref();  // allocates zeros on first use
};

// Shared-handle tensor. Copies alias the same storage; ops build the autodiff
// graph when gradients are enabled and any input requires them.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
  static Tensor from_vector(std::vector<double> data, std::vector<int> shape,
                            bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  // truncated normal (|z| <= 2 sigma), the projection initializer
  static Tensor randn_trunc(std::vector<int> shape, double stddev, Rng& rng,
                            bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const { return impl_->shape; }
  size_t numel() const { return impl_->numel(); }
  int rows() const;  // 2-D only
  int cols() const;

  double* data() { return impl_->data.data(); }
  const double* data() const { return impl_->data.data(); }
  std::vector<double>& values() { return impl_->data; }
  const std::vector<double>& values() const { return impl_->data; }
  double item() const;  // scalar tensors only

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }
  std::vector<double>& grad() { return impl_->grad_ref(); }
  void zero_grad();

  // Reverse-mode pass from a scalar loss. Gradients accumulate into every
  // reachable tensor with requires_grad set; leaves keep accumulating across
  // calls until zero_grad().
  void backward();

  Tensor detached_copy(bool requires_grad = false) const;

  std::shared_ptr<TensorImpl>& impl() { return impl_; }
  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

  static Tensor wrap(std::shared_ptr<TensorImpl> impl);

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// RAII switch that disables graph recording on the current thread (teacher
// forward passes, embedding extraction, finite-difference probes).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

bool grad_enabled();

std::string shape_str(const std::vector<int>& shape);

}  // namespace echo::nn
