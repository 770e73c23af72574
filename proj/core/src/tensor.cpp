// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "echo/tensor.hpp"

#include <sstream>
#include <unordered_set>

#include "echo/errors.hpp"
#include "echo/rng.hpp"

namespace echo::nn {

namespace {
thread_local bool g_grad_enabled = true;

size_t shape_numel(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) n *= static_cast<size_t>(d);
  return n;
}
}  // namespace

std::vector<double>& TensorImpl::grad_ref() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
  for (int d : shape) {
    if (d < 1) throw ConfigError("tensor dimensions must be positive, got " + shape_str(shape));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->data.assign(shape_numel(shape), value);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return wrap(std::move(impl));
}

Tensor Tensor::from_vector(std::vector<double> data, std::vector<int> shape,
                           bool requires_grad) {
  if (data.size() != shape_numel(shape)) {
    throw ConfigError("tensor data length does not match shape " + shape_str(shape));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return wrap(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_vector({value}, {1}, requires_grad);
}

Tensor Tensor::randn_trunc(std::vector<int> shape, double stddev, Rng& rng,
                           bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (double& v : t.values()) v = rng.truncated_normal(stddev);
  return t;
}

int Tensor::rows() const {
  if (impl_->shape.size() != 2) throw UsageError("rows(): tensor is not 2-D");
  return impl_->shape[0];
}

int Tensor::cols() const {
  if (impl_->shape.size() != 2) throw UsageError("cols(): tensor is not 2-D");
  return impl_->shape[1];
}

double Tensor::item() const {
  if (numel() != 1) throw UsageError("item(): tensor is not scalar");
  return impl_->data[0];
}

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
}

void Tensor::backward() {
  if (numel() != 1) throw UsageError("backward(): loss must be a scalar");
  if (!impl_->requires_grad || !impl_->backward_fn) {
    throw UsageError("backward(): tensor has no recorded computation");
  }

  // post-order over the recorded graph; reversed it is a topological order
  // with every consumer processed before its inputs
  std::vector<TensorImpl*> topo;
  std::unordered_set<TensorImpl*> visited;
  struct Frame {
    TensorImpl* node;
    size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({impl_.get(), 0});
  visited.insert(impl_.get());
  while (!stack.empty()) {
    Frame& top = stack.back();
    if (top.next_parent < top.node->parents.size()) {
      TensorImpl* p = top.node->parents[top.next_parent++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      topo.push_back(top.node);
      stack.pop_back();
    }
  }

  impl_->grad.assign(1, 1.0);
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

Tensor Tensor::detached_copy(bool requires_grad) const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  impl->requires_grad = requires_grad;
  return wrap(std::move(impl));
}

Tensor Tensor::wrap(std::shared_ptr<TensorImpl> impl) {
  Tensor t;
  t.impl_ = std::move(impl);
  return t;
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

bool grad_enabled() { return g_grad_enabled; }

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

}  // namespace echo::nn
