// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "echo/params.hpp"

#include <algorithm>
#include <cmath>

#include "echo/errors.hpp"
#include "echo/rng.hpp"

namespace echo::nn {

void ParamStore::put(const std::string& name, Tensor t) {
  items_.insert_or_assign(name, std::move(t));
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = items_.find(name);
  if (it == items_.end()) throw UsageError("no parameter named '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = items_.find(name);
  if (it == items_.end()) throw UsageError("no parameter named '" + name + "'");
  return it->second;
}

bool ParamStore::contains(const std::string& name) const {
  return items_.count(name) != 0;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(items_.size());
  for (const auto& [name, t] : items_) out.push_back(name);
  return out;
}

size_t ParamStore::total_values() const {
  size_t n = 0;
  for (const auto& [name, t] : items_) n += t.numel();
  return n;
}

ParamStore ParamStore::clone(bool requires_grad) const {
  ParamStore out;
  for (const auto& [name, t] : items_) {
    out.put(name, t.detached_copy(requires_grad));
  }
  return out;
}

bool ParamStore::schema_matches(const ParamStore& other) const {
  if (items_.size() != other.items_.size()) return false;
  auto a = items_.begin();
  auto b = other.items_.begin();
  for (; a != items_.end(); ++a, ++b) {
    if (a->first != b->first) return false;
    if (a->second.shape() != b->second.shape()) return false;
  }
  return true;
}

void ParamStore::zero_grads() {
  for (auto& [name, t] : items_) t.zero_grad();
}

GradCheckReport finite_difference_check(const std::function<Tensor()>& loss_fn,
                                        const std::vector<std::pair<std::string, Tensor>>& params,
                                        Rng& rng, int coords_per_param,
                                        double step, double rtol, double atol) {
  GradCheckReport report;

  // One recorded forward/backward gives analytic gradients for all params.
  for (auto& [name, t] : params) const_cast<Tensor&>(t).zero_grad();
  Tensor loss = loss_fn();
  loss.backward();

  for (const auto& [name, t] : params) {
    auto& impl = *t.impl();
    size_t n = impl.numel();
    std::vector<size_t> coords;
    if (n <= static_cast<size_t>(coords_per_param)) {
      coords.resize(n);
      for (size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      coords = rng.sample_without_replacement(n, static_cast<size_t>(coords_per_param));
    }

    const std::vector<double>& analytic = impl.grad;
    for (size_t idx : coords) {
      double saved = impl.data[idx];
      double fp, fm;
      {
        NoGradGuard ng;
        impl.data[idx] = saved + step;
        fp = loss_fn().item();
        impl.data[idx] = saved - step;
        fm = loss_fn().item();
        impl.data[idx] = saved;
      }
      double numeric = (fp - fm) / (2.0 * step);
      double a = analytic.empty() ? 0.0 : analytic[idx];
      double denom = std::max({std::abs(a), std::abs(numeric), atol});
      double rel = std::abs(a - numeric) / denom;
      report.max_rel_err = std::max(report.max_rel_err, rel);
      report.coords_checked++;
      if (std::abs(a - numeric) > atol && rel > rtol) {
        report.pass = false;
        report.failures.push_back({name, idx, a, numeric, rel});
      }
    }
  }
  return report;
}

}  // namespace echo::nn
