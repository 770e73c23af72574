// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <map>
#include <string>
#include <vector>

#include "echo/tensor.hpp"

namespace echo::nn {

// Named parameter tensors with deterministic (sorted) iteration order. Houses
// both student and teacher parameter sets, which must stay schema-identical.
class ParamStore {
 public:
  void put(const std::string& name, Tensor t);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<std::string> names() const;
  size_t size() const { return items_.size(); }
  size_t total_values() const;

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  // Deep copy; requires_grad applied to every copied tensor.
  ParamStore clone(bool requires_grad) const;

  // True when both stores hold the same names with the same shapes.
  bool schema_matches(const ParamStore& other) const;

  void zero_grads();

 private:
  std::map<std::string, Tensor> items_;
};

struct GradCheckIssue {
  std::string param;
  size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct GradCheckReport {
  bool pass = true;
  double max_rel_err = 0.0;
  size_t coords_checked = 0;
  std::vector<GradCheckIssue> failures;
};

// Central finite differences against reverse-mode gradients. loss_fn must be
// a deterministic pure function of the given parameters; it is re-evaluated
// under NoGradGuard for each probe. Checks up to coords_per_param random
// coordinates of every tensor (all coordinates when the tensor is smaller).
GradCheckReport finite_difference_check(const std::function<Tensor()>& loss_fn,
                                        const std::vector<std::pair<std::string, Tensor>>& params,
                                        Rng& rng, int coords_per_param = 20,
                                        double step = 1e-5, double rtol = 1e-4,
                                        double atol = 1e-7);

}  // namespace echo::nn
