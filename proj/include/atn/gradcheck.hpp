#pragma once

#include <cmath>
#include <map>
#include <string>

#include "atn/autodiff.hpp"
#include "atn/params.hpp"

namespace atn {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Compares the analytic gradient of a scalar loss against central differences
// (f(x+eps) - f(x-eps)) / (2 eps), component by component over every trainable
// parameter in the store. The loss builder must be deterministic given the
// parameter values (no dropout).
template <class LossFn>
GradCheckReport grad_check(LossFn&& build_loss, ParamStore& store, double eps = 1e-5) {
  store.zero_grads();
  {
    Var loss = build_loss();
    backward(loss);
  }
  std::map<std::string, Tensor> analytic;
  for (auto& [name, e] : store) {
    if (!e.trainable) continue;
    analytic[name] = e.var->has_grad() ? e.var->grad : Tensor(e.var->val.shape);
  }
  store.zero_grads();

  GradCheckReport report;
  for (auto& [name, e] : store) {
    if (!e.trainable) continue;
    Tensor& value = e.var->val;
    const Tensor& a = analytic[name];
    auto eval = [&]() {
      Var loss = build_loss();
      double out = loss->val.item();
      release_graph(loss);
      return out;
    };
    for (std::size_t i = 0; i < value.numel(); ++i) {
      double saved = value.v[i];
      value.v[i] = saved + eps;
      double up = eval();
      value.v[i] = saved - eps;
      double down = eval();
      value.v[i] = saved;
      double numeric = (up - down) / (2.0 * eps);
      double denom = std::max({std::fabs(a.v[i]), std::fabs(numeric), 1e-8});
      double rel = std::fabs(a.v[i] - numeric) / denom;
      ++report.checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace atn
