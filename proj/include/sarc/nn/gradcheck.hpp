#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sarc/nn/tensor.hpp"

namespace sarc::nn {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst;  // "param[index]" of the worst coordinate
  std::vector<GradCheckEntry> per_param;

  bool passes(double tolerance) const { return max_rel_err < tolerance; }
};

// Central finite differences in double precision against the analytic reverse
// pass. loss_fn must rebuild its graph from the current parameter values on
// every call and return a scalar. Relative error per coordinate is
// |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).
inline GradCheckReport check_gradients(const std::function<Tensor<double>()>& loss_fn,
                                       const std::vector<std::pair<std::string, Tensor<double>>>& params,
                                       double step = 1e-5) {
  for (const auto& [name, p] : params)
    if (!p.needs_grad()) throw std::invalid_argument("check_gradients: parameter '" + name + "' does not track gradients");

  for (auto& [name, p] : params) const_cast<Tensor<double>&>(p).zero_grad();
  Tensor<double> loss = loss_fn();
  loss.backward();

  GradCheckReport report;
  for (const auto& [name, p] : params) {
    auto& param = const_cast<Tensor<double>&>(p);
    GradCheckEntry entry{name, 0.0};
    for (int i = 0; i < param.size(); ++i) {
      const double saved = param.data()[static_cast<size_t>(i)];
      param.data()[static_cast<size_t>(i)] = saved + step;
      const double up = loss_fn().item();
      param.data()[static_cast<size_t>(i)] = saved - step;
      const double down = loss_fn().item();
      param.data()[static_cast<size_t>(i)] = saved;

      const double numeric = (up - down) / (2.0 * step);
      const double analytic = param.grad()[static_cast<size_t>(i)];
      const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      if (rel > entry.max_rel_err) entry.max_rel_err = rel;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst = name + "[" + std::to_string(i) + "]";
      }
    }
    report.per_param.push_back(std::move(entry));
  }
  return report;
}

}  // namespace sarc::nn
