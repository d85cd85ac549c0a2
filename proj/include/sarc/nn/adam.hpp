#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sarc/nn/tensor.hpp"

namespace sarc::nn {

template <class T>
struct AdamConfig {
  T lr = T(0.001);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);
};

// First/second moment buffers for a fixed parameter list, plus the shared
// step counter. The parameter list must not change between steps.
template <class T>
class AdamState {
 public:
  explicit AdamState(const std::vector<Tensor<T>>& params, AdamConfig<T> config = {}) : config_(config) {
    for (const auto& p : params) {
      m_.emplace_back(static_cast<size_t>(p.size()), T(0));
      v_.emplace_back(static_cast<size_t>(p.size()), T(0));
    }
  }

  int64_t step_count() const { return t_; }
  const AdamConfig<T>& config() const { return config_; }

  // standard bias-corrected update; reads each parameter's grad buffer
  void step(std::vector<Tensor<T>>& params) {
    if (params.size() != m_.size()) throw std::logic_error("AdamState::step: parameter list changed size");
    ++t_;
    const T bc1 = T(1) - std::pow(config_.beta1, static_cast<T>(t_));
    const T bc2 = T(1) - std::pow(config_.beta2, static_cast<T>(t_));
    for (size_t pi = 0; pi < params.size(); ++pi) {
      auto& data = params[pi].data();
      const auto& grad = params[pi].grad();
      auto& m = m_[pi];
      auto& v = v_[pi];
      if (data.size() != m.size()) throw std::logic_error("AdamState::step: parameter shape changed");
      for (size_t i = 0; i < data.size(); ++i) {
        const T g = grad[i];
        m[i] = config_.beta1 * m[i] + (T(1) - config_.beta1) * g;
        v[i] = config_.beta2 * v[i] + (T(1) - config_.beta2) * g * g;
        const T mhat = m[i] / bc1;
        const T vhat = v[i] / bc2;
        data[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
      }
    }
  }

 private:
  AdamConfig<T> config_;
  std::vector<std::vector<T>> m_, v_;
  int64_t t_ = 0;
};

}  // namespace sarc::nn
