#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dippas/nn/layers.hpp"

namespace dippas::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list.
template <typename T>
class Adam {
 public:
  Adam(ParamList<T> params, AdamConfig config) : params_(std::move(params)), config_(config) {
    for (const Param<T>* p : params_) {
      first_.emplace_back(p->value.size(), 0.0);
      second_.emplace_back(p->value.size(), 0.0);
    }
  }

  void step() {
    ++steps_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
    const double lr = config_.learning_rate;
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Param<T>& p = *params_[k];
      std::vector<double>& m = first_[k];
      std::vector<double>& v = second_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
        v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
        const double update = lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
        p.value[i] = static_cast<T>(p.value[i] - update);
      }
    }
  }

  std::size_t steps() const noexcept { return steps_; }

 private:
  ParamList<T> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  std::size_t steps_ = 0;
};

}  // namespace dippas::nn
