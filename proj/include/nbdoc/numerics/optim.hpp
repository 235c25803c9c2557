#pragma once

#include <cmath>
#include <vector>

#include "nbdoc/numerics/autodiff.hpp"

namespace nbdoc::num {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Tensor m, v;
  long long step = 0;

  AdamState() = default;
  explicit AdamState(const Shape& s) : m(s), v(s) {}
};

// Bias-corrected Adam update of one tensor.
inline void adam_step(Tensor& param, const Tensor& grad, AdamState& st, const AdamConfig& cfg = {}) {
  if (param.shape() != grad.shape()) throw ShapeError("adam_step: parameter and gradient shapes differ");
  if (st.m.shape() != param.shape()) st = AdamState(param.shape());
  ++st.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * g;
    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mh = st.m[i] / c1;
    const double vh = st.v[i] / c2;
    param[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
  }
}

class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig cfg = {}) : params_(std::move(params)), cfg_(cfg) {
    for (auto* p : params_) states_.emplace_back(p->value.shape());
  }

  void step() {
    for (std::size_t i = 0; i < params_.size(); ++i) adam_step(params_[i]->value, params_[i]->grad, states_[i], cfg_);
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  const std::vector<AdamState>& states() const { return states_; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig cfg_;
  std::vector<AdamState> states_;
};

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
inline double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm) {
  double sq = 0;
  for (const auto* p : params) {
    for (double g : p->grad.values()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    const double s = max_norm / norm;
    for (auto* p : params) {
      for (auto& g : p->grad.values()) g *= s;
    }
  }
  return norm;
}

}  // namespace nbdoc::num
