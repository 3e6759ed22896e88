#include "kgaug/numerics/adam.hpp"

#include <cmath>

#include "kgaug/error.hpp"

namespace kgaug::num {

Adam::Adam(std::vector<Parameter*> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  moments_.reserve(params_.size());
  for (Parameter* p : params_) {
    if (p->grad.shape() != p->value.shape()) p->grad = Tensor(p->value.shape());
    moments_.push_back({Tensor(p->value.shape()), Tensor(p->value.shape())});
  }
}

void Adam::step() {
  for (const Parameter* p : params_) {
    if (p->grad.shape() != p->value.shape()) {
      throw DimensionError("adam: gradient of " + p->name + " has shape " +
                           shape_string(p->grad.shape()));
    }
    if (!p->grad.all_finite()) throw TrainingError("adam: non-finite gradient for " + p->name);
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    if (!p.trainable) continue;
    Tensor& m = moments_[k].first;
    Tensor& v = moments_[k].second;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p.value[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

}  // namespace kgaug::num
