#include "mdepth/optimizer.hpp"

#include <string>

namespace mdepth {

SgdMomentum::SgdMomentum(double learning_rate, double momentum)
    : learning_rate_(learning_rate), momentum_(momentum) {
  if (momentum < 0.0 || momentum >= 1.0)
    throw Error("SgdMomentum: momentum must be in [0,1)");
}

void SgdMomentum::add_param(const TensorPtr& param, double lr_multiplier) {
  Slot s;
  s.param = param;
  s.velocity.assign(param->data.size(), 0.0);
  s.lr_multiplier = lr_multiplier;
  slots_.push_back(std::move(s));
}

void SgdMomentum::step() {
  for (auto& s : slots_) {
    s.param->ensure_grad();
    sgd_momentum_step(*s.param, s.param->grad, s.velocity,
                      learning_rate_ * s.lr_multiplier, momentum_);
  }
}

void sgd_momentum_step(Tensor& param, const std::vector<double>& grad,
                       std::vector<double>& velocity, double effective_rate,
                       double momentum) {
  if (grad.size() != param.data.size() || velocity.size() != param.data.size())
    throw Error("sgd_momentum_step: shape mismatch between param, grad and velocity");
  for (size_t i = 0; i < param.data.size(); ++i) {
    velocity[i] = momentum * velocity[i] - effective_rate * grad[i];
    param.data[i] += velocity[i];
  }
  check_finite(param.data, "sgd_momentum_step");
}

void quantize_to_f32(Tensor& t) {
  for (double& x : t.data) x = static_cast<double>(static_cast<float>(x));
}

}  // namespace mdepth
