#pragma once

#include <vector>

#include "mdepth/tensor.hpp"

namespace mdepth {

// Classical (Polyak) momentum: v <- m*v - lr*g; p <- p + v. The effective
// rate per parameter is the global rate times its layer multiplier.
class SgdMomentum {
 public:
  SgdMomentum(double learning_rate, double momentum);

  // Registers a parameter with its layer's rate multiplier. Velocity starts
  // at zero and mirrors the parameter shape.
  void add_param(const TensorPtr& param, double lr_multiplier);

  // One update over all registered parameters, reading param->grad.
  void step();

  double learning_rate() const { return learning_rate_; }
  void set_learning_rate(double lr) { learning_rate_ = lr; }

 private:
  struct Slot {
    TensorPtr param;
    std::vector<double> velocity;
    double lr_multiplier;
  };
  double learning_rate_;
  double momentum_;
  std::vector<Slot> slots_;
};

// Single-parameter update; velocity has the parameter's length.
void sgd_momentum_step(Tensor& param, const std::vector<double>& grad,
                       std::vector<double>& velocity, double effective_rate,
                       double momentum);

// Rounds every element to its nearest 32-bit float value. The training loop
// applies this after each optimizer step so checkpoints (which store float32)
// reload to exactly the in-memory parameters.
void quantize_to_f32(Tensor& t);

}  // namespace mdepth
