#pragma once

#include <array>

#include "mdepth/image_io.hpp"
#include "mdepth/network_spec.hpp"
#include "mdepth/tensor.hpp"

namespace mdepth {

struct RuntimeLayer {
  LayerSpec spec;
  TensorPtr weights;  // null for parameter-free layers
  TensorPtr bias;
};

// One runnable stack. forward() threads the input through the layer list,
// splicing `concat_input` in at the Concat slot.
struct Stack {
  std::vector<RuntimeLayer> layers;

  TensorPtr forward(TensorPtr x, bool train, Rng* dropout_rng,
                    const TensorPtr& concat_input = nullptr) const;

  // Parameters in declaration order (weights then bias per layer); the
  // checkpoint format and optimizer registration both rely on this order.
  std::vector<TensorPtr> params() const;
  std::vector<double> param_lr_multipliers() const;
};

struct TwoScaleModel {
  NetworkSpec spec;
  Stack coarse;
  Stack fine;
};

// Allocates both stacks per the spec. With an rng, weights are drawn from a
// fan-balanced uniform range and rounded to float32-representable values
// (checkpoints store float32); biases start at zero. Without an rng all
// parameters are zero (the checkpoint loader fills them in).
TwoScaleModel build_networks(const NetworkSpec& spec, Rng* init_rng = nullptr);

// Global stack: {N,3,H,W} -> {N,1,h,w} log depth. Deterministic when train
// is false (dropout off).
TensorPtr coarse_forward(const TwoScaleModel& model, const TensorPtr& rgb, bool train,
                         Rng* dropout_rng = nullptr);

// Local stack refining the global map. coarse_map is consumed as a plain
// feature channel: run it under NoGradGuard (as the trainer does) to keep
// the global stack frozen.
TensorPtr fine_forward(const TwoScaleModel& model, const TensorPtr& rgb,
                       const TensorPtr& coarse_map, bool train,
                       Rng* dropout_rng = nullptr);

// CHW input plane with the dataset channel means subtracted.
std::vector<double> input_from_rgb(const Rgb& rgb, const std::array<double, 3>& mean);

}  // namespace mdepth
