#include "mdepth/model.hpp"

#include <cmath>

#include "mdepth/optimizer.hpp"

namespace mdepth {

namespace {

// Fills one stack's parameter tensors. Shapes come from the symbolic trace so
// allocation never runs the network.
void alloc_stack(Stack* stack, const std::vector<LayerSpec>& specs,
                 const std::vector<LayerShape>& shapes, LayerShape in, Rng* rng) {
  for (size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& l = specs[i];
    RuntimeLayer rl;
    rl.spec = l;
    if (l.has_params()) {
      int fan_in = 0, fan_out = 0;
      if (l.is_conv_shaped()) {
        rl.weights = make_tensor({l.out_channels, in.channels, l.kh, l.kw}, true);
        fan_in = in.channels * l.kh * l.kw;
        fan_out = l.out_channels * l.kh * l.kw;
      } else {
        const LayerShape& prev = in;
        const int in_len = prev.flat ? prev.channels
                                     : prev.channels * prev.height * prev.width;
        rl.weights = make_tensor({l.out_channels, in_len}, true);
        fan_in = in_len;
        fan_out = l.out_channels;
      }
      rl.bias = make_tensor({l.out_channels}, true);
      if (rng) {
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& w : rl.weights->data) w = rng->uniform(-bound, bound);
        quantize_to_f32(*rl.weights);
      }
    }
    stack->layers.push_back(std::move(rl));
    in = shapes[i];
  }
}

}  // namespace

TensorPtr Stack::forward(TensorPtr x, bool train, Rng* dropout_rng,
                         const TensorPtr& concat_input) const {
  for (const auto& rl : layers) {
    switch (rl.spec.kind) {
      case LayerKind::Conv:
        x = conv2d(x, rl.weights, rl.bias, rl.spec.stride, rl.spec.padding);
        break;
      case LayerKind::MaxPool:
        x = maxpool2d(x, rl.spec.kh, rl.spec.kw, rl.spec.stride).output;
        break;
      case LayerKind::FullyConnected:
        x = fully_connected(x, rl.weights, rl.bias);
        break;
      case LayerKind::Relu:
        x = relu(x);
        break;
      case LayerKind::Dropout:
        if (train) {
          if (!dropout_rng) throw Error("Stack::forward: train mode needs an rng");
          x = dropout(x, rl.spec.dropout_rate, *dropout_rng, true);
        }
        break;
      case LayerKind::Concat:
        if (!concat_input) throw Error("Stack::forward: concat slot without input");
        x = concat_channels(x, concat_input);
        break;
      case LayerKind::LinearOutput:
        x = rl.spec.is_conv_shaped()
                ? conv2d(x, rl.weights, rl.bias, rl.spec.stride, rl.spec.padding)
                : fully_connected(x, rl.weights, rl.bias);
        break;
    }
  }
  return x;
}

std::vector<TensorPtr> Stack::params() const {
  std::vector<TensorPtr> out;
  for (const auto& rl : layers) {
    if (!rl.weights) continue;
    out.push_back(rl.weights);
    out.push_back(rl.bias);
  }
  return out;
}

std::vector<double> Stack::param_lr_multipliers() const {
  std::vector<double> out;
  for (const auto& rl : layers) {
    if (!rl.weights) continue;
    out.push_back(rl.spec.lr_multiplier);
    out.push_back(rl.spec.lr_multiplier);
  }
  return out;
}

TwoScaleModel build_networks(const NetworkSpec& spec, Rng* init_rng) {
  const ShapeTrace trace = derive_shapes(spec);
  TwoScaleModel m;
  m.spec = spec;
  const LayerShape input{3, spec.input_height, spec.input_width, false};
  alloc_stack(&m.coarse, spec.coarse, trace.coarse, input, init_rng);
  alloc_stack(&m.fine, spec.fine, trace.fine, input, init_rng);
  return m;
}

TensorPtr coarse_forward(const TwoScaleModel& model, const TensorPtr& rgb, bool train,
                         Rng* dropout_rng) {
  if (rgb->shape.size() != 4 || rgb->dim(1) != 3 ||
      rgb->dim(2) != model.spec.input_height || rgb->dim(3) != model.spec.input_width)
    throw Error("coarse_forward: input does not match the spec size");
  TensorPtr flat = model.coarse.forward(rgb, train, dropout_rng);
  // the linear output learns its own upsampling templates over the grid;
  // units are laid out row-major
  return reshape(flat, {rgb->dim(0), 1, model.spec.output_height,
                        model.spec.output_width});
}

TensorPtr fine_forward(const TwoScaleModel& model, const TensorPtr& rgb,
                       const TensorPtr& coarse_map, bool train, Rng* dropout_rng) {
  if (rgb->shape.size() != 4 || rgb->dim(1) != 3 ||
      rgb->dim(2) != model.spec.input_height || rgb->dim(3) != model.spec.input_width)
    throw Error("fine_forward: input does not match the spec size");
  if (coarse_map->shape.size() != 4 || coarse_map->dim(1) != 1 ||
      coarse_map->dim(2) != model.spec.output_height ||
      coarse_map->dim(3) != model.spec.output_width)
    throw Error("fine_forward: global map does not match the output grid");
  return model.fine.forward(rgb, train, dropout_rng, coarse_map);
}

std::vector<double> input_from_rgb(const Rgb& rgb, const std::array<double, 3>& mean) {
  std::vector<double> out(rgb.data.size());
  const size_t plane = static_cast<size_t>(rgb.height) * rgb.width;
  for (int ch = 0; ch < 3; ++ch)
    for (size_t i = 0; i < plane; ++i)
      out[ch * plane + i] = rgb.data[ch * plane + i] - mean[static_cast<size_t>(ch)];
  return out;
}

}  // namespace mdepth
