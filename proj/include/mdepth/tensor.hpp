#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "mdepth/common.hpp"
#include "mdepth/rng.hpp"

namespace mdepth {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense n-d array, NCHW order for image-like data. Ops below record their
// backward rules on the output tensor; backward() replays them in reverse
// topological order. Non-finite values anywhere are a hard error.
class Tensor {
 public:
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty unless requires_grad

  bool requires_grad = false;
  std::vector<TensorPtr> parents;
  std::function<void(Tensor&)> backward_fn;  // accumulates self.grad into parents

  int64_t numel() const;
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  void ensure_grad();  // allocates a zeroed grad buffer if absent
  void zero_grad();
};

TensorPtr make_tensor(std::vector<int> shape, bool requires_grad = false);
TensorPtr full_tensor(std::vector<int> shape, double value);
TensorPtr tensor_from(std::vector<int> shape, std::vector<double> data,
                      bool requires_grad = false);

// Disables graph recording on this thread while alive; forward values are
// unaffected. Used for evaluation passes and for the frozen stack in phase-2
// training.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};
bool grad_enabled();

// Throws NumericError naming `what` if any element is NaN/Inf.
void check_finite(const std::vector<double>& v, const char* what);

// ---- primitives ----
// input {N,IC,H,W}, weights {OC,IC,KH,KW}, bias {OC}. Cross-correlation with
// zero padding; per-element accumulation order is bias, then ascending
// (ic, kh, kw), which oracle tests rely on.
TensorPtr conv2d(const TensorPtr& input, const TensorPtr& weights,
                 const TensorPtr& bias, int stride, int padding);

struct MaxPoolResult {
  TensorPtr output;
  std::vector<int64_t> argmax;  // flat input index per output element
};
// Ties break toward the first (row-major) occurrence; backward routes the
// whole gradient to the argmax position.
MaxPoolResult maxpool2d(const TensorPtr& input, int kh, int kw, int stride);

// input {N, ...} flattened per sample, weights {OUT,IN}, bias {OUT}.
TensorPtr fully_connected(const TensorPtr& input, const TensorPtr& weights,
                          const TensorPtr& bias);

TensorPtr relu(const TensorPtr& input);  // subgradient 0 at x == 0

// Inverted dropout: train mode zeroes each element with probability `rate`
// and scales survivors by 1/(1-rate); eval mode is the identity.
TensorPtr dropout(const TensorPtr& input, double rate, Rng& rng, bool train);

TensorPtr concat_channels(const TensorPtr& a, const TensorPtr& b);
TensorPtr reshape(const TensorPtr& input, std::vector<int> new_shape);

// Runs the recorded rules from `root`. If root->grad is already populated it
// is used as the seed (the loss path); otherwise root must be a scalar and is
// seeded with 1. All produced gradients are checked finite.
void backward(const TensorPtr& root);

}  // namespace mdepth
