#include "mdepth/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

namespace mdepth {

namespace {

thread_local bool g_grad_enabled = true;

int64_t shape_numel(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

// Integer division rounding toward -inf / +inf; b > 0.
int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
int ceil_div(int a, int b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }

int conv_out_size(int in, int k, int stride, int pad, const char* what) {
  const int out = (in + 2 * pad - k) / stride + 1;
  if (in + 2 * pad - k < 0 || out <= 0)
    throw Error(std::string(what) + ": derived output size is non-positive");
  return out;
}

void require(bool cond, const char* msg) {
  if (!cond) throw Error(msg);
}

}  // namespace

int64_t Tensor::numel() const { return shape_numel(shape); }

void Tensor::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
}

TensorPtr make_tensor(std::vector<int> shape, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->data.assign(static_cast<size_t>(shape_numel(t->shape)), 0.0);
  t->requires_grad = requires_grad;
  if (requires_grad) t->ensure_grad();
  return t;
}

TensorPtr full_tensor(std::vector<int> shape, double value) {
  auto t = make_tensor(std::move(shape));
  std::fill(t->data.begin(), t->data.end(), value);
  return t;
}

TensorPtr tensor_from(std::vector<int> shape, std::vector<double> data,
                      bool requires_grad) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size()))
    throw Error("tensor_from: shape does not match data length");
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->data = std::move(data);
  t->requires_grad = requires_grad;
  if (requires_grad) t->ensure_grad();
  return t;
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }
bool grad_enabled() { return g_grad_enabled; }

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x))
      throw NumericError(std::string(what) + ": non-finite value");
  }
}

namespace {

// Marks `out` as a graph node produced from `inputs` when recording is on.
void record(const TensorPtr& out, std::initializer_list<TensorPtr> inputs,
            std::function<void(Tensor&)> fn) {
  if (!g_grad_enabled) return;
  bool any = false;
  for (const auto& in : inputs) any = any || in->requires_grad;
  if (!any) return;
  out->requires_grad = true;
  out->parents.assign(inputs.begin(), inputs.end());
  out->backward_fn = std::move(fn);
}

}  // namespace

TensorPtr conv2d(const TensorPtr& input, const TensorPtr& weights,
                 const TensorPtr& bias, int stride, int padding) {
  require(input->shape.size() == 4, "conv2d: input must be {N,C,H,W}");
  require(weights->shape.size() == 4, "conv2d: weights must be {OC,IC,KH,KW}");
  require(stride >= 1 && padding >= 0, "conv2d: bad stride/padding");
  const int n = input->dim(0), ic = input->dim(1), ih = input->dim(2), iw = input->dim(3);
  const int oc = weights->dim(0), kh = weights->dim(2), kw = weights->dim(3);
  require(weights->dim(1) == ic, "conv2d: channel mismatch between input and weights");
  require(bias->numel() == oc, "conv2d: bias length must equal output channels");
  const int oh = conv_out_size(ih, kh, stride, padding, "conv2d");
  const int ow = conv_out_size(iw, kw, stride, padding, "conv2d");

  auto out = make_tensor({n, oc, oh, ow});
  const double* x = input->data.data();
  const double* w = weights->data.data();
  const double* b = bias->data.data();
  double* y = out->data.data();

  const int64_t in_plane = static_cast<int64_t>(ih) * iw;
  const int64_t out_plane = static_cast<int64_t>(oh) * ow;

  for (int ni = 0; ni < n; ++ni) {
    for (int oci = 0; oci < oc; ++oci) {
      double* yp = y + (static_cast<int64_t>(ni) * oc + oci) * out_plane;
      std::fill(yp, yp + out_plane, b[oci]);
      for (int ici = 0; ici < ic; ++ici) {
        const double* xp = x + (static_cast<int64_t>(ni) * ic + ici) * in_plane;
        const double* wp = w + ((static_cast<int64_t>(oci) * ic + ici) * kh) * kw;
        for (int khi = 0; khi < kh; ++khi) {
          const int oh_lo = std::max(0, ceil_div(padding - khi, stride));
          const int oh_hi = std::min(oh - 1, floor_div(ih - 1 + padding - khi, stride));
          for (int kwi = 0; kwi < kw; ++kwi) {
            const double wv = wp[khi * kw + kwi];
            const int ow_lo = std::max(0, ceil_div(padding - kwi, stride));
            const int ow_hi = std::min(ow - 1, floor_div(iw - 1 + padding - kwi, stride));
            for (int ohi = oh_lo; ohi <= oh_hi; ++ohi) {
              const int ihi = ohi * stride - padding + khi;
              const double* xrow = xp + static_cast<int64_t>(ihi) * iw - padding + kwi;
              double* yrow = yp + static_cast<int64_t>(ohi) * ow;
              for (int owi = ow_lo; owi <= ow_hi; ++owi)
                yrow[owi] += wv * xrow[owi * stride];
            }
          }
        }
      }
    }
  }
  check_finite(out->data, "conv2d");

  record(out, {input, weights, bias},
         [input, weights, bias, stride, padding, n, ic, ih, iw, oc, kh, kw, oh,
          ow, in_plane, out_plane](Tensor& self) {
           const double* gy = self.grad.data();
           const double* x = input->data.data();
           const double* w = weights->data.data();
           if (input->requires_grad) input->ensure_grad();
           if (weights->requires_grad) weights->ensure_grad();
           if (bias->requires_grad) bias->ensure_grad();
           for (int ni = 0; ni < n; ++ni) {
             for (int oci = 0; oci < oc; ++oci) {
               const double* gyp =
                   gy + (static_cast<int64_t>(ni) * oc + oci) * out_plane;
               if (bias->requires_grad) {
                 double s = 0.0;
                 for (int64_t i = 0; i < out_plane; ++i) s += gyp[i];
                 bias->grad[static_cast<size_t>(oci)] += s;
               }
               for (int ici = 0; ici < ic; ++ici) {
                 const double* xp =
                     x + (static_cast<int64_t>(ni) * ic + ici) * in_plane;
                 const double* wp =
                     w + ((static_cast<int64_t>(oci) * ic + ici) * kh) * kw;
                 double* gxp =
                     input->requires_grad
                         ? input->grad.data() +
                               (static_cast<int64_t>(ni) * ic + ici) * in_plane
                         : nullptr;
                 double* gwp =
                     weights->requires_grad
                         ? weights->grad.data() +
                               ((static_cast<int64_t>(oci) * ic + ici) * kh) * kw
                         : nullptr;
                 for (int khi = 0; khi < kh; ++khi) {
                   const int oh_lo = std::max(0, ceil_div(padding - khi, stride));
                   const int oh_hi =
                       std::min(oh - 1, floor_div(ih - 1 + padding - khi, stride));
                   for (int kwi = 0; kwi < kw; ++kwi) {
                     const double wv = wp[khi * kw + kwi];
                     const int ow_lo = std::max(0, ceil_div(padding - kwi, stride));
                     const int ow_hi =
                         std::min(ow - 1, floor_div(iw - 1 + padding - kwi, stride));
                     double gw_acc = 0.0;
                     for (int ohi = oh_lo; ohi <= oh_hi; ++ohi) {
                       const int ihi = ohi * stride - padding + khi;
                       const double* gyrow = gyp + static_cast<int64_t>(ohi) * ow;
                       const int64_t xoff =
                           static_cast<int64_t>(ihi) * iw - padding + kwi;
                       for (int owi = ow_lo; owi <= ow_hi; ++owi) {
                         const double g = gyrow[owi];
                         if (gxp) gxp[xoff + owi * stride] += wv * g;
                         if (gwp) gw_acc += xp[xoff + owi * stride] * g;
                       }
                     }
                     if (gwp) gwp[khi * kw + kwi] += gw_acc;
                   }
                 }
               }
             }
           }
         });
  return out;
}

MaxPoolResult maxpool2d(const TensorPtr& input, int kh, int kw, int stride) {
  require(input->shape.size() == 4, "maxpool2d: input must be {N,C,H,W}");
  require(kh >= 1 && kw >= 1 && stride >= 1, "maxpool2d: bad kernel/stride");
  const int n = input->dim(0), c = input->dim(1), ih = input->dim(2), iw = input->dim(3);
  const int oh = conv_out_size(ih, kh, stride, 0, "maxpool2d");
  const int ow = conv_out_size(iw, kw, stride, 0, "maxpool2d");

  auto out = make_tensor({n, c, oh, ow});
  auto argmax = std::make_shared<std::vector<int64_t>>(out->data.size());
  const double* x = input->data.data();
  double* y = out->data.data();
  int64_t* am = argmax->data();

  int64_t oi = 0;
  for (int ni = 0; ni < n; ++ni) {
    for (int ci = 0; ci < c; ++ci) {
      const int64_t base = (static_cast<int64_t>(ni) * c + ci) * ih * iw;
      for (int ohi = 0; ohi < oh; ++ohi) {
        for (int owi = 0; owi < ow; ++owi, ++oi) {
          double best = -1.0;
          int64_t best_idx = -1;
          for (int khi = 0; khi < kh; ++khi) {
            const int ihi = ohi * stride + khi;
            for (int kwi = 0; kwi < kw; ++kwi) {
              const int iwi = owi * stride + kwi;
              const int64_t idx = base + static_cast<int64_t>(ihi) * iw + iwi;
              if (best_idx < 0 || x[idx] > best) {  // strict >: first wins ties
                best = x[idx];
                best_idx = idx;
              }
            }
          }
          y[oi] = best;
          am[oi] = best_idx;
        }
      }
    }
  }
  check_finite(out->data, "maxpool2d");

  record(out, {input}, [input, argmax](Tensor& self) {
    input->ensure_grad();
    const int64_t* am = argmax->data();
    for (size_t i = 0; i < self.grad.size(); ++i)
      input->grad[static_cast<size_t>(am[i])] += self.grad[i];
  });
  return {out, *argmax};
}

TensorPtr fully_connected(const TensorPtr& input, const TensorPtr& weights,
                          const TensorPtr& bias) {
  require(input->shape.size() >= 2, "fully_connected: input must be {N,...}");
  require(weights->shape.size() == 2, "fully_connected: weights must be {OUT,IN}");
  const int n = input->dim(0);
  const int64_t in_len = input->numel() / n;
  const int out_len = weights->dim(0);
  if (weights->dim(1) != in_len)
    throw Error("fully_connected: flattened input length " + std::to_string(in_len) +
                " does not match weight columns " + std::to_string(weights->dim(1)));
  require(bias->numel() == out_len, "fully_connected: bias length mismatch");

  auto out = make_tensor({n, out_len});
  const double* x = input->data.data();
  const double* w = weights->data.data();
  const double* b = bias->data.data();
  double* y = out->data.data();
  for (int ni = 0; ni < n; ++ni) {
    const double* xp = x + ni * in_len;
    for (int j = 0; j < out_len; ++j) {
      const double* wp = w + static_cast<int64_t>(j) * in_len;
      double acc = b[j];
      for (int64_t i = 0; i < in_len; ++i) acc += wp[i] * xp[i];
      y[static_cast<int64_t>(ni) * out_len + j] = acc;
    }
  }
  check_finite(out->data, "fully_connected");

  record(out, {input, weights, bias},
         [input, weights, bias, n, in_len, out_len](Tensor& self) {
           const double* gy = self.grad.data();
           const double* x = input->data.data();
           const double* w = weights->data.data();
           if (input->requires_grad) input->ensure_grad();
           if (weights->requires_grad) weights->ensure_grad();
           if (bias->requires_grad) bias->ensure_grad();
           for (int ni = 0; ni < n; ++ni) {
             const double* gyp = gy + static_cast<int64_t>(ni) * out_len;
             const double* xp = x + ni * in_len;
             for (int j = 0; j < out_len; ++j) {
               const double g = gyp[j];
               const double* wp = w + static_cast<int64_t>(j) * in_len;
               if (bias->requires_grad) bias->grad[static_cast<size_t>(j)] += g;
               if (weights->requires_grad) {
                 double* gwp = weights->grad.data() + static_cast<int64_t>(j) * in_len;
                 for (int64_t i = 0; i < in_len; ++i) gwp[i] += xp[i] * g;
               }
               if (input->requires_grad) {
                 double* gxp = input->grad.data() + ni * in_len;
                 for (int64_t i = 0; i < in_len; ++i) gxp[i] += wp[i] * g;
               }
             }
           }
         });
  return out;
}

TensorPtr relu(const TensorPtr& input) {
  auto out = make_tensor(input->shape);
  for (size_t i = 0; i < input->data.size(); ++i)
    out->data[i] = input->data[i] > 0.0 ? input->data[i] : 0.0;
  check_finite(out->data, "relu");
  record(out, {input}, [input](Tensor& self) {
    input->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      if (input->data[i] > 0.0) input->grad[i] += self.grad[i];
  });
  return out;
}

TensorPtr dropout(const TensorPtr& input, double rate, Rng& rng, bool train) {
  if (rate < 0.0 || rate >= 1.0) throw Error("dropout: rate must be in [0,1)");
  if (!train || rate == 0.0) return input;
  auto keep = std::make_shared<std::vector<uint8_t>>(input->data.size());
  const double scale = 1.0 / (1.0 - rate);
  auto out = make_tensor(input->shape);
  for (size_t i = 0; i < input->data.size(); ++i) {
    const bool k = !rng.bernoulli(rate);
    (*keep)[i] = k;
    out->data[i] = k ? input->data[i] * scale : 0.0;
  }
  check_finite(out->data, "dropout");
  record(out, {input}, [input, keep, scale](Tensor& self) {
    input->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      if ((*keep)[i]) input->grad[i] += self.grad[i] * scale;
  });
  return out;
}

TensorPtr concat_channels(const TensorPtr& a, const TensorPtr& b) {
  require(a->shape.size() == 4 && b->shape.size() == 4,
          "concat_channels: inputs must be {N,C,H,W}");
  if (a->dim(0) != b->dim(0) || a->dim(2) != b->dim(2) || a->dim(3) != b->dim(3))
    throw Error("concat_channels: spatial/batch size mismatch: {" +
                std::to_string(a->dim(2)) + "x" + std::to_string(a->dim(3)) +
                "} vs {" + std::to_string(b->dim(2)) + "x" +
                std::to_string(b->dim(3)) + "}");
  const int n = a->dim(0), ca = a->dim(1), cb = b->dim(1);
  const int h = a->dim(2), w = a->dim(3);
  const int64_t plane = static_cast<int64_t>(h) * w;
  auto out = make_tensor({n, ca + cb, h, w});
  for (int ni = 0; ni < n; ++ni) {
    std::copy(a->data.begin() + ni * ca * plane, a->data.begin() + (ni + 1) * ca * plane,
              out->data.begin() + static_cast<int64_t>(ni) * (ca + cb) * plane);
    std::copy(b->data.begin() + ni * cb * plane, b->data.begin() + (ni + 1) * cb * plane,
              out->data.begin() + static_cast<int64_t>(ni) * (ca + cb) * plane + ca * plane);
  }
  record(out, {a, b}, [a, b, n, ca, cb, plane](Tensor& self) {
    if (a->requires_grad) a->ensure_grad();
    if (b->requires_grad) b->ensure_grad();
    for (int ni = 0; ni < n; ++ni) {
      const double* g = self.grad.data() + static_cast<int64_t>(ni) * (ca + cb) * plane;
      if (a->requires_grad)
        for (int64_t i = 0; i < ca * plane; ++i) a->grad[ni * ca * plane + i] += g[i];
      if (b->requires_grad)
        for (int64_t i = 0; i < cb * plane; ++i)
          b->grad[ni * cb * plane + i] += g[ca * plane + i];
    }
  });
  return out;
}

TensorPtr reshape(const TensorPtr& input, std::vector<int> new_shape) {
  if (shape_numel(new_shape) != input->numel())
    throw Error("reshape: element count mismatch");
  auto out = std::make_shared<Tensor>();
  out->shape = std::move(new_shape);
  out->data = input->data;
  record(out, {input}, [input](Tensor& self) {
    input->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) input->grad[i] += self.grad[i];
  });
  return out;
}

void backward(const TensorPtr& root) {
  if (root->grad.empty()) {
    if (root->numel() != 1)
      throw Error("backward: non-scalar root requires a pre-seeded gradient");
    root->ensure_grad();
    root->grad[0] = 1.0;
  }

  // Reverse post-order DFS: consumers run before producers.
  std::vector<Tensor*> order;
  std::unordered_set<Tensor*> seen;
  std::vector<std::pair<TensorPtr, size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root.get());
  std::vector<TensorPtr> keep_alive;  // nodes referenced only through parents
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorPtr p = node->parents[next++];
      if (p->requires_grad && seen.insert(p.get()).second) {
        keep_alive.push_back(p);
        stack.emplace_back(std::move(p), 0);
      }
    } else {
      order.push_back(node.get());
      stack.pop_back();
    }
  }

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Tensor* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
  for (Tensor* node : order) {
    if (!node->grad.empty()) check_finite(node->grad, "backward");
  }
}

}  // namespace mdepth
