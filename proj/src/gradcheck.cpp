#include "mdepth/gradcheck.hpp"

#include <cmath>
#include <vector>

namespace mdepth {

double gradcheck(const std::function<TensorPtr()>& build,
                 std::span<const TensorPtr> params, double epsilon) {
  for (const auto& p : params) p->zero_grad();
  TensorPtr root = build();
  if (root->numel() != 1) throw Error("gradcheck: build() must return a scalar");
  backward(root);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) {
    p->ensure_grad();
    analytic.push_back(p->grad);
  }

  NoGradGuard no_grad;
  double worst = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = *params[pi];
    for (size_t i = 0; i < p.data.size(); ++i) {
      const double saved = p.data[i];
      p.data[i] = saved + epsilon;
      const double fp = build()->data[0];
      p.data[i] = saved - epsilon;
      const double fm = build()->data[0];
      p.data[i] = saved;

      const double numeric = (fp - fm) / (2.0 * epsilon);
      const double a = analytic[pi][i];
      if (!std::isfinite(a) || !std::isfinite(numeric))
        throw NumericError("gradcheck: non-finite gradient");
      const double denom = std::max(std::fabs(a), std::fabs(numeric));
      const double err = denom < 1e-10 ? std::fabs(a - numeric)
                                       : std::fabs(a - numeric) / denom;
      if (err > worst) worst = err;
    }
  }
  return worst;
}

}  // namespace mdepth
