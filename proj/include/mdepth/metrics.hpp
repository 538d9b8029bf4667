#pragma once

#include <string>
#include <vector>

#include "mdepth/depth_map.hpp"

namespace mdepth {

// The six metric families over an evaluation set. Threshold fractions use
// delta = max(y/y*, y*/y) against 1.25, 1.25^2, 1.25^3. Pixel-level terms
// (deltas, relative differences, squared errors) are pooled across all images;
// RMSE fields are square roots of pooled means; si_rmse_log pools per-image
// mean-centered squared residuals so it stays comparable to rmse_log.
struct MetricsReport {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  double abs_rel = 0.0;
  double sqr_rel = 0.0;
  double rmse_linear = 0.0;
  double rmse_log = 0.0;
  double si_rmse_log = 0.0;
  int64_t n_images = 0;
  int64_t n_pixels = 0;

  static const char* csv_header();  // fixed documented column order
  std::string csv_row() const;
};

// Pools per-image terms; add() order does not affect the report beyond
// floating-point addition order, so callers reduce in a fixed image order.
class MetricsAccumulator {
 public:
  void add(const DepthMap& pred, const DepthMap& gt);
  MetricsReport report() const;

 private:
  int64_t n_images_ = 0;
  int64_t n_pixels_ = 0;
  int64_t n_delta1_ = 0, n_delta2_ = 0, n_delta3_ = 0;
  double sum_abs_rel_ = 0.0, sum_sqr_rel_ = 0.0;
  double sum_sq_lin_ = 0.0, sum_sq_log_ = 0.0, sum_sq_si_ = 0.0;
};

// Single-pair convenience wrapper.
MetricsReport evaluate(const DepthMap& pred, const DepthMap& gt);

struct MeanSubstitution {
  double rmse_log_before = 0.0;
  double rmse_log_after = 0.0;  // equals sqrt(pooled si MSE)
};

// Shifts each prediction's log depths by its optimal log scale and reports
// log RMSE before and after; the after value isolates in-scene structure
// error from the scene's global scale.
MeanSubstitution mean_log_substitution(
    const std::vector<const DepthMap*>& preds,
    const std::vector<const DepthMap*>& gts);

// Pearson correlation between prediction and ground-truth log-depth gradient
// magnitudes, pooled over all pixels whose 4-neighborhood is valid in both
// maps. Higher means predicted edges line up with true depth edges.
double edge_alignment_score(const std::vector<const DepthMap*>& preds,
                            const std::vector<const DepthMap*>& gts);

}  // namespace mdepth
