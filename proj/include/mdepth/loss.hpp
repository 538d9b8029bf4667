#pragma once

#include <vector>

#include "mdepth/depth_map.hpp"
#include "mdepth/tensor.hpp"

namespace mdepth {

// Sufficient statistics of d_i = log(pred_i) - log(gt_i) over the joint mask.
struct LogDiffStats {
  int64_t n_valid = 0;
  double sum_d = 0.0;
  double sum_d2 = 0.0;
};

// Accumulates stats over pixels valid in both maps. Throws DataError on an
// empty joint mask or a non-positive valid depth.
LogDiffStats log_diff_stats(const DepthMap& pred, const DepthMap& gt);

// Mean of (log gt - log pred) over the joint mask; exp of the result is the
// scale that best aligns the prediction to the ground truth.
double optimal_log_scale(const DepthMap& pred, const DepthMap& gt);

// Scale-invariant mean squared error in log space: the variance of d over the
// joint mask, evaluated mean-centered for numerical stability. Invariant
// under pred -> c*pred for any c > 0.
double si_error(const DepthMap& pred, const DepthMap& gt);

// O(n^2) reference form: mean over unordered pixel pairs of the squared
// difference between predicted and true log-depth gaps, normalized by n^2.
// Agrees with si_error; kept as the independent cross-check.
double si_error_pairwise(const DepthMap& pred, const DepthMap& gt);

struct TrainingLoss {
  double value = 0.0;
  std::vector<double> grad;  // d(loss)/d(pred_log), 0 at masked pixels
};

// Blended log-space loss over valid target pixels:
//   L = mean(d^2) - si_weight * mean(d)^2,   d_i = pred_log_i - log(gt_i)
// si_weight 0 is the elementwise squared log error, 1 the scale-invariant
// error. pred_log holds log depths (the network's output space).
TrainingLoss training_loss(const std::vector<double>& pred_log, const DepthMap& gt,
                           double si_weight);

// Batch form over {N,1,h,w} predictions: mean of per-sample losses, gradient
// seeded into pred_log->grad. Samples whose target has no valid pixel are
// skipped; throws DataError if every target is empty.
double training_loss_batch(const TensorPtr& pred_log,
                           const std::vector<const DepthMap*>& targets,
                           double si_weight);

}  // namespace mdepth
