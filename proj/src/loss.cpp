#include "mdepth/loss.hpp"

#include <cmath>
#include <string>

namespace mdepth {

namespace {

void check_joint_shapes(const DepthMap& pred, const DepthMap& gt, const char* what) {
  if (pred.height != gt.height || pred.width != gt.width)
    throw DataError(std::string(what) + ": map sizes differ");
}

double valid_log(double d, const char* what) {
  if (!(d > 0.0) || !std::isfinite(d))
    throw DataError(std::string(what) + ": valid pixel with non-positive depth");
  return std::log(d);
}

}  // namespace

LogDiffStats log_diff_stats(const DepthMap& pred, const DepthMap& gt) {
  check_joint_shapes(pred, gt, "log_diff_stats");
  LogDiffStats s;
  for (size_t i = 0; i < gt.depth.size(); ++i) {
    if (!pred.mask[i] || !gt.mask[i]) continue;
    const double d = valid_log(pred.depth[i], "log_diff_stats") -
                     valid_log(gt.depth[i], "log_diff_stats");
    s.n_valid += 1;
    s.sum_d += d;
    s.sum_d2 += d * d;
  }
  if (s.n_valid == 0) throw DataError("log_diff_stats: empty joint mask");
  return s;
}

double optimal_log_scale(const DepthMap& pred, const DepthMap& gt) {
  const LogDiffStats s = log_diff_stats(pred, gt);
  return -s.sum_d / static_cast<double>(s.n_valid);
}

double si_error(const DepthMap& pred, const DepthMap& gt) {
  check_joint_shapes(pred, gt, "si_error");
  // Two passes: mean first, then centered second moment. The one-pass
  // sum_d2/n - (sum_d/n)^2 form cancels catastrophically when the log
  // difference has a large mean (e.g. a far-off global scale).
  double sum_d = 0.0;
  int64_t n = 0;
  for (size_t i = 0; i < gt.depth.size(); ++i) {
    if (!pred.mask[i] || !gt.mask[i]) continue;
    sum_d += valid_log(pred.depth[i], "si_error") - valid_log(gt.depth[i], "si_error");
    n += 1;
  }
  if (n == 0) throw DataError("si_error: empty joint mask");
  const double mean_d = sum_d / static_cast<double>(n);
  double acc = 0.0;
  for (size_t i = 0; i < gt.depth.size(); ++i) {
    if (!pred.mask[i] || !gt.mask[i]) continue;
    const double r = std::log(pred.depth[i]) - std::log(gt.depth[i]) - mean_d;
    acc += r * r;
  }
  return acc / static_cast<double>(n);
}

double si_error_pairwise(const DepthMap& pred, const DepthMap& gt) {
  check_joint_shapes(pred, gt, "si_error_pairwise");
  std::vector<double> d;
  d.reserve(gt.depth.size());
  for (size_t i = 0; i < gt.depth.size(); ++i) {
    if (!pred.mask[i] || !gt.mask[i]) continue;
    d.push_back(valid_log(pred.depth[i], "si_error_pairwise") -
                valid_log(gt.depth[i], "si_error_pairwise"));
  }
  if (d.empty()) throw DataError("si_error_pairwise: empty joint mask");
  double acc = 0.0;
  for (size_t i = 0; i < d.size(); ++i) {
    for (size_t j = i + 1; j < d.size(); ++j) {
      const double g = d[i] - d[j];
      acc += g * g;
    }
  }
  const double n = static_cast<double>(d.size());
  return acc / (n * n);
}

TrainingLoss training_loss(const std::vector<double>& pred_log, const DepthMap& gt,
                           double si_weight) {
  if (si_weight < 0.0 || si_weight > 1.0)
    throw Error("training_loss: si_weight must be in [0,1]");
  if (pred_log.size() != gt.depth.size())
    throw DataError("training_loss: prediction size does not match target");

  double sum_d = 0.0;
  int64_t n = 0;
  for (size_t i = 0; i < gt.depth.size(); ++i) {
    if (!gt.mask[i]) continue;
    if (!std::isfinite(pred_log[i]))
      throw NumericError("training_loss: non-finite prediction");
    sum_d += pred_log[i] - valid_log(gt.depth[i], "training_loss");
    n += 1;
  }
  if (n == 0) throw DataError("training_loss: target has no valid pixels");
  const double nn = static_cast<double>(n);
  const double mean_d = sum_d / nn;

  // mean(d^2) = var(d) + mean(d)^2, so L = var(d) + (1 - w) * mean(d)^2.
  // Evaluating it this way keeps the w=1 endpoint bitwise close to si_error.
  double var_acc = 0.0;
  TrainingLoss out;
  out.grad.assign(pred_log.size(), 0.0);
  for (size_t i = 0; i < gt.depth.size(); ++i) {
    if (!gt.mask[i]) continue;
    const double d = pred_log[i] - std::log(gt.depth[i]);
    const double r = d - mean_d;
    var_acc += r * r;
    out.grad[i] = (2.0 / nn) * d - (2.0 * si_weight / nn) * mean_d;
  }
  out.value = var_acc / nn + (1.0 - si_weight) * mean_d * mean_d;
  return out;
}

double training_loss_batch(const TensorPtr& pred_log,
                           const std::vector<const DepthMap*>& targets,
                           double si_weight) {
  if (pred_log->shape.size() != 4 || pred_log->dim(1) != 1)
    throw Error("training_loss_batch: prediction must be {N,1,h,w}");
  const int n = pred_log->dim(0);
  const int h = pred_log->dim(2), w = pred_log->dim(3);
  if (static_cast<size_t>(n) != targets.size())
    throw Error("training_loss_batch: batch size mismatch");

  const size_t plane = static_cast<size_t>(h) * w;
  pred_log->ensure_grad();

  double total = 0.0;
  int used = 0;
  std::vector<size_t> active;
  std::vector<TrainingLoss> losses(targets.size());
  for (size_t s = 0; s < targets.size(); ++s) {
    const DepthMap& t = *targets[s];
    if (t.height != h || t.width != w)
      throw DataError("training_loss_batch: target resolution mismatch");
    if (t.n_valid() == 0) continue;  // dropped sample; counted by the trainer
    std::vector<double> p(pred_log->data.begin() + s * plane,
                          pred_log->data.begin() + (s + 1) * plane);
    losses[s] = training_loss(p, t, si_weight);
    total += losses[s].value;
    active.push_back(s);
    ++used;
  }
  if (used == 0) throw DataError("training_loss_batch: no valid target pixels in batch");

  const double inv = 1.0 / used;
  for (size_t s : active) {
    for (size_t i = 0; i < plane; ++i)
      pred_log->grad[s * plane + i] = losses[s].grad[i] * inv;
  }
  return total * inv;
}

}  // namespace mdepth
