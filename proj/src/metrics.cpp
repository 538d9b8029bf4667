#include "mdepth/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "mdepth/loss.hpp"

namespace mdepth {

const char* MetricsReport::csv_header() {
  return "delta1,delta2,delta3,abs_rel,sqr_rel,rmse_lin,rmse_log,si_rmse_log,"
         "n_images,n_pixels";
}

std::string MetricsReport::csv_row() const {
  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%lld,%lld",
                delta1, delta2, delta3, abs_rel, sqr_rel, rmse_linear, rmse_log,
                si_rmse_log, static_cast<long long>(n_images),
                static_cast<long long>(n_pixels));
  return buf;
}

void MetricsAccumulator::add(const DepthMap& pred, const DepthMap& gt) {
  if (pred.height != gt.height || pred.width != gt.width)
    throw DataError("metrics: prediction and ground truth sizes differ");

  const double thr1 = 1.25, thr2 = 1.25 * 1.25, thr3 = 1.25 * 1.25 * 1.25;
  double sum_d = 0.0;
  int64_t n = 0;
  for (size_t i = 0; i < gt.depth.size(); ++i) {
    if (!pred.mask[i] || !gt.mask[i]) continue;
    const double y = pred.depth[i], ys = gt.depth[i];
    if (!(y > 0.0) || !(ys > 0.0) || !std::isfinite(y) || !std::isfinite(ys))
      throw DataError("metrics: valid pixel with non-positive depth");
    sum_d += std::log(y) - std::log(ys);
    n += 1;
  }
  if (n == 0) throw DataError("metrics: empty joint mask");
  const double mean_d = sum_d / static_cast<double>(n);

  for (size_t i = 0; i < gt.depth.size(); ++i) {
    if (!pred.mask[i] || !gt.mask[i]) continue;
    const double y = pred.depth[i], ys = gt.depth[i];
    const double ratio = y > ys ? y / ys : ys / y;
    if (ratio < thr1) ++n_delta1_;
    if (ratio < thr2) ++n_delta2_;
    if (ratio < thr3) ++n_delta3_;
    sum_abs_rel_ += std::fabs(y - ys) / ys;
    sum_sqr_rel_ += (y - ys) * (y - ys) / ys;
    sum_sq_lin_ += (y - ys) * (y - ys);
    const double d = std::log(y) - std::log(ys);
    sum_sq_log_ += d * d;
    sum_sq_si_ += (d - mean_d) * (d - mean_d);
  }
  n_pixels_ += n;
  n_images_ += 1;
}

MetricsReport MetricsAccumulator::report() const {
  if (n_pixels_ == 0) throw DataError("metrics: nothing accumulated");
  MetricsReport r;
  const double n = static_cast<double>(n_pixels_);
  r.delta1 = static_cast<double>(n_delta1_) / n;
  r.delta2 = static_cast<double>(n_delta2_) / n;
  r.delta3 = static_cast<double>(n_delta3_) / n;
  r.abs_rel = sum_abs_rel_ / n;
  r.sqr_rel = sum_sqr_rel_ / n;
  r.rmse_linear = std::sqrt(sum_sq_lin_ / n);
  r.rmse_log = std::sqrt(sum_sq_log_ / n);
  r.si_rmse_log = std::sqrt(sum_sq_si_ / n);
  r.n_images = n_images_;
  r.n_pixels = n_pixels_;
  return r;
}

MetricsReport evaluate(const DepthMap& pred, const DepthMap& gt) {
  MetricsAccumulator acc;
  acc.add(pred, gt);
  return acc.report();
}

MeanSubstitution mean_log_substitution(const std::vector<const DepthMap*>& preds,
                                       const std::vector<const DepthMap*>& gts) {
  if (preds.size() != gts.size() || preds.empty())
    throw DataError("mean_log_substitution: prediction/target count mismatch");
  double before_acc = 0.0, after_acc = 0.0;
  int64_t n_total = 0;
  for (size_t k = 0; k < preds.size(); ++k) {
    const DepthMap& pred = *preds[k];
    const DepthMap& gt = *gts[k];
    const double shift = optimal_log_scale(pred, gt);
    for (size_t i = 0; i < gt.depth.size(); ++i) {
      if (!pred.mask[i] || !gt.mask[i]) continue;
      const double d = std::log(pred.depth[i]) - std::log(gt.depth[i]);
      before_acc += d * d;
      after_acc += (d + shift) * (d + shift);
      n_total += 1;
    }
  }
  if (n_total == 0) throw DataError("mean_log_substitution: empty joint mask");
  MeanSubstitution out;
  out.rmse_log_before = std::sqrt(before_acc / static_cast<double>(n_total));
  out.rmse_log_after = std::sqrt(after_acc / static_cast<double>(n_total));
  return out;
}

double edge_alignment_score(const std::vector<const DepthMap*>& preds,
                            const std::vector<const DepthMap*>& gts) {
  if (preds.size() != gts.size() || preds.empty())
    throw DataError("edge_alignment_score: prediction/target count mismatch");
  std::vector<double> a, b;
  for (size_t k = 0; k < preds.size(); ++k) {
    const DepthMap& p = *preds[k];
    const DepthMap& g = *gts[k];
    if (p.height != g.height || p.width != g.width)
      throw DataError("edge_alignment_score: map sizes differ");
    auto ok = [&](int r, int c) { return p.valid(r, c) && g.valid(r, c); };
    for (int r = 1; r + 1 < g.height; ++r) {
      for (int c = 1; c + 1 < g.width; ++c) {
        if (!ok(r, c) || !ok(r - 1, c) || !ok(r + 1, c) || !ok(r, c - 1) ||
            !ok(r, c + 1))
          continue;
        auto gmag = [&](const DepthMap& m) {
          const double dy = std::log(m.at(r + 1, c)) - std::log(m.at(r - 1, c));
          const double dx = std::log(m.at(r, c + 1)) - std::log(m.at(r, c - 1));
          return std::sqrt(dx * dx + dy * dy);
        };
        a.push_back(gmag(p));
        b.push_back(gmag(g));
      }
    }
  }
  if (a.size() < 2) throw DataError("edge_alignment_score: too few interior pixels");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  if (va <= 0.0 || vb <= 0.0) return 0.0;  // a flat field has no edges to align
  return cov / std::sqrt(va * vb);
}

}  // namespace mdepth
