#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mdepth/loss.hpp"
#include "mdepth/metrics.hpp"
#include "mdepth/rng.hpp"
#include "oracles.hpp"

using namespace mdepth;

namespace {

DepthMap random_map(int h, int w, Rng& rng, double hole_prob = 0.2,
                    double lo = 0.5, double hi = 10.0) {
  DepthMap m(h, w);
  for (size_t i = 0; i < m.depth.size(); ++i) {
    if (rng.uniform() < hole_prob) {
      m.depth[i] = 0.0;
      m.mask[i] = 0;
    } else {
      m.depth[i] = rng.uniform(lo, hi);
      m.mask[i] = 1;
    }
  }
  if (m.n_valid() == 0) {
    m.depth[0] = rng.uniform(lo, hi);
    m.mask[0] = 1;
  }
  return m;
}

DepthMap scaled(const DepthMap& m, double c) {
  DepthMap out = m;
  for (size_t i = 0; i < out.depth.size(); ++i)
    if (out.mask[i]) out.depth[i] *= c;
  return out;
}

}  // namespace

TEST_CASE("optimal_log_scale basic cases") {
  DepthMap gt = DepthMap::constant(2, 2, 3.0);
  CHECK(optimal_log_scale(gt, gt) == 0.0);

  DepthMap half = scaled(gt, 0.5);
  CHECK(optimal_log_scale(half, gt) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  DepthMap pred(1, 2), truth(1, 2);
  pred.set(0, 0, 1.0);
  pred.set(0, 1, 2.0);
  truth.set(0, 0, 2.0);
  truth.set(0, 1, 2.0);
  CHECK(optimal_log_scale(pred, truth) == doctest::Approx(0.34657359).epsilon(1e-7));
}

TEST_CASE("optimal_log_scale rejects empty joint mask") {
  DepthMap a(2, 2), b(2, 2);
  a.set(0, 0, 1.0);
  b.set(1, 1, 1.0);  // disjoint validity
  CHECK_THROWS_AS(optimal_log_scale(a, b), DataError);
}

TEST_CASE("si_error is exactly scale invariant in closed form") {
  Rng rng(31);
  DepthMap gt = random_map(6, 8, rng, 0.1);
  for (double c : {0.01, 0.5, 1.0, 2.0, 137.0}) {
    DepthMap pred = scaled(gt, c);
    CHECK(si_error(pred, gt) < 1e-20);
  }
}

TEST_CASE("si_error hand-computed two-pixel value") {
  DepthMap pred(1, 2), gt(1, 2);
  pred.set(0, 0, 1.0);
  pred.set(0, 1, 2.0);
  gt.set(0, 0, 2.0);
  gt.set(0, 1, 2.0);
  const double l2 = std::log(2.0);
  CHECK(si_error(pred, gt) == doctest::Approx(l2 * l2 / 4.0).epsilon(1e-12));
  CHECK(si_error(pred, gt) == doctest::Approx(0.1201).epsilon(1e-3));
}

TEST_CASE("si_error_pairwise degenerate single pixel") {
  DepthMap pred(1, 1), gt(1, 1);
  pred.set(0, 0, 3.0);
  gt.set(0, 0, 7.0);
  CHECK(si_error_pairwise(pred, gt) == 0.0);
  CHECK(si_error(pred, gt) == 0.0);
}

TEST_CASE("three forms agree on random masked maps") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const int h = rng.uniform_int(1, 12), w = rng.uniform_int(1, 12);
    DepthMap gt = random_map(h, w, rng);
    DepthMap pred = random_map(h, w, rng, 0.0);
    if (log_diff_stats(pred, gt).n_valid == 0) continue;
    const double d3 = si_error(pred, gt);
    const double d2 = si_error_pairwise(pred, gt);
    const double d1 = oracle::si_error_explicit_shift(pred, gt);
    CHECK(std::fabs(d3 - d2) < 1e-12);
    CHECK(std::fabs(d3 - d1) < 1e-12);
  }
}

TEST_CASE("LogDiffStats satisfies the Cauchy-Schwarz bound") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    DepthMap gt = random_map(5, 5, rng);
    DepthMap pred = random_map(5, 5, rng, 0.0);
    LogDiffStats s = log_diff_stats(pred, gt);
    CHECK(s.sum_d2 * static_cast<double>(s.n_valid) >=
          s.sum_d * s.sum_d - 1e-9);
  }
}

TEST_CASE("training_loss endpoints") {
  Rng rng(55);
  DepthMap gt = random_map(8, 8, rng);
  std::vector<double> pred_log(gt.depth.size());
  for (auto& v : pred_log) v = rng.uniform(-0.7, 2.3);

  // si_weight 0: elementwise mean squared log difference
  double msd = 0.0;
  int64_t n = 0;
  for (size_t i = 0; i < gt.depth.size(); ++i) {
    if (!gt.mask[i]) continue;
    const double d = pred_log[i] - std::log(gt.depth[i]);
    msd += d * d;
    ++n;
  }
  msd /= static_cast<double>(n);
  CHECK(std::fabs(training_loss(pred_log, gt, 0.0).value - msd) < 1e-12);

  // si_weight 1: the scale-invariant error of the exponentiated prediction
  DepthMap pred(gt.height, gt.width);
  for (size_t i = 0; i < pred_log.size(); ++i) pred.set(static_cast<int>(i) / gt.width, static_cast<int>(i) % gt.width, std::exp(pred_log[i]));
  CHECK(std::fabs(training_loss(pred_log, gt, 1.0).value - si_error(pred, gt)) < 1e-12);
}

TEST_CASE("training_loss hand case at si_weight 0.5") {
  DepthMap gt(1, 2);
  gt.set(0, 0, 1.0);
  gt.set(0, 1, 1.0);
  std::vector<double> pred_log{1.0, 1.0};  // d = [1, 1]
  TrainingLoss l = training_loss(pred_log, gt, 0.5);
  CHECK(l.value == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(l.grad[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(l.grad[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("training_loss gradient matches central differences, masked pixels zero") {
  Rng rng(404);
  DepthMap gt = random_map(5, 6, rng, 0.3);
  std::vector<double> pred_log(gt.depth.size());
  for (auto& v : pred_log) v = rng.uniform(-0.5, 2.0);

  for (double w : {0.0, 0.5, 1.0}) {
    TrainingLoss l = training_loss(pred_log, gt, w);
    const double eps = 1e-6;
    for (size_t i = 0; i < pred_log.size(); ++i) {
      if (!gt.mask[i]) {
        CHECK(l.grad[i] == 0.0);
        continue;
      }
      auto p = pred_log;
      p[i] += eps;
      const double fp = training_loss(p, gt, w).value;
      p[i] -= 2 * eps;
      const double fm = training_loss(p, gt, w).value;
      const double numeric = (fp - fm) / (2 * eps);
      const double denom = std::max({std::fabs(numeric), std::fabs(l.grad[i]), 1e-12});
      CHECK(std::fabs(numeric - l.grad[i]) / denom < 1e-6);
    }
  }
}

TEST_CASE("training_loss is non-increasing in si_weight") {
  Rng rng(61);
  DepthMap gt = random_map(6, 6, rng);
  std::vector<double> pred_log(gt.depth.size());
  for (auto& v : pred_log) v = rng.uniform(-1.0, 2.5);
  double prev = training_loss(pred_log, gt, 0.0).value;
  for (double w : {0.25, 0.5, 0.75, 1.0}) {
    const double cur = training_loss(pred_log, gt, w).value;
    CHECK(cur <= prev + 1e-15);
    prev = cur;
  }
}

TEST_CASE("training_loss error paths") {
  DepthMap gt(2, 2);  // all invalid
  std::vector<double> pred_log(4, 0.0);
  CHECK_THROWS_AS(training_loss(pred_log, gt, 0.5), DataError);
  DepthMap ok = DepthMap::constant(2, 2, 1.0);
  CHECK_THROWS_AS(training_loss(pred_log, ok, 1.5), Error);
}

TEST_CASE("mask insensitivity: garbage at masked pixels changes nothing") {
  Rng rng(83);
  DepthMap gt = random_map(7, 9, rng, 0.35);
  DepthMap pred = random_map(7, 9, rng, 0.15);
  std::vector<double> pred_log(gt.depth.size());
  for (auto& v : pred_log) v = rng.uniform(-0.5, 2.0);

  const double loss_ref = training_loss(pred_log, gt, 0.5).value;
  const double si_ref = si_error(pred, gt);
  MetricsReport rep_ref = evaluate(pred, gt);

  DepthMap gt2 = gt;
  DepthMap pred2 = pred;
  auto pred_log2 = pred_log;
  for (size_t i = 0; i < gt2.depth.size(); ++i) {
    if (!gt2.mask[i]) {
      gt2.depth[i] = rng.uniform(-5000.0, 5000.0);
      pred_log2[i] = rng.uniform(-50.0, 50.0);
    }
    if (!pred2.mask[i]) pred2.depth[i] = rng.uniform(-100.0, 100.0);
  }
  CHECK(training_loss(pred_log2, gt2, 0.5).value == loss_ref);
  CHECK(si_error(pred2, gt2) == si_ref);
  MetricsReport rep2 = evaluate(pred2, gt2);
  CHECK(rep2.csv_row() == rep_ref.csv_row());
  CHECK(rep2.delta1 == rep_ref.delta1);
  CHECK(rep2.rmse_log == rep_ref.rmse_log);
  CHECK(rep2.si_rmse_log == rep_ref.si_rmse_log);
}

TEST_CASE("evaluate: perfect prediction") {
  Rng rng(71);
  DepthMap gt = random_map(6, 6, rng);
  MetricsReport r = evaluate(gt, gt);
  CHECK(r.delta1 == 1.0);
  CHECK(r.delta2 == 1.0);
  CHECK(r.delta3 == 1.0);
  CHECK(r.abs_rel == 0.0);
  CHECK(r.sqr_rel == 0.0);
  CHECK(r.rmse_linear == 0.0);
  CHECK(r.rmse_log == 0.0);
  CHECK(r.si_rmse_log == 0.0);
}

TEST_CASE("evaluate: doubled prediction closed form") {
  Rng rng(72);
  DepthMap gt = random_map(6, 6, rng, 0.1);
  DepthMap pred = scaled(gt, 2.0);
  MetricsReport r = evaluate(pred, gt);
  // ratio is exactly 2 everywhere; 1.25^3 = 1.953125 < 2
  CHECK(r.delta1 == 0.0);
  CHECK(r.delta2 == 0.0);
  CHECK(r.delta3 == 0.0);
  CHECK(r.abs_rel == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.rmse_log == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(r.si_rmse_log < 1e-9);
}

TEST_CASE("evaluate: metric ordering invariants") {
  Rng rng(73);
  for (int trial = 0; trial < 20; ++trial) {
    DepthMap gt = random_map(8, 8, rng);
    DepthMap pred = random_map(8, 8, rng, 0.0);
    MetricsReport r = evaluate(pred, gt);
    CHECK(r.delta1 <= r.delta2);
    CHECK(r.delta2 <= r.delta3);
    CHECK(r.si_rmse_log <= r.rmse_log + 1e-12);
  }
}

TEST_CASE("mean_log_substitution identity with si error") {
  Rng rng(74);
  std::vector<DepthMap> preds, gts;
  for (int k = 0; k < 5; ++k) {
    gts.push_back(random_map(8, 10, rng));
    preds.push_back(random_map(8, 10, rng, 0.0));
  }
  std::vector<const DepthMap*> pp, gp;
  double pooled_sq = 0.0;
  int64_t pooled_n = 0;
  for (int k = 0; k < 5; ++k) {
    pp.push_back(&preds[static_cast<size_t>(k)]);
    gp.push_back(&gts[static_cast<size_t>(k)]);
    const LogDiffStats s = log_diff_stats(preds[static_cast<size_t>(k)], gts[static_cast<size_t>(k)]);
    pooled_sq += si_error(preds[static_cast<size_t>(k)], gts[static_cast<size_t>(k)]) *
                 static_cast<double>(s.n_valid);
    pooled_n += s.n_valid;
  }
  MeanSubstitution ms = mean_log_substitution(pp, gp);
  CHECK(ms.rmse_log_after ==
        doctest::Approx(std::sqrt(pooled_sq / static_cast<double>(pooled_n))).epsilon(1e-10));
  CHECK(ms.rmse_log_after <= ms.rmse_log_before + 1e-12);

  // perfect-scale predictions collapse to zero after substitution
  std::vector<DepthMap> s_pred;
  std::vector<const DepthMap*> sp;
  for (int k = 0; k < 5; ++k) s_pred.push_back(scaled(gts[static_cast<size_t>(k)], 3.7));
  for (auto& m : s_pred) sp.push_back(&m);
  CHECK(mean_log_substitution(sp, gp).rmse_log_after < 1e-10);
}

TEST_CASE("edge_alignment_score favors aligned structure") {
  // gt: a step edge; aligned prediction shares it, flat prediction does not
  DepthMap gt(8, 8);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) gt.set(r, c, c < 4 ? 2.0 : 4.0);
  DepthMap aligned(8, 8);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) aligned.set(r, c, c < 4 ? 1.1 : 2.3);
  DepthMap off(8, 8);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) off.set(r, c, r < 4 ? 1.1 : 2.3);

  std::vector<const DepthMap*> g{&gt};
  std::vector<const DepthMap*> a{&aligned};
  std::vector<const DepthMap*> o{&off};
  CHECK(edge_alignment_score(a, g) > 0.9);
  CHECK(edge_alignment_score(o, g) < 0.1);
}

TEST_CASE("metrics csv row shape") {
  DepthMap gt = DepthMap::constant(2, 2, 2.0);
  MetricsReport r = evaluate(gt, gt);
  CHECK(std::string(MetricsReport::csv_header()) ==
        "delta1,delta2,delta3,abs_rel,sqr_rel,rmse_lin,rmse_log,si_rmse_log,n_images,n_pixels");
  CHECK(r.csv_row() == "1,1,1,0,0,0,0,0,1,4");
}
