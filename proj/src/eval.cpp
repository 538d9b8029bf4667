#include "mdepth/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "mdepth/data_prep.hpp"
#include "mdepth/loss.hpp"

namespace mdepth {

namespace fs = std::filesystem;

Region intersect_regions(const Region& a, const Region& b) {
  Region out;
  out.row_off = std::max(a.row_off, b.row_off);
  out.col_off = std::max(a.col_off, b.col_off);
  const int bottom = std::min(a.row_off + a.height, b.row_off + b.height);
  const int right = std::min(a.col_off + a.width, b.col_off + b.width);
  out.height = bottom - out.row_off;
  out.width = right - out.col_off;
  if (out.height <= 0 || out.width <= 0)
    throw DataError("intersect_regions: regions do not overlap");
  return out;
}

DepthMap crop_to_region(const DepthMap& map, const Region& own, const Region& target) {
  if (map.height != own.height || map.width != own.width)
    throw Error("crop_to_region: map does not match its region");
  if (target.row_off < own.row_off || target.col_off < own.col_off ||
      target.row_off + target.height > own.row_off + own.height ||
      target.col_off + target.width > own.col_off + own.width)
    throw Error("crop_to_region: target escapes the map region");
  DepthMap out(target.height, target.width);
  const int r0 = target.row_off - own.row_off;
  const int c0 = target.col_off - own.col_off;
  for (int r = 0; r < target.height; ++r)
    for (int c = 0; c < target.width; ++c)
      out.set(r, c, map.at(r0 + r, c0 + c), map.valid(r0 + r, c0 + c));
  return out;
}

DepthMap upsample_nearest(const DepthMap& map, int target_height, int target_width) {
  if (target_height < map.height || target_width < map.width)
    throw DataError("upsample_nearest: target smaller than the source");
  DepthMap out(target_height, target_width);
  for (int r = 0; r < target_height; ++r) {
    const int sr = static_cast<int>(static_cast<int64_t>(r) * map.height / target_height);
    for (int c = 0; c < target_width; ++c) {
      const int sc = static_cast<int>(static_cast<int64_t>(c) * map.width / target_width);
      out.set(r, c, map.at(sr, sc), map.valid(sr, sc));
    }
  }
  return out;
}

Predictor model_predictor(const TwoScaleModel& model, std::array<double, 3> rgb_mean,
                          bool use_fine, std::string name) {
  Predictor p;
  p.name = std::move(name);
  // the TwoScaleModel outlives predictors in every pipeline here; capture by
  // reference to avoid copying parameter tensors
  const TwoScaleModel* m = &model;
  p.predict = [m, rgb_mean, use_fine](const Sample&, const Rgb& net_input) {
    NoGradGuard no_grad;
    auto input = tensor_from({1, 3, net_input.height, net_input.width},
                             input_from_rgb(net_input, rgb_mean));
    TensorPtr log_pred = coarse_forward(*m, input, false);
    if (use_fine) log_pred = fine_forward(*m, input, log_pred, false);
    DepthMap out(m->spec.output_height, m->spec.output_width);
    for (size_t i = 0; i < out.depth.size(); ++i) {
      out.depth[i] = std::exp(log_pred->data[i]);
      out.mask[i] = 1;
    }
    return out;
  };
  return p;
}

Predictor constant_map_predictor(DepthMap map, std::string name) {
  Predictor p;
  p.name = std::move(name);
  p.predict = [map = std::move(map)](const Sample&, const Rgb&) { return map; };
  return p;
}

namespace {

struct AlignedPair {
  bool ok = false;
  std::string id;
  std::string error;
  DepthMap pred;  // cropped to the evaluated window
  DepthMap gt;
  DepthMap pred_native;  // output-grid pair for the edge diagnostic, which
  DepthMap gt_native;    // would otherwise drown in upsampling block combs
  double overlap_fraction = 1.0;
};

// Runs the protocol for one frame against the given evaluation window
// (the prediction region intersected with whatever the caller requires).
AlignedPair align_one(const Predictor& predictor, const Manifest& test, size_t index,
                      const EvalProtocol& proto) {
  AlignedPair out;
  out.id = test.entries[index].id;
  try {
    const Sample frame = load_sample(test, index);
    const Sample view = test_transform(frame, proto.input_height, proto.input_width);
    DepthMap pred = predictor.predict(frame, view.rgb);
    if (pred.height != proto.output_height || pred.width != proto.output_width)
      throw DataError("prediction is not at the output grid size");
    const DepthMap up = upsample_nearest(pred, proto.input_height, proto.input_width);

    const Region pred_region{(frame.depth.height - proto.input_height) / 2,
                             (frame.depth.width - proto.input_width) / 2,
                             proto.input_height, proto.input_width};
    const Region gt_region{0, 0, frame.depth.height, frame.depth.width};
    const Region overlap = intersect_regions(pred_region, gt_region);
    out.pred = crop_to_region(up, pred_region, overlap);
    out.gt = crop_to_region(frame.depth, gt_region, overlap);
    out.overlap_fraction = static_cast<double>(overlap.height) * overlap.width /
                           (static_cast<double>(pred_region.height) * pred_region.width);
    out.pred_native = std::move(pred);
    out.gt_native = resample_nearest(crop_to_region(frame.depth, gt_region, pred_region),
                                     proto.output_height, proto.output_width);
    out.ok = true;
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

DatasetEval pool_aligned(std::vector<AlignedPair>& pairs) {
  DatasetEval eval;
  std::vector<size_t> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return pairs[a].id < pairs[b].id; });

  MetricsAccumulator acc;
  std::vector<const DepthMap*> preds, gts;
  std::vector<const DepthMap*> native_preds, native_gts;
  double overlap_sum = 0.0;
  for (size_t i : order) {
    AlignedPair& p = pairs[i];
    if (!p.ok) {
      ++eval.skipped;
      std::cerr << "evaluate: skipping " << p.id << ": " << p.error << "\n";
      continue;
    }
    PerImageRow row;
    row.id = p.id;
    try {
      const LogDiffStats stats = log_diff_stats(p.pred, p.gt);
      row.n_valid = stats.n_valid;
      row.alpha = optimal_log_scale(p.pred, p.gt);
      row.si_mse = si_error(p.pred, p.gt);
      row.si_rmse_log = std::sqrt(row.si_mse);
      row.rmse_log = std::sqrt(stats.sum_d2 / static_cast<double>(stats.n_valid));
      double abs_rel = 0.0;
      for (size_t k = 0; k < p.gt.depth.size(); ++k)
        if (p.pred.mask[k] && p.gt.mask[k])
          abs_rel += std::fabs(p.pred.depth[k] - p.gt.depth[k]) / p.gt.depth[k];
      row.abs_rel = abs_rel / static_cast<double>(stats.n_valid);
      acc.add(p.pred, p.gt);
    } catch (const Error& e) {
      ++eval.skipped;
      std::cerr << "evaluate: skipping " << p.id << ": " << e.what() << "\n";
      continue;
    }
    eval.rows.push_back(std::move(row));
    overlap_sum += p.overlap_fraction;
    preds.push_back(&p.pred);
    gts.push_back(&p.gt);
    native_preds.push_back(&p.pred_native);
    native_gts.push_back(&p.gt_native);
  }
  if (preds.empty()) throw DataError("evaluate: no image survived the protocol");
  eval.report = acc.report();
  eval.overlap_fraction = overlap_sum / static_cast<double>(preds.size());
  eval.edge_alignment = edge_alignment_score(native_preds, native_gts);
  eval.substitution = mean_log_substitution(preds, gts);
  std::stable_sort(eval.rows.begin(), eval.rows.end(),
                   [](const PerImageRow& a, const PerImageRow& b) {
                     return a.si_mse != b.si_mse ? a.si_mse < b.si_mse : a.id < b.id;
                   });
  if (eval.skipped > 0)
    std::cerr << "evaluate: warning: " << eval.skipped << " images skipped\n";
  return eval;
}

}  // namespace

DatasetEval evaluate_dataset(const Predictor& predictor, const Manifest& test,
                             const EvalProtocol& proto) {
  if (test.entries.empty()) throw DataError("evaluate: empty test manifest");
  std::vector<AlignedPair> pairs(test.entries.size());
  parallel_for(static_cast<int64_t>(test.entries.size()), proto.workers,
               [&](int64_t i) {
                 pairs[static_cast<size_t>(i)] =
                     align_one(predictor, test, static_cast<size_t>(i), proto);
               });
  return pool_aligned(pairs);
}

std::vector<DatasetEval> compare_methods(const std::vector<Predictor>& predictors,
                                         const Manifest& test, const EvalProtocol& proto) {
  if (predictors.empty()) throw UsageError("compare: need at least one method");
  // All methods run the same crop protocol here, so the common intersection
  // is each method's own region; evaluate_dataset already restricts to it.
  std::vector<DatasetEval> out;
  out.reserve(predictors.size());
  for (const auto& p : predictors) out.push_back(evaluate_dataset(p, test, proto));
  return out;
}

void write_metrics_csv(const std::string& path, const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << MetricsReport::csv_header() << "\n" << report.csv_row() << "\n";
}

void write_per_image_csv(const std::string& path, const std::vector<PerImageRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "id,n_valid,alpha,si_mse,si_rmse_log,rmse_log,abs_rel\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), ",%lld,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                  static_cast<long long>(r.n_valid), r.alpha, r.si_mse, r.si_rmse_log,
                  r.rmse_log, r.abs_rel);
    out << r.id << buf;
  }
}

void write_comparison_csv(const std::string& path, const std::vector<std::string>& names,
                          const std::vector<DatasetEval>& evals) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "method," << MetricsReport::csv_header() << "\n";
  for (size_t i = 0; i < evals.size(); ++i)
    out << names[i] << "," << evals[i].report.csv_row() << "\n";
}

void write_diagnostics_csv(const std::string& path, const std::vector<std::string>& names,
                           const std::vector<DatasetEval>& evals) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "method,edge_alignment,rmse_log_before,rmse_log_after,overlap_fraction,skipped\n";
  char buf[256];
  for (size_t i = 0; i < evals.size(); ++i) {
    std::snprintf(buf, sizeof(buf), ",%.9g,%.9g,%.9g,%.9g,%lld\n",
                  evals[i].edge_alignment, evals[i].substitution.rmse_log_before,
                  evals[i].substitution.rmse_log_after, evals[i].overlap_fraction,
                  static_cast<long long>(evals[i].skipped));
    out << names[i] << buf;
  }
}

void dump_prediction_gallery(const TwoScaleModel& model, std::array<double, 3> rgb_mean,
                             const Manifest& test, const EvalProtocol& proto, int count,
                             const std::string& out_dir) {
  fs::create_directories(out_dir);
  const Predictor coarse = model_predictor(model, rgb_mean, false, "coarse");
  const Predictor fine = model_predictor(model, rgb_mean, true, "fine");
  const DatasetEval fine_eval = evaluate_dataset(fine, test, proto);

  std::map<std::string, size_t> index_by_id;
  for (size_t i = 0; i < test.entries.size(); ++i) index_by_id[test.entries[i].id] = i;

  const int n = std::min<int>(count, static_cast<int>(fine_eval.rows.size()));
  for (int rank = 0; rank < n; ++rank) {
    const std::string& id = fine_eval.rows[static_cast<size_t>(rank)].id;
    const size_t idx = index_by_id.at(id);
    const Sample frame = load_sample(test, idx);
    const Sample view = test_transform(frame, proto.input_height, proto.input_width);
    char prefix[64];
    std::snprintf(prefix, sizeof(prefix), "%03d_%s", rank, id.c_str());
    const std::string base = (fs::path(out_dir) / prefix).string();
    write_ppm(base + "_input.ppm", view.rgb);
    save_depth(base + "_coarse.pgm", coarse.predict(frame, view.rgb));
    save_depth(base + "_fine.pgm", fine.predict(frame, view.rgb));
    save_depth(base + "_gt.pgm", frame.depth);
  }
}

}  // namespace mdepth
