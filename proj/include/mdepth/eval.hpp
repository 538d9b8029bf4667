#pragma once

#include <functional>

#include "mdepth/augment.hpp"
#include "mdepth/manifest.hpp"
#include "mdepth/metrics.hpp"
#include "mdepth/model.hpp"

namespace mdepth {

// Axis-aligned window in the full-resolution frame.
struct Region {
  int row_off = 0, col_off = 0;
  int height = 0, width = 0;
};

// Overlap rectangle; commutative and associative. Throws DataError when the
// regions do not meet.
Region intersect_regions(const Region& a, const Region& b);

// Restricts a map (placed at `own` in frame coordinates) to `target`, which
// must lie inside `own`.
DepthMap crop_to_region(const DepthMap& map, const Region& own, const Region& target);

// Nearest-neighbor magnification with src_index(i) = floor(i*src/dst); the
// mask is upsampled identically. Target must be at least the source size.
DepthMap upsample_nearest(const DepthMap& map, int target_height, int target_width);

// A method under evaluation: consumes the frame and its center-cropped
// network input, returns dense linear depth at the output grid.
struct Predictor {
  std::string name;
  std::function<DepthMap(const Sample& frame, const Rgb& net_input)> predict;
};

Predictor model_predictor(const TwoScaleModel& model, std::array<double, 3> rgb_mean,
                          bool use_fine, std::string name);
Predictor constant_map_predictor(DepthMap map, std::string name);

struct EvalProtocol {
  int input_height = 0, input_width = 0;    // center-crop / network input
  int output_height = 0, output_width = 0;  // prediction grid
  int workers = 1;
};

struct PerImageRow {
  std::string id;
  int64_t n_valid = 0;
  double alpha = 0.0;  // optimal log scale for this image
  double si_mse = 0.0;
  double si_rmse_log = 0.0;
  double rmse_log = 0.0;
  double abs_rel = 0.0;
};

struct DatasetEval {
  MetricsReport report;
  std::vector<PerImageRow> rows;  // sorted best (lowest si) to worst
  int64_t skipped = 0;
  double overlap_fraction = 1.0;  // evaluated pixels / prediction region
  double edge_alignment = 0.0;    // at the output grid (prediction vs
                                  // downsampled truth), free of upsampling
                                  // block artifacts
  MeanSubstitution substitution;
};

// Protocol order: center crop -> predict -> nearest-neighbor upsample to the
// crop window -> intersect with the ground-truth region -> pooled metrics.
// Per-image failures are recorded and skipped (nonzero skip count warns);
// pooling runs in id-sorted order for reproducibility.
DatasetEval evaluate_dataset(const Predictor& predictor, const Manifest& test,
                             const EvalProtocol& proto);

// One row per method over the common intersection of all method regions.
std::vector<DatasetEval> compare_methods(const std::vector<Predictor>& predictors,
                                         const Manifest& test, const EvalProtocol& proto);

void write_metrics_csv(const std::string& path, const MetricsReport& report);
void write_per_image_csv(const std::string& path, const std::vector<PerImageRow>& rows);
void write_comparison_csv(const std::string& path, const std::vector<std::string>& names,
                          const std::vector<DatasetEval>& evals);
void write_diagnostics_csv(const std::string& path, const std::vector<std::string>& names,
                           const std::vector<DatasetEval>& evals);

// (input, global prediction, refined prediction, ground truth) quadruples for
// the first `count` test images sorted best-to-worst by the refined stack's
// scale-invariant error.
void dump_prediction_gallery(const TwoScaleModel& model, std::array<double, 3> rgb_mean,
                             const Manifest& test, const EvalProtocol& proto, int count,
                             const std::string& out_dir);

}  // namespace mdepth
