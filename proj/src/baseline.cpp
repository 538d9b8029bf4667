#include "mdepth/baseline.hpp"

#include <cmath>

namespace mdepth {

DepthMap mean_depth_baseline(const Manifest& train, int crop_height, int crop_width,
                             int out_height, int out_width, bool log_space) {
  if (train.entries.empty()) throw DataError("mean_depth_baseline: empty training set");

  const size_t n_px = static_cast<size_t>(out_height) * out_width;
  std::vector<double> acc(n_px, 0.0);
  std::vector<int64_t> count(n_px, 0);

  for (size_t i = 0; i < train.entries.size(); ++i) {
    const DepthMap full = load_depth(train.resolve(train.entries[i].depth_path));
    if (full.height < crop_height || full.width < crop_width)
      throw DataError("mean_depth_baseline: frame smaller than the crop window");
    const int r0 = (full.height - crop_height) / 2;
    const int c0 = (full.width - crop_width) / 2;
    DepthMap cropped(crop_height, crop_width);
    for (int r = 0; r < crop_height; ++r)
      for (int c = 0; c < crop_width; ++c)
        cropped.set(r, c, full.at(r0 + r, c0 + c), full.valid(r0 + r, c0 + c));
    const DepthMap target = resample_nearest(cropped, out_height, out_width);
    for (size_t p = 0; p < n_px; ++p) {
      if (!target.mask[p]) continue;
      acc[p] += log_space ? std::log(target.depth[p]) : target.depth[p];
      count[p] += 1;
    }
  }

  double global = 0.0;
  int64_t global_n = 0;
  for (size_t p = 0; p < n_px; ++p) {
    global += acc[p];
    global_n += count[p];
  }
  if (global_n == 0) throw DataError("mean_depth_baseline: no valid training pixels");
  global /= static_cast<double>(global_n);

  DepthMap out(out_height, out_width);
  for (size_t p = 0; p < n_px; ++p) {
    const double m = count[p] > 0 ? acc[p] / static_cast<double>(count[p]) : global;
    out.depth[p] = log_space ? std::exp(m) : m;
    out.mask[p] = 1;
  }
  return out;
}

}  // namespace mdepth
