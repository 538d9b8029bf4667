#include "mdepth/data_prep.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

namespace mdepth {

DepthMap mask_extremes(const DepthMap& map) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < map.depth.size(); ++i) {
    if (!map.mask[i]) continue;
    lo = std::min(lo, map.depth[i]);
    hi = std::max(hi, map.depth[i]);
  }
  if (!std::isfinite(lo)) throw DataError("mask_extremes: no valid pixels");

  DepthMap out = map;
  int64_t kept = 0;
  for (size_t i = 0; i < out.depth.size(); ++i) {
    if (!out.mask[i]) continue;
    if (out.depth[i] == lo || out.depth[i] == hi)
      out.mask[i] = 0;
    else
      ++kept;
  }
  if (kept == 0) throw DataError("mask_extremes: all pixels at the recorded extremes");
  return out;
}

std::vector<std::pair<size_t, size_t>> associate_frames(
    const std::vector<TimedFrame>& rgb, const std::vector<TimedFrame>& depth) {
  if (rgb.empty() || depth.empty())
    throw DataError("associate_frames: empty input manifest");

  // nearest rgb per depth; ties toward the earlier rgb timestamp
  std::vector<size_t> claim(depth.size());
  for (size_t d = 0; d < depth.size(); ++d) {
    size_t best = 0;
    double best_dt = std::numeric_limits<double>::infinity();
    double best_ts = 0.0;
    for (size_t r = 0; r < rgb.size(); ++r) {
      const double dt = std::fabs(rgb[r].timestamp - depth[d].timestamp);
      if (dt < best_dt || (dt == best_dt && rgb[r].timestamp < best_ts)) {
        best_dt = dt;
        best = r;
        best_ts = rgb[r].timestamp;
      }
    }
    claim[d] = best;
  }

  std::map<size_t, int> claims_per_rgb;
  for (size_t r : claim) ++claims_per_rgb[r];

  std::vector<std::pair<size_t, size_t>> pairs;
  for (size_t d = 0; d < depth.size(); ++d)
    if (claims_per_rgb[claim[d]] == 1) pairs.emplace_back(claim[d], d);
  if (pairs.empty())
    throw DataError("associate_frames: every rgb frame was claimed more than once");
  return pairs;
}

std::vector<size_t> filter_stationary(const std::vector<std::array<double, 5>>& poses,
                                      double min_delta) {
  std::vector<size_t> kept;
  for (size_t i = 0; i < poses.size(); ++i) {
    if (kept.empty()) {
      kept.push_back(i);
      continue;
    }
    const auto& a = poses[kept.back()];
    const auto& b = poses[i];
    double delta = 0.0;
    for (int k = 0; k < 5; ++k) delta += std::fabs(b[static_cast<size_t>(k)] - a[static_cast<size_t>(k)]);
    if (delta >= min_delta) kept.push_back(i);
  }
  return kept;
}

DepthMap resample_nearest(const DepthMap& map, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw Error("resample_nearest: bad target size");
  DepthMap out(out_h, out_w);
  for (int r = 0; r < out_h; ++r) {
    const int sr = static_cast<int>(static_cast<int64_t>(r) * map.height / out_h);
    for (int c = 0; c < out_w; ++c) {
      const int sc = static_cast<int>(static_cast<int64_t>(c) * map.width / out_w);
      out.set(r, c, map.at(sr, sc), map.valid(sr, sc));
    }
  }
  return out;
}

}  // namespace mdepth
