#pragma once

#include <string>
#include <vector>

#include "mdepth/depth_map.hpp"

namespace mdepth {

// Invalidates every pixel equal to the per-image valid minimum or maximum
// (sensor artifacts cluster at the recorded extremes). Throws DataError when
// nothing survives, e.g. on a constant map; callers drop the sample.
DepthMap mask_extremes(const DepthMap& map);

struct TimedFrame {
  std::string path;
  std::string scene;
  double timestamp = 0.0;
};

// Pairs each depth frame with its nearest-in-time RGB frame. Any RGB claimed
// by two or more depths is discarded together with all of its claimants (the
// one-to-many mapping is not resolvable). |dt| ties break toward the earlier
// RGB frame. Result is (rgb index, depth index) pairs in depth order; throws
// DataError when nothing survives.
std::vector<std::pair<size_t, size_t>> associate_frames(
    const std::vector<TimedFrame>& rgb, const std::vector<TimedFrame>& depth);

// Drops frames whose pose moved less than min_delta from the previously kept
// frame (near-duplicate shots from a stationary camera). poses are packed
// (x, y, z, yaw, pitch) rows; returns the kept indices.
std::vector<size_t> filter_stationary(const std::vector<std::array<double, 5>>& poses,
                                      double min_delta);

// Nearest-neighbor resample to an arbitrary size with the index map
// src_index(i) = floor(i * src / dst); the mask travels with the values.
DepthMap resample_nearest(const DepthMap& map, int out_h, int out_w);

}  // namespace mdepth
