#pragma once

#include "mdepth/data_prep.hpp"
#include "mdepth/manifest.hpp"

namespace mdepth {

// Input-independent predictor: the per-pixel average of the training depth
// targets at the network output resolution (each target center-cropped to the
// network input window first, mirroring what a model sees). Averaging happens
// in log space by default (geometric mean), consistent with the log-space
// losses; pixels valid in no training image are filled with the global mean.
DepthMap mean_depth_baseline(const Manifest& train, int crop_height, int crop_width,
                             int out_height, int out_width, bool log_space = true);

}  // namespace mdepth
