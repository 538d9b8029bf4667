#pragma once

#include "mdepth/manifest.hpp"
#include "mdepth/rng.hpp"

namespace mdepth {

// Online training transform ranges. Draw order inside augment() is fixed:
// scale, rotation, crop offsets, color, flip.
struct AugmentParams {
  double scale_lo = 1.0, scale_hi = 1.5;   // depths are divided by the drawn s
  double rotation_deg = 5.0;               // drawn from [-r, r]
  bool rotation_enabled = true;
  double color_lo = 0.8, color_hi = 1.2;   // per-channel RGB multiplier
  double flip_prob = 0.5;
  int crop_height = 0, crop_width = 0;     // network input size

  void validate() const;  // throws UsageError on inconsistent ranges
};

// Applies scale (RGB bilinear, depth nearest, depths / s), in-plane rotation
// (newly exposed pixels invalid and zeroed), a random crop to the target
// size, per-channel color multiply (RGB only), and a horizontal flip of both
// RGB and depth. Resampling never interpolates across invalid depth pixels;
// invalid stays invalid. Deterministic given the rng state.
Sample augment(const Sample& sample, const AugmentParams& params, Rng& rng);

// Deterministic test-time transform: center crop of the RGB to the network
// input size with offset floor(remainder/2); depth values and mask are left
// untouched at frame resolution (the evaluation harness aligns regions).
Sample test_transform(const Sample& sample, int crop_height, int crop_width);

}  // namespace mdepth
