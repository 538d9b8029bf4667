#pragma once

#include <cstdint>
#include <vector>

#include "mdepth/common.hpp"

namespace mdepth {

// Per-pixel metric depth (meters) with a validity mask. Valid pixels must be
// strictly positive and finite; losses and metrics read valid pixels only.
struct DepthMap {
  int height = 0;
  int width = 0;
  std::vector<double> depth;   // row-major, height*width
  std::vector<uint8_t> mask;   // 1 = valid

  DepthMap() = default;
  DepthMap(int h, int w)
      : height(h), width(w),
        depth(static_cast<size_t>(h) * w, 0.0),
        mask(static_cast<size_t>(h) * w, 0) {}

  size_t size() const { return depth.size(); }
  double& at(int r, int c) { return depth[static_cast<size_t>(r) * width + c]; }
  double at(int r, int c) const { return depth[static_cast<size_t>(r) * width + c]; }
  bool valid(int r, int c) const { return mask[static_cast<size_t>(r) * width + c] != 0; }
  void set(int r, int c, double d, bool v = true) {
    depth[static_cast<size_t>(r) * width + c] = d;
    mask[static_cast<size_t>(r) * width + c] = v ? 1 : 0;
  }

  int64_t n_valid() const;

  // Throws DataError if any valid pixel is non-positive or non-finite.
  void validate(const char* what) const;

  static DepthMap constant(int h, int w, double d);
};

}  // namespace mdepth
