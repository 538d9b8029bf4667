#pragma once

#include <string>
#include <vector>

#include "mdepth/depth_map.hpp"

namespace mdepth {

// Planar CHW RGB image, values in [0,1] (channel multipliers from
// augmentation may push values past 1; writers clamp on output).
struct Rgb {
  int height = 0;
  int width = 0;
  std::vector<double> data;  // 3 * height * width

  Rgb() = default;
  Rgb(int h, int w) : height(h), width(w), data(3ull * h * w, 0.0) {}
  double& at(int c, int r, int col) {
    return data[(static_cast<size_t>(c) * height + r) * width + col];
  }
  double at(int c, int r, int col) const {
    return data[(static_cast<size_t>(c) * height + r) * width + col];
  }
};

// Binary 8-bit PPM (P6).
void write_ppm(const std::string& path, const Rgb& image);
Rgb read_ppm(const std::string& path);

// Depth files are 16-bit binary PGM (P5, maxval 65535, big-endian rows per
// the netpbm spec), millimeters, 0 = invalid. Returns the number of pixels
// clamped to the 65.535 m ceiling; callers emit a warning when nonzero.
int save_depth(const std::string& path, const DepthMap& map);
DepthMap load_depth(const std::string& path);

// 8-bit PGM for diagnostic dumps (weight templates, previews).
void write_pgm8(const std::string& path, int height, int width,
                const std::vector<uint8_t>& gray);

}  // namespace mdepth
