#include "mdepth/augment.hpp"

#include <algorithm>
#include <cmath>

namespace mdepth {

namespace {

constexpr double kPi = 3.14159265358979323846;

Rgb scale_rgb(const Rgb& src, int nh, int nw) {
  Rgb out(nh, nw);
  const double ry = static_cast<double>(src.height) / nh;
  const double rx = static_cast<double>(src.width) / nw;
  for (int r = 0; r < nh; ++r) {
    const double sy = (r + 0.5) * ry - 0.5;
    const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, src.height - 1);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double fy = std::clamp(sy - y0, 0.0, 1.0);
    for (int c = 0; c < nw; ++c) {
      const double sx = (c + 0.5) * rx - 0.5;
      const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, src.width - 1);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double fx = std::clamp(sx - x0, 0.0, 1.0);
      for (int ch = 0; ch < 3; ++ch) {
        const double top = src.at(ch, y0, x0) * (1 - fx) + src.at(ch, y0, x1) * fx;
        const double bot = src.at(ch, y1, x0) * (1 - fx) + src.at(ch, y1, x1) * fx;
        out.at(ch, r, c) = top * (1 - fy) + bot * fy;
      }
    }
  }
  return out;
}

// Nearest-neighbor with mask propagation; bilinear would invent depths across
// object boundaries and holes.
DepthMap scale_depth(const DepthMap& src, int nh, int nw) {
  DepthMap out(nh, nw);
  const double ry = static_cast<double>(src.height) / nh;
  const double rx = static_cast<double>(src.width) / nw;
  for (int r = 0; r < nh; ++r) {
    const int sr = std::clamp(static_cast<int>(std::lround((r + 0.5) * ry - 0.5)), 0,
                              src.height - 1);
    for (int c = 0; c < nw; ++c) {
      const int sc = std::clamp(static_cast<int>(std::lround((c + 0.5) * rx - 0.5)), 0,
                                src.width - 1);
      out.set(r, c, src.at(sr, sc), src.valid(sr, sc));
    }
  }
  return out;
}

void rotate_pair(Rgb& rgb, DepthMap& depth, double radians) {
  const int h = rgb.height, w = rgb.width;
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  const double cs = std::cos(radians), sn = std::sin(radians);
  Rgb out_rgb(h, w);
  DepthMap out_depth(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      // inverse map: rotate destination back into the source frame
      const double dx = c - cx, dy = r - cy;
      const double sx = cs * dx + sn * dy + cx;
      const double sy = -sn * dx + cs * dy + cy;
      if (sx < 0.0 || sy < 0.0 || sx > w - 1 || sy > h - 1) {
        // exposed corner: zeroed RGB, invalid depth
        continue;
      }
      const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, w - 1);
      const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, h - 1);
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double fx = sx - x0, fy = sy - y0;
      for (int ch = 0; ch < 3; ++ch) {
        const double top = rgb.at(ch, y0, x0) * (1 - fx) + rgb.at(ch, y0, x1) * fx;
        const double bot = rgb.at(ch, y1, x0) * (1 - fx) + rgb.at(ch, y1, x1) * fx;
        out_rgb.at(ch, r, c) = top * (1 - fy) + bot * fy;
      }
      const int nr = std::clamp(static_cast<int>(std::lround(sy)), 0, h - 1);
      const int nc = std::clamp(static_cast<int>(std::lround(sx)), 0, w - 1);
      out_depth.set(r, c, depth.at(nr, nc), depth.valid(nr, nc));
    }
  }
  rgb = std::move(out_rgb);
  depth = std::move(out_depth);
}

}  // namespace

void AugmentParams::validate() const {
  if (!(scale_lo > 0.0) || scale_hi < scale_lo)
    throw UsageError("augment: scale range must satisfy 0 < lo <= hi");
  if (rotation_deg < 0.0) throw UsageError("augment: rotation range must be >= 0");
  if (color_hi < color_lo || color_lo < 0.0)
    throw UsageError("augment: color range must satisfy 0 <= lo <= hi");
  if (flip_prob < 0.0 || flip_prob > 1.0)
    throw UsageError("augment: flip probability must be in [0,1]");
  if (crop_height < 1 || crop_width < 1)
    throw UsageError("augment: crop target size must be set");
}

Sample augment(const Sample& sample, const AugmentParams& params, Rng& rng) {
  params.validate();
  Sample out;
  out.id = sample.id;
  out.timestamp = sample.timestamp;

  // 1. scale; depths divide by s (the camera moves s times closer)
  const double s = rng.uniform(params.scale_lo, params.scale_hi);
  const int nh = std::max(1, static_cast<int>(std::lround(sample.rgb.height * s)));
  const int nw = std::max(1, static_cast<int>(std::lround(sample.rgb.width * s)));
  Rgb rgb = (nh == sample.rgb.height && nw == sample.rgb.width)
                ? sample.rgb
                : scale_rgb(sample.rgb, nh, nw);
  DepthMap depth = (nh == sample.depth.height && nw == sample.depth.width)
                       ? sample.depth
                       : scale_depth(sample.depth, nh, nw);
  for (size_t i = 0; i < depth.depth.size(); ++i) {
    if (depth.mask[i])
      depth.depth[i] /= s;
    else
      depth.depth[i] = 0.0;
  }

  // 2. rotation (geometry-preserving in-plane roll)
  if (params.rotation_enabled && params.rotation_deg > 0.0) {
    const double r = rng.uniform(-params.rotation_deg, params.rotation_deg);
    if (r != 0.0) rotate_pair(rgb, depth, r * kPi / 180.0);
  }

  // 3. random crop to the network input size
  if (params.crop_height > rgb.height || params.crop_width > rgb.width)
    throw DataError("augment: crop target exceeds the transformed image");
  const int r0 = rng.uniform_int(0, rgb.height - params.crop_height);
  const int c0 = rng.uniform_int(0, rgb.width - params.crop_width);
  out.rgb = Rgb(params.crop_height, params.crop_width);
  out.depth = DepthMap(params.crop_height, params.crop_width);
  for (int r = 0; r < params.crop_height; ++r) {
    for (int c = 0; c < params.crop_width; ++c) {
      for (int ch = 0; ch < 3; ++ch)
        out.rgb.at(ch, r, c) = rgb.at(ch, r0 + r, c0 + c);
      out.depth.set(r, c, depth.at(r0 + r, c0 + c), depth.valid(r0 + r, c0 + c));
    }
  }

  // 4. color multiply, RGB only
  for (int ch = 0; ch < 3; ++ch) {
    const double m = rng.uniform(params.color_lo, params.color_hi);
    for (int r = 0; r < out.rgb.height; ++r)
      for (int c = 0; c < out.rgb.width; ++c) out.rgb.at(ch, r, c) *= m;
  }

  // 5. horizontal flip of both RGB and depth
  if (rng.bernoulli(params.flip_prob)) {
    const int w = out.rgb.width;
    for (int ch = 0; ch < 3; ++ch)
      for (int r = 0; r < out.rgb.height; ++r)
        for (int c = 0; c < w / 2; ++c)
          std::swap(out.rgb.at(ch, r, c), out.rgb.at(ch, r, w - 1 - c));
    for (int r = 0; r < out.depth.height; ++r) {
      for (int c = 0; c < w / 2; ++c) {
        std::swap(out.depth.depth[static_cast<size_t>(r) * w + c],
                  out.depth.depth[static_cast<size_t>(r) * w + (w - 1 - c)]);
        std::swap(out.depth.mask[static_cast<size_t>(r) * w + c],
                  out.depth.mask[static_cast<size_t>(r) * w + (w - 1 - c)]);
      }
    }
  }
  return out;
}

Sample test_transform(const Sample& sample, int crop_height, int crop_width) {
  if (crop_height > sample.rgb.height || crop_width > sample.rgb.width)
    throw DataError("test_transform: input smaller than the crop size");
  const int r0 = (sample.rgb.height - crop_height) / 2;
  const int c0 = (sample.rgb.width - crop_width) / 2;
  Sample out;
  out.id = sample.id;
  out.timestamp = sample.timestamp;
  out.depth = sample.depth;  // untouched; the harness aligns regions
  out.rgb = Rgb(crop_height, crop_width);
  for (int ch = 0; ch < 3; ++ch)
    for (int r = 0; r < crop_height; ++r)
      for (int c = 0; c < crop_width; ++c)
        out.rgb.at(ch, r, c) = sample.rgb.at(ch, r0 + r, c0 + c);
  return out;
}

}  // namespace mdepth
