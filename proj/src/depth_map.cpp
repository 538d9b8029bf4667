#include "mdepth/depth_map.hpp"

#include <cmath>
#include <string>

namespace mdepth {

int64_t DepthMap::n_valid() const {
  int64_t n = 0;
  for (uint8_t m : mask) n += m ? 1 : 0;
  return n;
}

void DepthMap::validate(const char* what) const {
  for (size_t i = 0; i < depth.size(); ++i) {
    if (mask[i] && (!(depth[i] > 0.0) || !std::isfinite(depth[i])))
      throw DataError(std::string(what) +
                      ": valid pixel with non-positive or non-finite depth");
  }
}

DepthMap DepthMap::constant(int h, int w, double d) {
  DepthMap m(h, w);
  std::fill(m.depth.begin(), m.depth.end(), d);
  std::fill(m.mask.begin(), m.mask.end(), uint8_t{1});
  return m;
}

}  // namespace mdepth
