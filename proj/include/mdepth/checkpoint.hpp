#pragma once

#include <string>

#include "mdepth/model.hpp"

namespace mdepth {

// Binary container (layout documented in docs/formats.md):
//   magic "MDEPTHCK", version byte 0x01,
//   uint32 LE spec length, spec text (NetworkSpec::to_text),
//   then every parameter tensor of the coarse stack followed by the fine
//   stack, declaration order (weights then bias per layer), as little-endian
//   float32 values. Training keeps parameters float32-representable, so
//   save -> load reproduces them exactly.
void save_checkpoint(const std::string& path, const TwoScaleModel& model);
TwoScaleModel load_checkpoint(const std::string& path);

}  // namespace mdepth
