#pragma once

#include <array>
#include <string>
#include <vector>

#include "mdepth/depth_map.hpp"
#include "mdepth/image_io.hpp"
#include "mdepth/rng.hpp"

namespace mdepth {

// RGB frame, depth target and metadata for one training/evaluation unit.
struct Sample {
  std::string id;
  Rgb rgb;
  DepthMap depth;
  double timestamp = 0.0;
};

struct ManifestEntry {
  std::string id;
  std::string rgb_path;    // relative to the manifest directory
  std::string depth_path;
  std::string scene;
  double timestamp = 0.0;
};

// Line-oriented dataset index. '#' header lines carry the split tag and the
// per-dataset RGB channel means used for input normalization; rows are
// id<TAB>rgb<TAB>depth<TAB>scene<TAB>timestamp.
struct Manifest {
  std::string split;                       // train | test
  std::array<double, 3> rgb_mean{0, 0, 0};
  std::vector<ManifestEntry> entries;
  std::string base_dir;  // set on load; resolves relative paths

  std::string resolve(const std::string& rel) const;
};

Manifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const Manifest& m);

// Checks ids are unique and every referenced file exists; throws DataError
// naming the offender. Applies to ingested datasets, not to evened sampling
// lists (which repeat entries by design).
void validate_manifest(const Manifest& m);

Sample load_sample(const Manifest& m, size_t index);

// Rebuilds the entry list with exactly k draws per scene id (sampling with
// repetition when a scene holds fewer than k frames), deterministic in rng.
Manifest even_scenes(const Manifest& m, int k, Rng& rng);

}  // namespace mdepth
