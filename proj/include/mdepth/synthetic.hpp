#pragma once

#include <array>
#include <string>
#include <vector>

#include "mdepth/manifest.hpp"
#include "mdepth/rng.hpp"

namespace mdepth {

using Vec3 = std::array<double, 3>;

struct Box {
  Vec3 lo, hi;
  Vec3 albedo;
};

struct FramePose {
  Vec3 position{0, 0, 0};
  double yaw = 0.0;    // radians
  double pitch = 0.0;  // radians
  double timestamp = 0.0;
};

// A Lambertian box-world room. Coordinates: x right, y up, z forward; the
// scene is generated in canonical units and then multiplied by `scale`
// about the camera center, which leaves the rendered image untouched while
// scaling every depth — the ambiguity the scale-invariant loss absorbs.
struct SceneParams {
  double room_left = 0, room_right = 0;      // x planes
  double room_floor = 0, room_ceiling = 0;   // y planes
  double room_front = 0, room_back = 0;      // z planes (camera between them)
  Vec3 wall_albedo{}, floor_albedo{}, ceiling_albedo{};
  std::vector<Box> objects;
  Vec3 light_dir{0, -1, 0};  // direction light travels, unit length
  double scale = 1.0;        // recorded jitter factor, already folded in
  std::vector<FramePose> frames;
  int frame_height = 0, frame_width = 0;
  double focal = 0.0;  // pixels
};

struct DatasetOptions {
  int scenes = 500;
  int frames_per_scene = 4;
  int frame_width = 72;
  int frame_height = 54;
  double train_fraction = 0.8;
  double min_depth = 0.3;   // generator rejects scenes outside this range
  double max_depth = 14.0;
  double hole_edge_thresh = 0.06;  // relative neighbor gap flagged as an edge
  double hole_edge_drop = 0.55;
  double hole_speckle = 0.002;
  double min_pose_delta = 0.01;  // stationary-frame filter threshold
};

SceneParams make_scene(uint64_t seed, const DatasetOptions& opt);

struct PixelRay {
  Vec3 origin, dir;     // dir unit length, world frame
  double axial = 1.0;   // multiply ray parameter t by this for z-depth
};
PixelRay camera_ray(const SceneParams& scene, const FramePose& pose, int row, int col);

struct RenderResult {
  Rgb rgb;
  DepthMap depth;  // fully valid; hole injection is a separate step
};
RenderResult render_frame(const SceneParams& scene, const FramePose& pose, Rng& rng);

// Kinect-style missing data: dropouts along depth discontinuities, sparse
// speckle, and occasional rectangular patches. At least one pixel stays valid.
void inject_holes(DepthMap& depth, Rng& rng, const DatasetOptions& opt);

struct GeneratedDataset {
  std::string train_manifest;
  std::string test_manifest;
};

// Renders `scenes` rooms at frames_per_scene shots each, splits by scene,
// writes ppm/pgm files plus the two manifests (train rgb means in both
// headers). Deterministic per seed, byte-for-byte.
GeneratedDataset generate_synthetic_dataset(const std::string& out_dir,
                                            const DatasetOptions& opt, uint64_t seed);

}  // namespace mdepth
