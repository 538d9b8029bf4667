#include "mdepth/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

namespace mdepth {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec3 normalize(Vec3 v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

// Slab intersection against a box entered from outside. Returns the entry
// parameter and face normal, or false when the ray misses (or starts inside).
bool hit_box_outside(const Vec3& o, const Vec3& d, const Box& b, double* t_out,
                     Vec3* n_out) {
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  int enter_axis = -1;
  double enter_sign = 0.0;
  for (int a = 0; a < 3; ++a) {
    const size_t ai = static_cast<size_t>(a);
    if (d[ai] == 0.0) {
      if (o[ai] < b.lo[ai] || o[ai] > b.hi[ai]) return false;
      continue;
    }
    double t1 = (b.lo[ai] - o[ai]) / d[ai];
    double t2 = (b.hi[ai] - o[ai]) / d[ai];
    double sign = -1.0;  // entering through the lo face -> normal points -axis
    if (t1 > t2) {
      std::swap(t1, t2);
      sign = 1.0;
    }
    if (t1 > t_enter) {
      t_enter = t1;
      enter_axis = a;
      enter_sign = sign;
    }
    t_exit = std::min(t_exit, t2);
  }
  if (enter_axis < 0 || t_enter > t_exit || t_enter <= 1e-9) return false;
  *t_out = t_enter;
  Vec3 n{0, 0, 0};
  n[static_cast<size_t>(enter_axis)] = -enter_sign;
  *n_out = n;
  return true;
}

// Exit parameter of a ray starting inside the room shell; the normal points
// back into the room.
bool hit_room_inside(const Vec3& o, const Vec3& d, const SceneParams& s,
                     double* t_out, Vec3* n_out, int* face_out) {
  double t_exit = std::numeric_limits<double>::infinity();
  int axis = -1;
  double sign = 0.0;
  const double lo[3] = {s.room_left, s.room_floor, s.room_front};
  const double hi[3] = {s.room_right, s.room_ceiling, s.room_back};
  for (int a = 0; a < 3; ++a) {
    const size_t ai = static_cast<size_t>(a);
    if (d[ai] == 0.0) continue;
    const double t = d[ai] > 0.0 ? (hi[a] - o[ai]) / d[ai] : (lo[a] - o[ai]) / d[ai];
    if (t < t_exit) {
      t_exit = t;
      axis = a;
      sign = d[ai] > 0.0 ? -1.0 : 1.0;  // inward normal
    }
  }
  if (axis < 0 || t_exit <= 1e-9) return false;
  *t_out = t_exit;
  Vec3 n{0, 0, 0};
  n[static_cast<size_t>(axis)] = sign;
  *n_out = n;
  // face id: 0 walls, 1 floor, 2 ceiling
  if (axis == 1)
    *face_out = sign > 0.0 ? 1 : 2;
  else
    *face_out = 0;
  return true;
}

}  // namespace

SceneParams make_scene(uint64_t seed, const DatasetOptions& opt) {
  Rng rng(seed);
  SceneParams s;
  s.frame_height = opt.frame_height;
  s.frame_width = opt.frame_width;
  // ~60 degree horizontal field of view
  s.focal = opt.frame_width / (2.0 * std::tan(30.0 * kPi / 180.0));

  const double half_width = rng.uniform(1.8, 3.2);
  const double cam_height = rng.uniform(1.1, 1.7);
  const double room_height = rng.uniform(2.3, 3.3);
  const double back = rng.uniform(3.5, 8.5);

  s.scale = rng.uniform(0.75, 1.33);
  const double k = s.scale;
  s.room_left = -half_width * k;
  s.room_right = half_width * k;
  s.room_floor = -cam_height * k;
  s.room_ceiling = (-cam_height + room_height) * k;
  s.room_front = -0.5 * k;
  s.room_back = back * k;

  auto pastel = [&rng]() -> Vec3 {
    return {rng.uniform(0.35, 0.9), rng.uniform(0.35, 0.9), rng.uniform(0.35, 0.9)};
  };
  s.wall_albedo = pastel();
  s.floor_albedo = pastel();
  s.ceiling_albedo = pastel();

  const int n_objects = rng.uniform_int(3, 8);
  for (int i = 0; i < n_objects; ++i) {
    const double sx = rng.uniform(0.25, 1.2);
    const double sz = rng.uniform(0.25, 1.2);
    const double sy = rng.uniform(0.3, 1.6);
    const double cx = rng.uniform(-half_width * 0.8, half_width * 0.8);
    const double cz = rng.uniform(1.8, std::max(2.0, back - 0.4));
    const bool floating = rng.bernoulli(0.15);
    const double y0 = floating ? rng.uniform(0.2, 1.2) - cam_height : -cam_height;
    Box b;
    b.lo = {(cx - sx / 2) * k, y0 * k, (cz - sz / 2) * k};
    b.hi = {(cx + sx / 2) * k, (y0 + sy) * k, (cz + sz / 2) * k};
    b.albedo = {rng.uniform(0.15, 0.9), rng.uniform(0.15, 0.9), rng.uniform(0.15, 0.9)};
    s.objects.push_back(b);
  }

  s.light_dir = normalize({rng.uniform(-0.5, 0.5), -1.0, rng.uniform(-0.3, 0.6)});

  // video-like camera path with forward drift; stationary frames filtered out
  std::vector<FramePose> candidates;
  const int overdraw = opt.frames_per_scene * 3;
  for (int j = 0; j < overdraw; ++j) {
    FramePose f;
    f.position = {rng.uniform(-0.15, 0.15) * k, rng.uniform(-0.05, 0.05) * k,
                  (j * 0.05 + rng.uniform(-0.08, 0.08)) * k};
    f.yaw = rng.uniform(-6.0, 6.0) * kPi / 180.0;
    f.pitch = rng.uniform(-5.0, 1.0) * kPi / 180.0;
    f.timestamp = j / 3.0 + rng.uniform(-0.02, 0.02);
    candidates.push_back(f);
  }
  std::vector<std::array<double, 5>> poses;
  for (const auto& f : candidates)
    poses.push_back({f.position[0], f.position[1], f.position[2], f.yaw, f.pitch});
  std::vector<size_t> kept;
  for (size_t i = 0; i < poses.size(); ++i) {
    bool moved = true;
    if (!kept.empty()) {
      double delta = 0.0;
      for (int d = 0; d < 5; ++d)
        delta += std::fabs(poses[i][static_cast<size_t>(d)] -
                           poses[kept.back()][static_cast<size_t>(d)]);
      moved = delta >= opt.min_pose_delta;
    }
    if (moved) kept.push_back(i);
    if (static_cast<int>(kept.size()) == opt.frames_per_scene) break;
  }
  if (static_cast<int>(kept.size()) < opt.frames_per_scene)
    throw DataError("make_scene: not enough distinct camera poses");
  for (size_t i : kept) s.frames.push_back(candidates[i]);
  return s;
}

PixelRay camera_ray(const SceneParams& scene, const FramePose& pose, int row, int col) {
  const double xc = (col + 0.5 - scene.frame_width / 2.0) / scene.focal;
  const double yc = -(row + 0.5 - scene.frame_height / 2.0) / scene.focal;
  const double norm = std::sqrt(xc * xc + yc * yc + 1.0);
  const Vec3 d_cam{xc / norm, yc / norm, 1.0 / norm};

  const double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
  const double cp = std::cos(pose.pitch), sp = std::sin(pose.pitch);
  // pitch about x, then yaw about y
  const Vec3 d_p{d_cam[0], cp * d_cam[1] - sp * d_cam[2], sp * d_cam[1] + cp * d_cam[2]};
  const Vec3 d_w{cy * d_p[0] + sy * d_p[2], d_p[1], -sy * d_p[0] + cy * d_p[2]};

  PixelRay r;
  r.origin = pose.position;
  r.dir = d_w;
  r.axial = 1.0 / norm;  // z-depth per unit of ray parameter
  return r;
}

RenderResult render_frame(const SceneParams& scene, const FramePose& pose, Rng& rng) {
  RenderResult out;
  out.rgb = Rgb(scene.frame_height, scene.frame_width);
  out.depth = DepthMap(scene.frame_height, scene.frame_width);

  for (int r = 0; r < scene.frame_height; ++r) {
    for (int c = 0; c < scene.frame_width; ++c) {
      const PixelRay ray = camera_ray(scene, pose, r, c);
      double t_best;
      Vec3 n_best;
      Vec3 albedo;
      int face = -1;
      if (!hit_room_inside(ray.origin, ray.dir, scene, &t_best, &n_best, &face))
        throw NumericError("render_frame: ray escaped the room shell");
      albedo = face == 1 ? scene.floor_albedo
                         : (face == 2 ? scene.ceiling_albedo : scene.wall_albedo);
      for (const Box& b : scene.objects) {
        double t;
        Vec3 n;
        if (hit_box_outside(ray.origin, ray.dir, b, &t, &n) && t < t_best) {
          t_best = t;
          n_best = n;
          albedo = b.albedo;
        }
      }

      const double depth = t_best * ray.axial;
      out.depth.set(r, c, depth);

      // camera-relative shading: ambient + directional + a flash term that
      // falls off with distance normalized by room size, so the image stays
      // invariant under the global scale factor
      const double rel = t_best / scene.room_back;
      const double flash = std::max(0.0, -dot(n_best, ray.dir)) / (1.0 + 1.5 * rel * rel);
      const double direct = std::max(0.0, -dot(n_best, scene.light_dir));
      const double light = 0.25 + 0.35 * direct + 0.45 * flash;
      for (int ch = 0; ch < 3; ++ch) {
        const double noise = rng.uniform(-0.008, 0.008);
        out.rgb.at(ch, r, c) = std::clamp(albedo[static_cast<size_t>(ch)] * light + noise, 0.0, 1.0);
      }
    }
  }
  return out;
}

void inject_holes(DepthMap& depth, Rng& rng, const DatasetOptions& opt) {
  const int h = depth.height, w = depth.width;
  std::vector<uint8_t> edge(depth.size(), 0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double d = depth.at(r, c);
      auto gap = [&](int rr, int cc) {
        if (rr < 0 || rr >= h || cc < 0 || cc >= w) return false;
        const double q = depth.at(rr, cc);
        return std::fabs(d - q) / std::min(d, q) > opt.hole_edge_thresh;
      };
      if (gap(r - 1, c) || gap(r + 1, c) || gap(r, c - 1) || gap(r, c + 1))
        edge[static_cast<size_t>(r) * w + c] = 1;
    }
  }
  // drop along edges, with a softer dilated band
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const size_t i = static_cast<size_t>(r) * w + c;
      bool near_edge = false;
      for (int dr = -1; dr <= 1 && !near_edge; ++dr)
        for (int dc = -1; dc <= 1 && !near_edge; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr >= 0 && rr < h && cc >= 0 && cc < w &&
              edge[static_cast<size_t>(rr) * w + cc])
            near_edge = true;
        }
      double p = 0.0;
      if (edge[i])
        p = opt.hole_edge_drop;
      else if (near_edge)
        p = opt.hole_edge_drop * 0.5;
      else
        p = opt.hole_speckle;
      if (rng.bernoulli(p)) depth.mask[i] = 0;
    }
  }
  // occasional rectangular dropout patch (windows, specular surfaces)
  if (rng.bernoulli(0.25)) {
    const int ph = rng.uniform_int(2, 6), pw = rng.uniform_int(3, 12);
    const int r0 = rng.uniform_int(0, std::max(0, h - ph - 1));
    const int c0 = rng.uniform_int(0, std::max(0, w - pw - 1));
    for (int r = r0; r < r0 + ph; ++r)
      for (int c = c0; c < c0 + pw; ++c) depth.mask[static_cast<size_t>(r) * w + c] = 0;
  }
  if (depth.n_valid() == 0) depth.mask[depth.size() / 2] = 1;
}

GeneratedDataset generate_synthetic_dataset(const std::string& out_dir,
                                            const DatasetOptions& opt, uint64_t seed) {
  if (opt.scenes < 1 || opt.frames_per_scene < 1)
    throw Error("generate_synthetic_dataset: need at least one scene and frame");
  fs::create_directories(fs::path(out_dir) / "rgb");
  fs::create_directories(fs::path(out_dir) / "depth");

  Manifest train, test;
  train.split = "train";
  test.split = "test";
  const int train_scenes =
      std::max(1, static_cast<int>(opt.scenes * opt.train_fraction));

  double mean_acc[3] = {0, 0, 0};
  int64_t mean_px = 0;

  for (int si = 0; si < opt.scenes; ++si) {
    const SceneParams scene = make_scene(derive_seed(seed, static_cast<uint64_t>(si)), opt);
    const bool is_train = si < train_scenes;
    for (int fi = 0; fi < opt.frames_per_scene; ++fi) {
      Rng frame_rng(derive_seed(seed, static_cast<uint64_t>(si), 1000 + static_cast<uint64_t>(fi)));
      RenderResult frame = render_frame(scene, scene.frames[static_cast<size_t>(fi)], frame_rng);

      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (double d : frame.depth.depth) {
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
      if (lo < opt.min_depth || hi > opt.max_depth)
        throw DataError("generate_synthetic_dataset: scene depths escape the configured range");

      inject_holes(frame.depth, frame_rng, opt);

      char name[64];
      std::snprintf(name, sizeof(name), "scene%04d_f%d", si, fi);
      const std::string rgb_rel = std::string("rgb/") + name + ".ppm";
      const std::string depth_rel = std::string("depth/") + name + ".pgm";
      write_ppm((fs::path(out_dir) / rgb_rel).string(), frame.rgb);
      save_depth((fs::path(out_dir) / depth_rel).string(), frame.depth);

      if (is_train) {
        for (int ch = 0; ch < 3; ++ch)
          for (int r = 0; r < frame.rgb.height; ++r)
            for (int c = 0; c < frame.rgb.width; ++c) mean_acc[ch] += frame.rgb.at(ch, r, c);
        mean_px += static_cast<int64_t>(frame.rgb.height) * frame.rgb.width;
      }

      ManifestEntry e;
      e.id = name;
      e.rgb_path = rgb_rel;
      e.depth_path = depth_rel;
      char scene_id[32];
      std::snprintf(scene_id, sizeof(scene_id), "scene%04d", si);
      e.scene = scene_id;
      e.timestamp = scene.frames[static_cast<size_t>(fi)].timestamp;
      (is_train ? train : test).entries.push_back(e);
    }
  }

  for (int ch = 0; ch < 3; ++ch) {
    train.rgb_mean[static_cast<size_t>(ch)] = mean_acc[ch] / static_cast<double>(mean_px);
    test.rgb_mean[static_cast<size_t>(ch)] = train.rgb_mean[static_cast<size_t>(ch)];
  }

  GeneratedDataset out;
  out.train_manifest = (fs::path(out_dir) / "train.manifest").string();
  out.test_manifest = (fs::path(out_dir) / "test.manifest").string();
  save_manifest(out.train_manifest, train);
  save_manifest(out.test_manifest, test);
  return out;
}

}  // namespace mdepth
