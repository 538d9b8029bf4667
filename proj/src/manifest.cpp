#include "mdepth/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mdepth {

namespace fs = std::filesystem;

std::string Manifest::resolve(const std::string& rel) const {
  if (rel.empty() || rel.front() == '/' || base_dir.empty()) return rel;
  return (fs::path(base_dir) / rel).string();
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path);
  Manifest m;
  m.base_dir = fs::path(path).parent_path().string();
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key, eq;
      hs >> key >> eq;
      if (eq != "=") continue;  // free-form comment
      if (key == "split") {
        hs >> m.split;
      } else if (key == "rgb_mean") {
        hs >> m.rgb_mean[0] >> m.rgb_mean[1] >> m.rgb_mean[2];
      }
      continue;
    }
    ManifestEntry e;
    std::istringstream ls(line);
    std::string ts;
    if (!std::getline(ls, e.id, '\t') || !std::getline(ls, e.rgb_path, '\t') ||
        !std::getline(ls, e.depth_path, '\t') || !std::getline(ls, e.scene, '\t') ||
        !std::getline(ls, ts))
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed manifest row");
    if (e.scene.empty())
      throw DataError(path + ":" + std::to_string(lineno) + ": empty scene id");
    try {
      e.timestamp = std::stod(ts);
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad timestamp");
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

void save_manifest(const std::string& path, const Manifest& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path);
  char buf[128];
  out << "# mdepth manifest v1\n";
  out << "# split = " << m.split << "\n";
  std::snprintf(buf, sizeof(buf), "# rgb_mean = %.17g %.17g %.17g\n", m.rgb_mean[0],
                m.rgb_mean[1], m.rgb_mean[2]);
  out << buf;
  for (const auto& e : m.entries) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.timestamp);
    out << e.id << '\t' << e.rgb_path << '\t' << e.depth_path << '\t' << e.scene
        << '\t' << buf << '\n';
  }
  if (!out) throw DataError("short write to " + path);
}

void validate_manifest(const Manifest& m) {
  std::set<std::string> seen;
  for (const auto& e : m.entries) {
    if (!seen.insert(e.id).second)
      throw DataError("manifest: duplicate id '" + e.id + "'");
    for (const std::string* p : {&e.rgb_path, &e.depth_path}) {
      const std::string full = m.resolve(*p);
      if (!fs::exists(full)) throw DataError("manifest references missing file: " + full);
    }
  }
}

Sample load_sample(const Manifest& m, size_t index) {
  if (index >= m.entries.size()) throw DataError("load_sample: index out of range");
  const ManifestEntry& e = m.entries[index];
  Sample s;
  s.id = e.id;
  s.rgb = read_ppm(m.resolve(e.rgb_path));
  s.depth = load_depth(m.resolve(e.depth_path));
  s.timestamp = e.timestamp;
  if (s.rgb.height != s.depth.height || s.rgb.width != s.depth.width)
    throw DataError("load_sample: rgb/depth size mismatch for " + e.id);
  return s;
}

Manifest even_scenes(const Manifest& m, int k, Rng& rng) {
  if (k < 1) throw Error("even_scenes: k must be >= 1");
  std::map<std::string, std::vector<size_t>> by_scene;  // ordered for determinism
  for (size_t i = 0; i < m.entries.size(); ++i)
    by_scene[m.entries[i].scene].push_back(i);

  Manifest out;
  out.split = m.split;
  out.rgb_mean = m.rgb_mean;
  out.base_dir = m.base_dir;
  for (auto& [scene, idxs] : by_scene) {
    // whole shuffled passes, then a partial pass for the remainder
    std::vector<size_t> picks;
    while (static_cast<int>(picks.size()) < k) {
      std::vector<size_t> pass = idxs;
      for (size_t i = pass.size(); i > 1; --i)
        std::swap(pass[i - 1], pass[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
      for (size_t idx : pass) {
        if (static_cast<int>(picks.size()) >= k) break;
        picks.push_back(idx);
      }
    }
    for (size_t idx : picks) out.entries.push_back(m.entries[idx]);
  }
  return out;
}

}  // namespace mdepth
