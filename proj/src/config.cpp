#include "mdepth/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mdepth {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  const auto b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

Config Config::parse_text(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) throw UsageError("config: empty section name");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) +
                       ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw UsageError("config line " + std::to_string(lineno) + ": empty key");
    cfg.set(section, key, value);
  }
  return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
  for (const auto& it : items_)
    if (it.section == section && it.key == key) return true;
  return false;
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
  for (const auto& it : items_)
    if (it.section == section && it.key == key) return it.value;
  return fallback;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return std::stod(get(section, key));
  } catch (const std::exception&) {
    throw UsageError("config: " + section + "." + key + " is not a number");
  }
}

int64_t Config::get_int(const std::string& section, const std::string& key,
                        int64_t fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return std::stoll(get(section, key));
  } catch (const std::exception&) {
    throw UsageError("config: " + section + "." + key + " is not an integer");
  }
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("config: " + section + "." + key + " is not a boolean");
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
  for (auto& it : items_) {
    if (it.section == section && it.key == key) {
      it.value = value;
      return;
    }
  }
  items_.push_back({section, key, value});
}

std::string Config::canonical_text() const {
  std::ostringstream out;
  std::string open;
  for (const auto& it : items_) {
    if (it.section != open) {
      open = it.section;
      out << "[" << open << "]\n";
    }
    out << it.key << " = " << it.value << "\n";
  }
  return out.str();
}

NetworkSpec spec_from_config(const Config& cfg) {
  NetworkSpec defaults = NetworkSpec::desk_scale();
  std::ostringstream text;
  auto line = [&](const char* key, const std::string& fallback) {
    text << key << " = " << cfg.get("spec", key, fallback) << "\n";
  };
  char size[32];
  std::snprintf(size, sizeof(size), "%dx%d", defaults.input_width, defaults.input_height);
  line("input", size);
  std::snprintf(size, sizeof(size), "%dx%d", defaults.output_width, defaults.output_height);
  line("output", size);
  line("coarse", layer_list_to_text(defaults.coarse));
  line("fine", layer_list_to_text(defaults.fine));
  return parse_network_spec(text.str());
}

TrainConfig train_config_from_config(const Config& cfg) {
  TrainConfig t;
  t.batch_size = static_cast<int>(cfg.get_int("train", "batch", t.batch_size));
  t.momentum = cfg.get_double("train", "momentum", t.momentum);
  t.learning_rate = cfg.get_double("train", "learning_rate", t.learning_rate);
  t.si_weight = cfg.get_double("train", "si_weight", t.si_weight);
  t.phase1_samples = cfg.get_int("train", "phase1_samples", t.phase1_samples);
  t.phase2_samples = cfg.get_int("train", "phase2_samples", t.phase2_samples);
  t.checkpoint_every =
      static_cast<int>(cfg.get_int("train", "checkpoint_every", t.checkpoint_every));
  t.seed = static_cast<uint64_t>(cfg.get_int("train", "seed", static_cast<int64_t>(t.seed)));
  return t;
}

AugmentParams augment_params_from_config(const Config& cfg) {
  AugmentParams a;
  auto range = [&](const char* key, double* lo, double* hi) {
    if (!cfg.has("augment", key)) return;
    std::istringstream in(cfg.get("augment", key));
    if (!(in >> *lo >> *hi))
      throw UsageError(std::string("config: augment.") + key + " wants 'lo hi'");
  };
  range("scale", &a.scale_lo, &a.scale_hi);
  range("color", &a.color_lo, &a.color_hi);
  a.rotation_deg = cfg.get_double("augment", "rotation", a.rotation_deg);
  a.rotation_enabled = cfg.get_bool("augment", "rotation_enabled", a.rotation_enabled);
  a.flip_prob = cfg.get_double("augment", "flip_prob", a.flip_prob);
  return a;
}

}  // namespace mdepth
