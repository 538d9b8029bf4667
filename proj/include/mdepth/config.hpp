#pragma once

#include <string>
#include <vector>

#include "mdepth/augment.hpp"
#include "mdepth/network_spec.hpp"
#include "mdepth/trainer.hpp"

namespace mdepth {

// Line-oriented `key = value` file with [section] headers and '#' comments.
// Insertion order is preserved so canonical_text() (and its hash in run.txt)
// is stable across load/override/save.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback = "") const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  int64_t get_int(const std::string& section, const std::string& key,
                  int64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  void set(const std::string& section, const std::string& key,
           const std::string& value);

  std::string canonical_text() const;

 private:
  struct Item {
    std::string section, key, value;
  };
  std::vector<Item> items_;
};

// Section readers; each falls back to the shipped desk-scale defaults for
// missing keys.
NetworkSpec spec_from_config(const Config& cfg);
TrainConfig train_config_from_config(const Config& cfg);
AugmentParams augment_params_from_config(const Config& cfg);

}  // namespace mdepth
