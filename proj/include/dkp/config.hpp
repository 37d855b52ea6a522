// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration: TOML-style key-value files with sections,
// strict key validation, and CLI flag precedence (flags > file > defaults).

#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "dkp/common.hpp"

namespace dkp {

class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  static KeyValueConfig parse(const std::string& text,
                              const std::string& origin = "<string>") {
    KeyValueConfig cfg;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError(origin + ":" + std::to_string(lineno) +
                            ": malformed section header");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": expected key = value");
      std::string key = trim(line.substr(0, eq));
      std::string val = trim(line.substr(eq + 1));
      if (!val.empty() && val.front() == '"' && val.back() == '"' &&
          val.size() >= 2)
        val = val.substr(1, val.size() - 2);
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      cfg.values_[section.empty() ? key : section + "." + key] = val;
    }
    return cfg;
  }

  void set(const std::string& key, const std::string& val) {
    values_[key] = val;
  }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_str(const std::string& key, const std::string& dflt) const {
    auto it = values_.find(key);
    return it == values_.end() ? dflt : it->second;
  }
  double get_num(const std::string& key, double dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': not a number: '" +
                        it->second + "'");
    }
  }
  int get_int(const std::string& key, int dflt) const {
    const double v = get_num(key, dflt);
    const int i = static_cast<int>(v);
    if (v != i) throw ConfigError("config key '" + key + "': not an integer");
    return i;
  }

  // Reject any key outside the known set.
  void validate_keys(const std::set<std::string>& known) const {
    for (const auto& [k, v] : values_)
      if (!known.count(k)) throw ConfigError("unknown config key: " + k);
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }
  std::map<std::string, std::string> values_;
};

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "mesh.n",      "mesh.J",        "field.preset", "field.delta",
      "field.ell",   "field.E",       "field.seed",   "field.a11",
      "field.ann",   "probe.name",    "probe.p",      "probe.q",
      "probe.eps",   "probe.family",  "probe.seed",   "probe.trials",
      "probe.data",  "probe.norm",    "probe.scalar", "probe.detect",
      "output.dir",  "output.formats"};
  return keys;
}

// Typed view over the raw key-value map, validated against module
// preconditions before any computation starts.
struct ExperimentConfig {
  int n = 2;
  int J = 5;
  std::string preset = "dkp_smooth";
  double delta = 0.1;
  double ell = 1.0;
  std::string ename = "e11";
  std::uint64_t field_seed = 1;
  std::string probe_name;
  double p = 2.0, q = 2.0, eps = 0.05;
  std::string family = "trig+bumps";
  std::uint64_t seed = 1;
  int trials = 100;
  std::string data = "cos:1";
  std::string norm = "weak_dkp";
  std::string scalar = "sqrt_t";
  bool detect = false;
  std::string out_dir = "out";
  std::string formats = "json,csv,dat";

  static ExperimentConfig from(const KeyValueConfig& kv) {
    kv.validate_keys(known_config_keys());
    ExperimentConfig c;
    c.n = kv.get_int("mesh.n", c.n);
    c.J = kv.get_int("mesh.J", c.J);
    c.preset = kv.get_str("field.preset", c.preset);
    c.delta = kv.get_num("field.delta", c.delta);
    c.ell = kv.get_num("field.ell", c.ell);
    c.ename = kv.get_str("field.E", c.ename);
    c.field_seed = static_cast<std::uint64_t>(kv.get_num("field.seed", 1));
    c.probe_name = kv.get_str("probe.name", c.probe_name);
    c.p = kv.get_num("probe.p", c.p);
    c.q = kv.get_num("probe.q", c.q);
    c.eps = kv.get_num("probe.eps", c.eps);
    c.family = kv.get_str("probe.family", c.family);
    c.seed = static_cast<std::uint64_t>(kv.get_num("probe.seed", 1));
    c.trials = kv.get_int("probe.trials", c.trials);
    c.data = kv.get_str("probe.data", c.data);
    c.norm = kv.get_str("probe.norm", c.norm);
    c.scalar = kv.get_str("probe.scalar", c.scalar);
    c.detect = kv.get_num("probe.detect", 0) != 0;
    c.out_dir = kv.get_str("output.dir", c.out_dir);
    c.formats = kv.get_str("output.formats", c.formats);
    c.validate();
    return c;
  }

  void validate() const {
    if (n != 2 && n != 3) throw ConfigError("mesh.n must be 2 or 3");
    if (J < 3 || J > 10) throw ConfigError("mesh.J must be in [3,10]");
    if (!(p > 1.0 && p < 64.0)) throw ConfigError("probe.p must be in (1,64)");
    if (!(q > 1.0 && q < 64.0)) throw ConfigError("probe.q must be in (1,64)");
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("probe.eps must be in (0,1)");
    if (!(delta >= 0.0 && delta < 0.5))
      throw ConfigError("field.delta must be in [0, 0.5)");
    if (trials < 1) throw ConfigError("probe.trials must be >= 1");
  }
};

}  // namespace dkp
