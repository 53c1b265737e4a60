#pragma once

// Plain "key = value" configuration with # comments. Every problem in a file
// is collected and reported together, each with its line number.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "els2/error.hpp"
#include "els2/fields.hpp"
#include "els2/leslie.hpp"

namespace els2 {

struct Config {
  int Lmax = 0;
  Viscosities mu;
  double dt_max = 1e-2;
  double cfl = 0.5;
  double t_end = 0.0;
  int out_every = 10;
  int checkpoint_every = 0;  // steps between checkpoints; 0 = final only
  InitialData initial;
  double eps0 = 0.3;
  double cap_radius = 0.5;
  double blowup_delta = 0.05;
  double conv_tol = 1e-6;
  bool stop_on_convergence = true;
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 1;
};

/// Which keys must be present: `validate` needs only the viscosities.
enum class ConfigScope { coefficients, full };

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct ConfigEntry {
  std::string value;
  int line = 0;
};

class ConfigReader {
 public:
  ConfigReader(std::map<std::string, ConfigEntry> entries, std::vector<std::string>& problems)
      : entries_(std::move(entries)), problems_(problems) {}

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  void require(const std::string& key) {
    if (!has(key)) problems_.push_back("missing required key '" + key + "'");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return;
    const auto& v = it->second.value;
    if constexpr (std::is_same_v<T, bool>) {
      if (v == "true" || v == "1" || v == "yes") {
        out = true;
      } else if (v == "false" || v == "0" || v == "no") {
        out = false;
      } else {
        bad(it->second, key, "a boolean");
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      out = v;
    } else if constexpr (std::is_same_v<T, double>) {
      // from_chars for double is not available in every libstdc++ of interest.
      std::istringstream is(v);
      is.imbue(std::locale::classic());
      double x = 0.0;
      if (!(is >> x) || !is.eof() || !std::isfinite(x)) {
        bad(it->second, key, "a finite real");
      } else {
        out = x;
      }
    } else {
      T x{};
      const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
      if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        bad(it->second, key, "an integer");
      } else {
        out = x;
      }
    }
  }

  void get_vec3(const std::string& key, Vec3& out) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return;
    std::istringstream is(it->second.value);
    is.imbue(std::locale::classic());
    Vec3 v;
    if (!(is >> v.x() >> v.y() >> v.z()) || !(is >> std::ws).eof() || !v.allFinite()) {
      bad(it->second, key, "three reals");
    } else {
      out = v;
    }
  }

  void check(const std::string& key, bool ok, const std::string& rule) {
    if (!has(key) || ok) return;
    problems_.push_back("line " + std::to_string(entries_.at(key).line) + ": " + key + " " + rule);
  }

 private:
  void bad(const ConfigEntry& e, const std::string& key, const std::string& what) {
    problems_.push_back("line " + std::to_string(e.line) + ": " + key + " = '" + e.value + "' is not " + what);
  }

  std::map<std::string, ConfigEntry> entries_;
  std::vector<std::string>& problems_;
};

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "Lmax", "mu1", "mu2", "mu3", "mu4", "mu5", "mu6", "dt_max", "cfl", "t_end", "out_every",
      "checkpoint_every", "eps0", "cap_radius", "blowup_delta", "conv_tol", "stop_on_convergence", "output_dir",
      "seed", "initial.kind", "initial.director", "initial.amplitude", "initial.flow_amplitude", "initial.flow_l",
      "initial.flow_m", "initial.path"};
  return keys;
}

}  // namespace detail

inline Config parse_config(const std::string& text, ConfigScope scope = ConfigScope::full) {
  std::vector<std::string> problems;
  std::map<std::string, detail::ConfigEntry> entries;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(line_no) + ": expected 'key = value'");
      continue;
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!detail::known_keys().count(key)) {
      problems.push_back("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
      continue;
    }
    if (entries.count(key)) {
      problems.push_back("line " + std::to_string(line_no) + ": duplicate key '" + key + "' (first on line " +
                         std::to_string(entries[key].line) + ")");
      continue;
    }
    if (value.empty()) {
      problems.push_back("line " + std::to_string(line_no) + ": empty value for '" + key + "'");
      continue;
    }
    entries[key] = {value, line_no};
  }

  Config c;
  detail::ConfigReader r(std::move(entries), problems);
  for (const char* k : {"mu1", "mu2", "mu3", "mu4", "mu5", "mu6"}) r.require(k);
  if (scope == ConfigScope::full) {
    for (const char* k : {"Lmax", "t_end", "initial.kind"}) r.require(k);
  }
  r.get("mu1", c.mu.mu1);
  r.get("mu2", c.mu.mu2);
  r.get("mu3", c.mu.mu3);
  r.get("mu4", c.mu.mu4);
  r.get("mu5", c.mu.mu5);
  r.get("mu6", c.mu.mu6);
  r.get("Lmax", c.Lmax);
  r.get("dt_max", c.dt_max);
  r.get("cfl", c.cfl);
  r.get("t_end", c.t_end);
  r.get("out_every", c.out_every);
  r.get("checkpoint_every", c.checkpoint_every);
  r.get("eps0", c.eps0);
  r.get("cap_radius", c.cap_radius);
  r.get("blowup_delta", c.blowup_delta);
  r.get("conv_tol", c.conv_tol);
  r.get("stop_on_convergence", c.stop_on_convergence);
  std::string dir;
  r.get("output_dir", dir);
  if (!dir.empty()) c.output_dir = dir;
  r.get("seed", c.seed);

  std::string kind;
  r.get("initial.kind", kind);
  if (!kind.empty()) {
    try {
      c.initial.kind = parse_initial_kind(kind);
    } catch (const Error& e) {
      problems.push_back(std::string("initial.kind: ") + e.what());
    }
  }
  r.get_vec3("initial.director", c.initial.director);
  r.get("initial.amplitude", c.initial.amplitude);
  r.get("initial.flow_amplitude", c.initial.flow_amplitude);
  r.get("initial.flow_l", c.initial.flow_l);
  r.get("initial.flow_m", c.initial.flow_m);
  r.get("initial.path", c.initial.path);
  c.initial.seed = c.seed;

  r.check("Lmax", c.Lmax >= 4, "must be >= 4 (Lmax >= 4 is the smallest supported truncation)");
  r.check("t_end", c.t_end >= 0.0, "must be >= 0");
  r.check("dt_max", c.dt_max > 0.0, "must be > 0");
  r.check("cfl", c.cfl > 0.0, "must be > 0");
  r.check("out_every", c.out_every >= 1, "must be >= 1");
  r.check("checkpoint_every", c.checkpoint_every >= 0, "must be >= 0");
  r.check("eps0", c.eps0 > 0.0, "must be > 0");
  r.check("cap_radius", c.cap_radius > 0.0 && c.cap_radius <= std::numbers::pi, "must lie in (0, pi]");
  r.check("blowup_delta", c.blowup_delta >= 0.0 && c.blowup_delta < 1.0, "must lie in [0, 1)");
  r.check("conv_tol", c.conv_tol > 0.0, "must be > 0");
  r.check("initial.director", c.initial.director.norm() > 0.0, "must be nonzero");
  r.check("initial.flow_l", c.initial.flow_l >= 1, "must be >= 1");
  r.check("initial.flow_m", std::abs(c.initial.flow_m) <= c.initial.flow_l, "must satisfy |m| <= l");
  if (scope == ConfigScope::full && c.initial.kind == InitialKind::checkpoint && !r.has("initial.path")) {
    problems.push_back("initial.kind = checkpoint needs initial.path");
  }

  if (!problems.empty()) {
    std::string msg = std::to_string(problems.size()) + " problem(s) in config";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(ErrorKind::parse, msg);
  }
  return c;
}

inline Config load_config(const std::filesystem::path& path, ConfigScope scope = ConfigScope::full) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), scope);
}

}  // namespace els2
