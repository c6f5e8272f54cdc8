#pragma once

// Flat "key = value" run configuration. Lines starting with '#' are
// comments; lists are comma separated. Numbers are written with 17
// significant digits so parse -> serialize -> parse is exact.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rwtune/error.hpp"
#include "rwtune/experiments.hpp"
#include "rwtune/tuner.hpp"

namespace rwtune::cli {

inline constexpr std::uint64_t kDefaultSeed = 271828;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace detail

class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text) {
    KeyValueConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = detail::trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
      std::string key = detail::trim(std::string_view(t).substr(0, eq));
      if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      if (cfg.has(key)) throw ConfigError("duplicate key '" + key + "'");
      cfg.entries_.emplace_back(std::move(key), detail::trim(std::string_view(t).substr(eq + 1)));
    }
    return cfg;
  }

  static KeyValueConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  std::string serialize() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
    return out;
  }

  bool has(std::string_view key) const { return find(key) != nullptr; }
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  void set(std::string key, std::string value) {
    for (auto& [k, v] : entries_)
      if (k == key) {
        v = std::move(value);
        return;
      }
    entries_.emplace_back(std::move(key), std::move(value));
  }
  void set(std::string key, double value) { set(std::move(key), detail::format_double(value)); }
  void set(std::string key, long long value) { set(std::move(key), std::to_string(value)); }
  void set(std::string key, const std::vector<double>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) s += (i ? ", " : "") + detail::format_double(values[i]);
    set(std::move(key), s);
  }

  std::string get_string(std::string_view key) const {
    if (const auto* v = find(key)) return *v;
    throw ConfigError("missing key '" + std::string(key) + "'");
  }
  std::string get_string(std::string_view key, std::string fallback) const {
    const auto* v = find(key);
    return v ? *v : fallback;
  }
  double get_double(std::string_view key) const { return to_double(key, get_string(key)); }
  double get_double(std::string_view key, double fallback) const {
    const auto* v = find(key);
    return v ? to_double(key, *v) : fallback;
  }
  long long get_int(std::string_view key, long long fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    long long out = 0;
    const auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || p != v->data() + v->size())
      throw ConfigError("key '" + std::string(key) + "': expected an integer, got '" + *v + "'");
    return out;
  }
  std::vector<double> get_list(std::string_view key) const {
    std::vector<double> out;
    std::istringstream in(get_string(key));
    std::string item;
    while (std::getline(in, item, ',')) {
      const std::string t = detail::trim(item);
      if (!t.empty()) out.push_back(to_double(key, t));
    }
    return out;
  }

 private:
  const std::string* find(std::string_view key) const {
    for (const auto& [k, v] : entries_)
      if (k == key) return &v;
    return nullptr;
  }
  static double to_double(std::string_view key, const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size())
      throw ConfigError("key '" + std::string(key) + "': expected a number, got '" + text + "'");
    return v;
  }

  std::vector<std::pair<std::string, std::string>> entries_;
};

// --- model specs <-> config -----------------------------------------------------

inline experiments::NormalModelSpec normal_spec_from(const KeyValueConfig& c) {
  experiments::NormalModelSpec s;
  s.y = c.get_list("y");
  s.mu_prior_mean = c.get_double("mu_prior_mean", s.mu_prior_mean);
  s.mu_prior_sd = c.get_double("mu_prior_sd", s.mu_prior_sd);
  s.sigma_shape = c.get_double("sigma_shape", s.sigma_shape);
  s.sigma_scale = c.get_double("sigma_scale", s.sigma_scale);
  s.mu_init = c.get_double("mu_init", s.mu_init);
  s.sigma_init = c.get_double("sigma_init", s.sigma_init);
  s.mu_step = c.get_double("mu_step", s.mu_step);
  s.sigma_step = c.get_double("sigma_step", s.sigma_step);
  if (c.has("known_sigma")) s.known_sigma = c.get_double("known_sigma");
  return s;
}

inline KeyValueConfig to_config(const experiments::NormalModelSpec& s) {
  KeyValueConfig c;
  c.set("model", std::string("normal"));
  c.set("y", s.y);
  c.set("mu_prior_mean", s.mu_prior_mean);
  c.set("mu_prior_sd", s.mu_prior_sd);
  c.set("sigma_shape", s.sigma_shape);
  c.set("sigma_scale", s.sigma_scale);
  c.set("mu_init", s.mu_init);
  c.set("sigma_init", s.sigma_init);
  c.set("mu_step", s.mu_step);
  c.set("sigma_step", s.sigma_step);
  if (s.known_sigma) c.set("known_sigma", *s.known_sigma);
  return c;
}

inline experiments::AnovaModelSpec anova_spec_from(const KeyValueConfig& c) {
  experiments::AnovaModelSpec s;
  for (int i = 0;; ++i) {
    const std::string key = "group." + std::to_string(i);
    if (!c.has(key)) break;
    s.groups.push_back(c.get_list(key));
  }
  s.sigma_shape = c.get_double("sigma_shape", s.sigma_shape);
  s.sigma_scale = c.get_double("sigma_scale", s.sigma_scale);
  s.delta_shape = c.get_double("delta_shape", s.delta_shape);
  s.delta_scale = c.get_double("delta_scale", s.delta_scale);
  s.theta_init = c.get_double("theta_init", s.theta_init);
  s.sigma_init = c.get_double("sigma_init", s.sigma_init);
  s.delta_init = c.get_double("delta_init", s.delta_init);
  s.mu_step = c.get_double("mu_step", s.mu_step);
  s.theta_step = c.get_double("theta_step", s.theta_step);
  s.sigma_step = c.get_double("sigma_step", s.sigma_step);
  s.delta_step = c.get_double("delta_step", s.delta_step);
  s.block_step = c.get_double("block_step", s.block_step);
  return s;
}

inline KeyValueConfig to_config(const experiments::AnovaModelSpec& s) {
  KeyValueConfig c;
  c.set("model", std::string("anova"));
  for (std::size_t i = 0; i < s.groups.size(); ++i) c.set("group." + std::to_string(i), s.groups[i]);
  c.set("sigma_shape", s.sigma_shape);
  c.set("sigma_scale", s.sigma_scale);
  c.set("delta_shape", s.delta_shape);
  c.set("delta_scale", s.delta_scale);
  c.set("theta_init", s.theta_init);
  c.set("sigma_init", s.sigma_init);
  c.set("delta_init", s.delta_init);
  c.set("mu_step", s.mu_step);
  c.set("theta_step", s.theta_step);
  c.set("sigma_step", s.sigma_step);
  c.set("delta_step", s.delta_step);
  c.set("block_step", s.block_step);
  return c;
}

// --- run configuration -----------------------------------------------------------

struct RunConfig {
  std::string command;
  std::string model;  // "normal" or "anova"
  std::optional<std::filesystem::path> config_file;
  std::uint64_t seed = kDefaultSeed;
  std::size_t iterations = 10000;
  TrialDesign design;
  std::filesystem::path out_dir = "rwtune-out";
  // simulate
  int guess_exponent = 4;
  std::optional<int> attempts_only;  // restrict the sweep to one attempts value
  int replications = 100;
  bool full_factorial = false;
  bool with_block = true;
};

/// Run-level keys shared by every model file; CLI flags override them.
inline void apply_run_keys(const KeyValueConfig& c, RunConfig& rc) {
  rc.seed = static_cast<std::uint64_t>(c.get_int("seed", static_cast<long long>(rc.seed)));
  rc.iterations = static_cast<std::size_t>(c.get_int("iterations", static_cast<long long>(rc.iterations)));
  rc.design.num_step_sizes = static_cast<int>(c.get_int("sizes", rc.design.num_step_sizes));
  rc.design.attempts_per_size = static_cast<int>(c.get_int("attempts", rc.design.attempts_per_size));
  rc.design.cycles = static_cast<int>(c.get_int("cycles", rc.design.cycles));
  rc.design.target_acceptance = c.get_double("target", rc.design.target_acceptance);
  rc.out_dir = c.get_string("out_dir", rc.out_dir.string());
}

inline void write_run_keys(const RunConfig& rc, KeyValueConfig& c) {
  c.set("seed", static_cast<long long>(rc.seed));
  c.set("iterations", static_cast<long long>(rc.iterations));
  c.set("sizes", static_cast<long long>(rc.design.num_step_sizes));
  c.set("attempts", static_cast<long long>(rc.design.attempts_per_size));
  c.set("cycles", static_cast<long long>(rc.design.cycles));
  c.set("target", rc.design.target_acceptance);
  c.set("out_dir", rc.out_dir.string());
}

}  // namespace rwtune::cli
