#pragma once

// Configuration text format:
//
//   file    := line*
//   line    := blank | comment | section | setting
//   comment := ('#' | ';') any*           (whole line, after optional spaces)
//   section := '[' name ']'               one of run, algorithm, optimizer, network
//   setting := key '=' value              spaces around both are ignored
//
// Every key belongs to one section; a setting must appear under that section
// or before the first section header. Lists are comma separated. Later
// settings override earlier ones; command-line overrides apply last.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "acerax/config.hpp"
#include "acerax/errors.hpp"

namespace acerax {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_real(std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out))
    throw config_error("expected a real number, got '" + std::string(v) + "'");
  return out;
}

inline std::int64_t parse_int(std::string_view v) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw config_error("expected an integer, got '" + std::string(v) + "'");
  return out;
}

inline bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw config_error("expected true or false, got '" + std::string(v) + "'");
}

template <typename T, typename Parse>
std::vector<T> parse_list(std::string_view v, Parse parse) {
  std::vector<T> out;
  if (trim(v).empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = v.find(',', start);
    out.push_back(static_cast<T>(parse(trim(v.substr(start, comma - start)))));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_real(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (k) out += ',';
    if constexpr (std::is_floating_point_v<T>)
      out += format_real(xs[k]);
    else
      out += std::to_string(xs[k]);
  }
  return out;
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw config_error(what);
}

}  // namespace detail

struct ConfigKey {
  std::string section;
  std::string name;
  std::string help;
  std::function<void(Config&, std::string_view)> set;
  std::function<std::string(const Config&)> get;
};

/// All recognised keys in canonical order.
inline const std::vector<ConfigKey>& config_keys() {
  using namespace detail;
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    auto real = [&](std::string section, std::string name, std::string help, double Config::*field,
                    std::function<bool(double)> ok, std::string range) {
      k.push_back({section, name, help,
                   [field, ok, range, name](Config& c, std::string_view v) {
                     const double x = parse_real(v);
                     require(ok(x), name + " must be " + range);
                     c.*field = x;
                   },
                   [field](const Config& c) { return format_real(c.*field); }});
    };
    auto step = [&](std::string name, std::string help, double StepSizes::*field) {
      k.push_back({"optimizer", name, help,
                   [field, name](Config& c, std::string_view v) {
                     const double x = parse_real(v);
                     require(x >= 0.0, name + " must be non-negative");
                     c.step_sizes.*field = x;
                   },
                   [field](const Config& c) { return format_real(c.step_sizes.*field); }});
    };
    auto hidden = [&](std::string name, std::string help, std::vector<int> NetShapes::*field) {
      k.push_back({"network", name, help,
                   [field, name](Config& c, std::string_view v) {
                     auto sizes = parse_list<int>(v, parse_int);
                     for (int s : sizes) require(s > 0, name + " entries must be positive");
                     c.shapes.*field = std::move(sizes);
                   },
                   [field](const Config& c) { return join(c.shapes.*field); }});
    };

    k.push_back({"run", "env", "environment: lqr2, pointmass or pendulum1",
                 [](Config& c, std::string_view v) {
                   const std::string name(v);
                   require(name == "lqr2" || name == "pointmass" || name == "pendulum1",
                           "unknown environment '" + name + "'");
                   c.env = name;
                 },
                 [](const Config& c) { return c.env; }});
    k.push_back({"run", "seed", "random seed",
                 [](Config& c, std::string_view v) {
                   const auto s = parse_int(v);
                   require(s >= 0, "seed must be non-negative");
                   c.seed = static_cast<std::uint64_t>(s);
                 },
                 [](const Config& c) { return std::to_string(c.seed); }});
    k.push_back({"run", "steps", "environment steps",
                 [](Config& c, std::string_view v) {
                   c.steps = parse_int(v);
                   require(c.steps >= 0, "steps must be non-negative");
                 },
                 [](const Config& c) { return std::to_string(c.steps); }});
    k.push_back({"run", "eval_interval", "environment steps between evaluations",
                 [](Config& c, std::string_view v) {
                   c.eval_interval = parse_int(v);
                   require(c.eval_interval >= 1, "eval_interval must be positive");
                 },
                 [](const Config& c) { return std::to_string(c.eval_interval); }});
    k.push_back({"run", "eval_episodes", "test episodes per evaluation",
                 [](Config& c, std::string_view v) {
                   const auto e = parse_int(v);
                   require(e >= 1, "eval_episodes must be positive");
                   c.eval_episodes = static_cast<int>(e);
                 },
                 [](const Config& c) { return std::to_string(c.eval_episodes); }});
    real("run", "env_noise", "process noise std (lqr2)", &Config::env_noise, [](double x) { return x >= 0; },
         "non-negative");

    real("algorithm", "gamma", "discount factor", &Config::gamma, [](double x) { return x >= 0 && x < 1; },
         "in [0, 1)");
    k.push_back({"algorithm", "n", "return horizon",
                 [](Config& c, std::string_view v) {
                   const auto n = parse_int(v);
                   require(n >= 1, "n must be at least 1");
                   c.n = static_cast<int>(n);
                 },
                 [](const Config& c) { return std::to_string(c.n); }});
    real("algorithm", "b", "soft truncation level", &Config::b, [](double x) { return x > 1; }, "greater than 1");
    real("algorithm", "alpha", "dispersion weight of stored actions", &Config::alpha,
         [](double x) { return x >= 0; }, "non-negative");
    k.push_back({"algorithm", "memory", "replay capacity",
                 [](Config& c, std::string_view v) {
                   const auto m = parse_int(v);
                   require(m >= 2, "memory must be at least 2");
                   c.memory = static_cast<std::size_t>(m);
                 },
                 [](const Config& c) { return std::to_string(c.memory); }});
    k.push_back({"algorithm", "minibatch", "windows per replay step",
                 [](Config& c, std::string_view v) {
                   const auto m = parse_int(v);
                   require(m >= 1, "minibatch must be positive");
                   c.minibatch = static_cast<int>(m);
                 },
                 [](const Config& c) { return std::to_string(c.minibatch); }});
    k.push_back({"algorithm", "gradient_steps", "replay steps per environment step",
                 [](Config& c, std::string_view v) {
                   const auto m = parse_int(v);
                   require(m >= 1, "gradient_steps must be positive");
                   c.gradient_steps = static_cast<int>(m);
                 },
                 [](const Config& c) { return std::to_string(c.gradient_steps); }});
    real("algorithm", "penalty_coeff", "weight of the action-box penalty", &Config::penalty_coeff,
         [](double x) { return x >= 0; }, "non-negative");
    k.push_back({"algorithm", "hard_truncation", "use min(z, b) instead of b tanh(z/b)",
                 [](Config& c, std::string_view v) { c.hard_truncation = parse_bool(v); },
                 [](const Config& c) { return std::string(c.hard_truncation ? "true" : "false"); }});
    k.push_back({"algorithm", "mode", "adaptive or fixed_sigma",
                 [](Config& c, std::string_view v) { c.mode = parse_mode(std::string(v)); },
                 [](const Config& c) { return to_string(c.mode); }});
    k.push_back({"algorithm", "sigma", "action std in fixed_sigma mode (one value or one per dimension)",
                 [](Config& c, std::string_view v) {
                   auto s = parse_list<double>(v, parse_real);
                   require(!s.empty(), "sigma needs at least one value");
                   for (double x : s) require(x > 0, "sigma entries must be positive");
                   c.sigma = std::move(s);
                 },
                 [](const Config& c) { return join(c.sigma); }});

    step("actor_step", "ADAM step size of the mean network", &StepSizes::actor);
    step("critic_step", "ADAM step size of the critic", &StepSizes::critic);
    step("eta_step", "ADAM step size of the log-std network", &StepSizes::eta);

    hidden("mu_hidden", "hidden layer sizes of the mean network", &NetShapes::mu);
    hidden("eta_hidden", "hidden layer sizes of the log-std network", &NetShapes::eta);
    hidden("critic_hidden", "hidden layer sizes of the critic", &NetShapes::critic);
    real("network", "eta_output_bias", "initial output bias of the log-std network", &Config::eta_output_bias,
         [](double) { return true; }, "a real number");
    return k;
  }();
  return keys;
}

inline const ConfigKey* find_config_key(std::string_view name) {
  for (const auto& k : config_keys())
    if (k.name == name) return &k;
  return nullptr;
}

/// Sets one key from text. Throws config_error naming the key.
inline void set_config_value(Config& config, std::string_view key, std::string_view value) {
  const ConfigKey* k = find_config_key(key);
  if (!k) throw config_error("unknown key '" + std::string(key) + "'");
  try {
    k->set(config, detail::trim(value));
  } catch (const config_error& e) {
    throw config_error("key '" + std::string(key) + "': " + e.what());
  }
}

inline std::string get_config_value(const Config& config, std::string_view key) {
  const ConfigKey* k = find_config_key(key);
  if (!k) throw config_error("unknown key '" + std::string(key) + "'");
  return k->get(config);
}

/// Applies settings from config text on top of `config`. Errors carry
/// "<source>:<line>: ".
inline void apply_config_text(Config& config, std::string_view text, const std::string& source = "<config>") {
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = detail::trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    auto fail = [&](const std::string& what) {
      throw config_error(source + ":" + std::to_string(line_no) + ": " + what);
    };
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (section != "run" && section != "algorithm" && section != "optimizer" && section != "network")
        fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    const ConfigKey* k = find_config_key(key);
    if (!k) fail("unknown key '" + key + "'");
    if (!section.empty() && k->section != section)
      fail("key '" + key + "' belongs in [" + k->section + "], not [" + section + "]");
    try {
      set_config_value(config, key, line.substr(eq + 1));
    } catch (const config_error& e) {
      fail(e.what());
    }
  }
}

inline void apply_config_file(Config& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(config, ss.str(), path);
}

/// Every key as written by config_text, in canonical order.
inline std::vector<std::pair<std::string, std::string>> config_values(const Config& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : config_keys()) out.emplace_back(k.name, k.get(config));
  return out;
}

/// Full config in the text format; parses back to an identical Config.
inline std::string config_text(const Config& config) {
  std::string out;
  std::string section;
  for (const auto& k : config_keys()) {
    if (k.section != section) {
      if (!section.empty()) out += '\n';
      section = k.section;
      out += "[" + section + "]\n";
    }
    out += k.name + " = " + k.get(config) + "\n";
  }
  return out;
}

/// Named starting points: "default", "desk" (small nets for quick runs),
/// "full" (full-size settings).
inline Config preset_config(const std::string& name) {
  if (name == "default") return Config{};
  if (name == "full") return Config::full_scale();
  if (name == "desk") {
    Config c;
    c.shapes = {{32, 24}, {4, 3}, {32, 24}};
    c.minibatch = 32;
    c.memory = 5000;
    c.step_sizes = {1e-4, 1e-3, 1e-4};
    return c;
  }
  throw config_error("unknown preset '" + name + "' (expected default, desk or full)");
}

}  // namespace acerax
