#pragma once

// Pipeline configuration: a flat key = value text file that seeds the CLI
// defaults.  Precedence is command-line flag over file value over built-in
// default; the file path comes from --config or the MOTIONKIT_CONFIG
// environment variable.

#include "motionkit/control.hpp"
#include "motionkit/errors.hpp"
#include "motionkit/retarget.hpp"

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

namespace motionkit {

struct PipelineConfig {
  char up_axis = 'z';           // 'z' native, 'y' converts y-up input
  double unit_scale = 1.0;      // multiplier applied to input lengths
  double lambda = kDefaultFlipLambda;
  double beta = 0.1;            // smoothness weight
  double eps_pen = 0.0;         // ground penetration threshold, meters
  CurriculumParams curriculum;  // residual-force schedule defaults
  std::string joint_limits_path;

  void validate() const {
    if (up_axis != 'z' && up_axis != 'y') {
      throw ParseError("config: up_axis must be z or y");
    }
    if (unit_scale <= 0.0) {
      throw ParseError("config: units must scale to a positive factor");
    }
    if (lambda <= 0.0) {
      throw ParseError("config: lambda must be positive");
    }
    if (beta < 0.0) {
      throw ParseError("config: beta must be non-negative");
    }
    if (eps_pen < 0.0) {
      throw ParseError("config: eps_pen must be non-negative");
    }
    try {
      curriculum.validate();
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("config: ") + e.what());
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double config_number(const std::string& value, const std::string& key, int line) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ParseError("config: value for \"" + key + "\" is not a number: \"" + value + "\"",
                     line);
  }
}

inline long config_integer(const std::string& value, const std::string& key, int line) {
  try {
    size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ParseError("config: value for \"" + key + "\" is not an integer: \"" + value + "\"",
                     line);
  }
}

}  // namespace detail

/// Parses `key = value` lines onto the built-in defaults.  '#' starts a
/// comment, blank lines are skipped.  Unknown keys and malformed values are
/// reported with their line number.
inline PipelineConfig parse_pipeline_config(const std::string& text) {
  PipelineConfig config;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const size_t hash = raw.find('#');
    const std::string stripped = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (stripped.empty()) continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config: expected key = value", line);
    }
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ParseError("config: empty key or value", line);
    }

    if (key == "up_axis") {
      if (value != "z" && value != "y") {
        throw ParseError("config: up_axis must be z or y", line);
      }
      config.up_axis = value[0];
    } else if (key == "units") {
      if (value == "m") {
        config.unit_scale = 1.0;
      } else if (value == "cm") {
        config.unit_scale = 0.01;
      } else {
        throw ParseError("config: units must be m or cm", line);
      }
    } else if (key == "lambda") {
      config.lambda = detail::config_number(value, key, line);
    } else if (key == "beta") {
      config.beta = detail::config_number(value, key, line);
    } else if (key == "eps_pen") {
      config.eps_pen = detail::config_number(value, key, line);
    } else if (key == "s_init") {
      config.curriculum.s_init = detail::config_number(value, key, line);
    } else if (key == "i_start") {
      config.curriculum.i_start = detail::config_integer(value, key, line);
    } else if (key == "i_end") {
      config.curriculum.i_end = detail::config_integer(value, key, line);
    } else if (key == "rate") {
      config.curriculum.rate = detail::config_number(value, key, line);
    } else if (key == "joint_limits") {
      config.joint_limits_path = value;
    } else {
      throw ParseError("config: unknown key \"" + key + "\"", line);
    }
  }
  config.validate();
  return config;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open config file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_pipeline_config(buf.str());
}

/// The config file to use: an explicit path wins, then the MOTIONKIT_CONFIG
/// environment variable, then none.
inline std::optional<std::string> resolve_config_path(const std::string& explicit_path) {
  if (!explicit_path.empty()) return explicit_path;
  if (const char* env = std::getenv("MOTIONKIT_CONFIG"); env != nullptr && *env != '\0') {
    return std::string(env);
  }
  return std::nullopt;
}

/// Loads configuration for a CLI run; built-in defaults when no file is
/// named anywhere.
inline PipelineConfig effective_config(const std::string& explicit_path) {
  const auto path = resolve_config_path(explicit_path);
  return path ? load_pipeline_config(*path) : PipelineConfig{};
}

}  // namespace motionkit
