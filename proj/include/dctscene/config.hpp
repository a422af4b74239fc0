#pragma once

// Text form of ModelConfig: one "key = value" per line, '#' comments.
// Keys absent from the file keep their defaults; unknown keys are errors.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "dctscene/scene_model.hpp"

namespace dctscene {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

template <typename T>
T parse_config_value(const std::string& key, const std::string& text, int line) {
  std::istringstream is(text);
  T v{};
  if (!(is >> v) || !(is >> std::ws).eof()) {
    throw ConfigError("config line " + std::to_string(line) + ": bad value '" + text + "' for " + key);
  }
  if constexpr (std::is_unsigned_v<T>) {
    if (text.find('-') != std::string::npos) {
      throw ConfigError("config line " + std::to_string(line) + ": " + key + " must be non-negative");
    }
  }
  return v;
}

}  // namespace detail

inline ModelConfig read_model_config(std::istream& is) {
  ModelConfig c;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    raw = detail::trim(raw);
    if (raw.empty()) continue;
    const auto eq = raw.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(raw.substr(0, eq));
    const std::string val = detail::trim(raw.substr(eq + 1));
    using detail::parse_config_value;
    if (key == "alpha_amf") c.alpha_amf = parse_config_value<int>(key, val, line);
    else if (key == "c_s") c.c_s = parse_config_value<std::uint32_t>(key, val, line);
    else if (key == "c_v") c.c_v = parse_config_value<double>(key, val, line);
    else if (key == "max_modes") c.max_modes = parse_config_value<int>(key, val, line);
    else if (key == "t_similar") c.t_similar = parse_config_value<std::uint32_t>(key, val, line);
    else if (key == "bonus_value") c.bonus_value = parse_config_value<double>(key, val, line);
    else if (key == "bonus_window") c.bonus_window = parse_config_value<std::uint32_t>(key, val, line);
    else if (key == "n_bg") c.n_bg = parse_config_value<std::uint32_t>(key, val, line);
    else if (key == "iterations") c.iterations = parse_config_value<int>(key, val, line);
    else if (key == "min_blob_blocks") c.min_blob_blocks = parse_config_value<int>(key, val, line);
    else throw ConfigError("config line " + std::to_string(line) + ": unknown key '" + key + "'");
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline ModelConfig read_model_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  return read_model_config(is);
}

inline void write_model_config(std::ostream& os, const ModelConfig& c) {
  os << "alpha_amf = " << c.alpha_amf << "\n"
     << "c_s = " << c.c_s << "\n"
     << "c_v = " << c.c_v << "\n"
     << "max_modes = " << c.max_modes << "\n"
     << "t_similar = " << c.t_similar << "\n"
     << "bonus_value = " << c.bonus_value << "\n"
     << "bonus_window = " << c.bonus_window << "\n"
     << "n_bg = " << c.n_bg << "\n"
     << "iterations = " << c.iterations << "\n"
     << "min_blob_blocks = " << c.min_blob_blocks << "\n";
}

}  // namespace dctscene
