#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "evtrack/experiment.hpp"

namespace evtrack {

/// One settable configuration key, `section.key` in the INI file.
struct ConfigKeyInfo {
  std::string name;  ///< "plant.inertia"
  std::string unit;  ///< unit of the INI value, empty when dimensionless or text
  std::string help;
};

/// Every key the INI loader and the override flags accept.
std::vector<ConfigKeyInfo> config_keys();

/// Parses INI text on top of `base`. Unknown sections or keys, bad values
/// and invalid combinations raise ConfigError.
ExperimentConfig parse_config(std::string_view ini_text, const ExperimentConfig& base = {});
ExperimentConfig load_config_file(const std::filesystem::path& path, const ExperimentConfig& base = {});

/// Sets one `section.key` from its INI spelling (degrees, seconds...).
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);
/// Applies "section.key=value".
void apply_override(ExperimentConfig& config, std::string_view assignment);

/// INI rendering in file units; parse_config(to_ini(c)) reproduces c up to
/// unit-conversion rounding.
std::string to_ini(const ExperimentConfig& config);

/// Exact rendering in internal units (radians, seconds, microseconds); keys
/// carry their unit as a suffix where one applies.
nlohmann::json to_json(const ExperimentConfig& config);
/// Inverse of to_json, bit exact. Missing keys keep their defaults.
ExperimentConfig config_from_json(const nlohmann::json& j);

}  // namespace evtrack
