#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "foresight/action_space.hpp"
#include "foresight/refiner.hpp"
#include "foresight/symbolic.hpp"
#include "json.hpp"

namespace foresight {

struct PipelineConfig {
  std::vector<KpiConfig> kpis;
  ActionSpace action_space = ActionSpace::ordered("action", {0.0});
  RefinerConfig refiner;
  // Raw "env" section, consumed by the harness when present.
  std::optional<nlohmann::json> env;

  // Throws ValidationError.
  void validate() const;
  std::optional<std::size_t> kpi_index(const std::string& name) const;
};

// Throws ValidationError naming the offending key.
PipelineConfig parse_config(const nlohmann::json& doc);
// Throws ValidationError (with the path) if the file is missing or malformed.
PipelineConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const KpiConfig& cfg);
nlohmann::json to_json(const ActionSpace& space);
nlohmann::json to_json(const PipelineConfig& cfg);

// Stable 64-bit FNV-1a over a canonical JSON dump, rendered as 16 hex digits.
std::string fingerprint(const nlohmann::json& doc);

// Read a whole file; throws ValidationError with the path on failure.
std::string read_file(const std::filesystem::path& path);

}  // namespace foresight
