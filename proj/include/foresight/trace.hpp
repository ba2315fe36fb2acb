#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "foresight/action_space.hpp"
#include "foresight/config.hpp"

namespace foresight {

// One timestep of the augmented state plus the executed action. The reward
// field carries the reward for the previous record's action. A record with
// done = true is a terminal observation and carries no action.
struct TraceRecord {
  std::int64_t t = 0;
  std::map<std::string, double> kpis;
  std::map<std::string, std::vector<double>> forecasts;
  std::optional<ActionValue> action;
  std::optional<double> reward;
  bool done = false;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

// Parses and validates one JSONL line against the config. line_no is only
// used in diagnostics. previous_t enforces strictly increasing timesteps.
// Throws ParseError naming the field.
TraceRecord parse_trace_line(std::string_view text, std::size_t line_no, const PipelineConfig& cfg,
                             std::optional<std::int64_t> previous_t = std::nullopt);

// Single-line JSON, no trailing newline.
std::string serialize(const TraceRecord& r);

}  // namespace foresight
