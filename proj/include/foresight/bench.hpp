#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace foresight {

struct ComponentLatency {
  std::string component;
  double mean_ms = 0.0;
  double stddev_ms = 0.0;
};

struct BenchReport {
  std::size_t kpis = 0;
  std::size_t steps = 0;
  // Symbolizer, Knowledge Graph Update, Influence Score, Action Refinement,
  // Global Explanation.
  std::vector<ComponentLatency> components;
  // Symbolize + KG update + IS + refine, per decision.
  ComponentLatency decision;
  // Wall time of the whole run.
  double total_ms = 0.0;
};

// Random-walk KPIs (every fourth with a 4-step forecast), 6-action ordered
// space, seeded random agent and reward.
BenchReport run_bench(std::size_t kpis, std::size_t steps, std::uint64_t seed = 1, std::size_t actions = 6);

std::string format_report(const BenchReport& r);

}  // namespace foresight
