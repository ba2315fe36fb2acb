#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "foresight/action_space.hpp"
#include "foresight/knowledge_graph.hpp"
#include "foresight/symbolic.hpp"

namespace foresight {

struct RefinerConfig {
  bool enabled = false;
  // Absolute reward margin. When unset, tau = tau_fraction * observed reward range.
  std::optional<double> tau;
  double tau_fraction = 0.03;
  // Forecasted KPI names, in the order they are consulted.
  std::vector<std::string> kpi_order;

  void validate() const;
  double resolve_tau(double reward_range) const;
};

struct RefinementDecision {
  ActionId original;
  ActionId refined;
  bool overridden = false;
  std::optional<std::size_t> trigger;  // index into the candidate list
  std::optional<double> r_best;
  double r_agent = 0.0;
};

// One forecasted KPI as seen by the refiner.
struct RefinementCandidate {
  const KnowledgeGraph* graph = nullptr;
  SymbolicState current;
  SymbolicState future;
};

// Walks candidates in order; the first KPI whose best transition-conditioned
// action beats the agent's state-conditioned mean reward (0 if unseen) by
// more than tau wins.
RefinementDecision refine_action(std::span<const RefinementCandidate> candidates, ActionId a_t,
                                 double tau, const ActionSpace& space);

// Fraction of decisions that were overridden. Throws ValidationError when empty.
double refinement_rate(std::span<const RefinementDecision> history);

}  // namespace foresight
