#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "foresight/action_space.hpp"
#include "foresight/knowledge_graph.hpp"
#include "foresight/symbolic.hpp"

namespace foresight {

// Added to every cell of both distributions before computing KL.
inline constexpr double kSmoothingEpsilon = 1e-9;

// D_KL(p || q) in nats over the union support, after epsilon smoothing and
// renormalization. Inputs must be sorted by ActionId.
double kl_divergence(const ActionDistribution& p, const ActionDistribution& q);

// Mean of the non-empty distributions, renormalized over the union support.
// Empty when every input is empty (cold start).
ActionDistribution baseline_distribution(std::span<const ActionDistribution> conditionals);

// argmax with ties resolved by the space's order. Distribution must be non-empty.
ActionId most_likely_action(const ActionDistribution& p, const ActionSpace& space);

struct KpiInfluence {
  SymbolicState state;
  bool cold_start = true;
  double kl = 0.0;
  double alignment = 0.0;
  double score = 0.0;
  std::optional<ActionId> a_star;
};

struct InfluenceReport {
  std::int64_t timestep = 0;
  // Parallel to the KPI order of the graphs passed in.
  std::vector<KpiInfluence> per_kpi;
  // True when no KPI had any history at its current state.
  bool cold_start = true;
};

// Influence score of every KPI for action a_t at the given joint state:
// IS_k = D_KL(P_k(.|s_k) || P_baseline) * delta(a_t, a_k*).
InfluenceReport explain(std::int64_t timestep, std::span<const KnowledgeGraph> graphs,
                        std::span<const SymbolicState> joint_state, ActionId a_t,
                        const ActionSpace& space);

}  // namespace foresight
