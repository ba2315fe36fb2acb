#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "foresight/action_space.hpp"
#include "foresight/symbolic.hpp"

namespace foresight {

struct EdgeStats {
  std::uint64_t count = 0;
  double reward_sum = 0.0;

  std::optional<double> reward_mean() const {
    if (count == 0) return std::nullopt;
    return reward_sum / static_cast<double>(count);
  }
  friend bool operator==(const EdgeStats&, const EdgeStats&) = default;
};

struct NodeStats {
  std::uint64_t visits = 0;
  std::uint64_t terminal = 0;
  friend bool operator==(const NodeStats&, const NodeStats&) = default;
};

// Probability over actions, sorted by ActionId.
using ActionDistribution = std::vector<std::pair<ActionId, double>>;

struct Edge {
  SymbolicState source;
  ActionId action;
  SymbolicState destination;
  EdgeStats stats;
};

// Directed multigraph over one KPI's symbolic states. Edges are keyed by
// (source, action, destination). Two marginal indexes keep every query
// O(|A|): per source state over actions, and per (source, destination)
// pair over actions.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  explicit KnowledgeGraph(std::string kpi) : kpi_(std::move(kpi)) {}

  void update(const SymbolicState& from, ActionId action, const SymbolicState& to, double reward);
  // A state seen with no successor (episode end).
  void record_terminal(const SymbolicState& s);

  // P(a|s); empty when s is unseen or has no outgoing edges.
  ActionDistribution action_distribution(const SymbolicState& s) const;
  // Count-weighted mean reward over edges (s, a, *).
  std::optional<double> mean_reward(const SymbolicState& s, ActionId a) const;
  // argmax_a mean reward over edges (s, a, next); ties go to the action
  // that comes first in the space's order.
  std::optional<std::pair<ActionId, double>> best_action_for_transition(
      const SymbolicState& s, const SymbolicState& next, const ActionSpace& space) const;
  bool has_transition(const SymbolicState& s, const SymbolicState& next) const;

  const std::string& kpi() const noexcept { return kpi_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::optional<NodeStats> node(const SymbolicState& s) const;
  std::optional<EdgeStats> edge(const SymbolicState& s, ActionId a, const SymbolicState& next) const;

  // Deterministic orderings for serialization.
  std::vector<std::pair<SymbolicState, NodeStats>> nodes() const;
  std::vector<Edge> edges() const;

  // Rebuild from serialized parts. Throws ValidationError on inconsistent input.
  static KnowledgeGraph restore(std::string kpi,
                                const std::vector<std::pair<SymbolicState, NodeStats>>& nodes,
                                const std::vector<Edge>& edges);

  friend bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b);

 private:
  struct ActionStats {
    ActionId action;
    EdgeStats stats;
  };

  struct EdgeKey {
    std::uint32_t source;
    std::uint32_t action;
    std::uint32_t destination;
    friend bool operator==(const EdgeKey&, const EdgeKey&) = default;
  };
  struct EdgeKeyHash {
    std::size_t operator()(const EdgeKey& k) const noexcept {
      std::uint64_t h = (static_cast<std::uint64_t>(k.source) << 32) | k.destination;
      h ^= static_cast<std::uint64_t>(k.action) * 0x9e3779b97f4a7c15ull;
      return std::hash<std::uint64_t>{}(h);
    }
  };

  static std::uint64_t pair_key(const SymbolicState& s, const SymbolicState& t) {
    return (static_cast<std::uint64_t>(s.key()) << 32) | t.key();
  }
  // Per-source marginal. Reward sums are recomputed from edges in
  // destination order so restored graphs give bit-identical means.
  struct SourceEntry {
    ActionId action;
    std::uint64_t count = 0;
    std::vector<std::uint32_t> destinations;
  };

  static void accumulate(std::vector<ActionStats>& list, ActionId a, double reward);
  static SourceEntry& source_entry(std::vector<SourceEntry>& list, ActionId a);
  NodeStats& touch(const SymbolicState& s);

  std::string kpi_;
  std::unordered_map<std::uint32_t, NodeStats> nodes_;
  std::unordered_map<EdgeKey, Edge, EdgeKeyHash> edges_;
  std::unordered_map<std::uint32_t, std::vector<SourceEntry>> by_source_;
  std::unordered_map<std::uint64_t, std::vector<ActionStats>> by_transition_;
};

}  // namespace foresight
