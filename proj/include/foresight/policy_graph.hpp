#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "foresight/action_space.hpp"

namespace foresight {

struct PolicyNode {
  ActionId action;
  std::string label;
  std::uint64_t visits = 0;
  double occupancy = 0.0;
};

struct PolicyEdge {
  ActionId from;
  ActionId to;
  std::uint64_t count = 0;
  double probability = 0.0;
  // Mean reward observed at the destination step; empty if none arrived yet.
  std::optional<double> mean_reward;
};

// Action-focused policy graph: actions as nodes, consecutive decisions as
// edges. Nodes and edges are ordered by the action space's order.
struct PolicyGraph {
  std::vector<PolicyNode> nodes;
  std::vector<PolicyEdge> edges;
};

// Streaming accumulator. Keeps only bigram and occupancy counts.
class PolicyGraphBuilder {
 public:
  void add_action(ActionId a);
  // Reward for the most recent action; credited to the edge that ended there.
  void add_reward(double r);
  // Episode boundary: the next action does not continue the chain.
  void break_chain() noexcept { last_.reset(); last_edge_.reset(); }

  PolicyGraph build(const ActionSpace& space) const;
  std::uint64_t steps() const noexcept { return steps_; }

 private:
  struct Bigram {
    std::uint64_t count = 0;
    std::uint64_t rewarded = 0;
    double reward_sum = 0.0;
  };
  std::map<ActionId, std::uint64_t> visits_;
  std::map<std::pair<ActionId, ActionId>, Bigram> bigrams_;
  std::optional<ActionId> last_;
  std::optional<std::pair<ActionId, ActionId>> last_edge_;
  std::uint64_t steps_ = 0;
};

// history[i] = (action at step i, reward received for that action).
PolicyGraph build_policy_graph(std::span<const std::pair<ActionId, double>> history,
                               const ActionSpace& space);

// Deterministic DOT digraph. Node labels: action + occupancy %, edge labels:
// probability % + mean reward.
std::string export_dot(const PolicyGraph& graph, const std::string& name = "policy");

}  // namespace foresight
