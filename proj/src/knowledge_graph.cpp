#include "foresight/knowledge_graph.hpp"

#include <algorithm>
#include <cmath>

#include "foresight/error.hpp"

namespace foresight {

NodeStats& KnowledgeGraph::touch(const SymbolicState& s) { return nodes_[s.key()]; }

void KnowledgeGraph::accumulate(std::vector<ActionStats>& list, ActionId a, double reward) {
  auto it = std::find_if(list.begin(), list.end(), [a](const ActionStats& x) { return x.action == a; });
  if (it == list.end()) {
    // Kept sorted by id so iteration order never depends on arrival order.
    auto pos = std::lower_bound(list.begin(), list.end(), a,
                                [](const ActionStats& x, ActionId id) { return x.action < id; });
    it = list.insert(pos, ActionStats{a, {}});
  }
  ++it->stats.count;
  it->stats.reward_sum += reward;
}

KnowledgeGraph::SourceEntry& KnowledgeGraph::source_entry(std::vector<SourceEntry>& list,
                                                          ActionId a) {
  auto it = std::lower_bound(list.begin(), list.end(), a,
                             [](const SourceEntry& x, ActionId id) { return x.action < id; });
  if (it == list.end() || it->action != a) it = list.insert(it, SourceEntry{a, 0, {}});
  return *it;
}

void KnowledgeGraph::update(const SymbolicState& from, ActionId action, const SymbolicState& to,
                            double reward) {
  if (!std::isfinite(reward)) throw ValidationError("reward must be finite");
  ++touch(from).visits;
  touch(to);
  auto [it, inserted] = edges_.try_emplace(EdgeKey{from.key(), action.value, to.key()});
  if (inserted) {
    it->second.source = from;
    it->second.action = action;
    it->second.destination = to;
  }
  ++it->second.stats.count;
  it->second.stats.reward_sum += reward;
  auto& entry = source_entry(by_source_[from.key()], action);
  ++entry.count;
  if (inserted) {
    auto pos = std::lower_bound(entry.destinations.begin(), entry.destinations.end(), to.key());
    entry.destinations.insert(pos, to.key());
  }
  accumulate(by_transition_[pair_key(from, to)], action, reward);
}

void KnowledgeGraph::record_terminal(const SymbolicState& s) {
  auto& n = touch(s);
  ++n.visits;
  ++n.terminal;
}

ActionDistribution KnowledgeGraph::action_distribution(const SymbolicState& s) const {
  ActionDistribution out;
  auto it = by_source_.find(s.key());
  if (it == by_source_.end()) return out;
  std::uint64_t total = 0;
  for (const auto& a : it->second) total += a.count;
  if (total == 0) return out;
  out.reserve(it->second.size());
  for (const auto& a : it->second)
    out.emplace_back(a.action, static_cast<double>(a.count) / static_cast<double>(total));
  return out;
}

std::optional<double> KnowledgeGraph::mean_reward(const SymbolicState& s, ActionId a) const {
  auto it = by_source_.find(s.key());
  if (it == by_source_.end()) return std::nullopt;
  for (const auto& x : it->second) {
    if (x.action != a) continue;
    if (x.count == 0) return std::nullopt;
    double sum = 0.0;
    for (std::uint32_t d : x.destinations) sum += edges_.at(EdgeKey{s.key(), a.value, d}).stats.reward_sum;
    return sum / static_cast<double>(x.count);
  }
  return std::nullopt;
}

std::optional<std::pair<ActionId, double>> KnowledgeGraph::best_action_for_transition(
    const SymbolicState& s, const SymbolicState& next, const ActionSpace& space) const {
  auto it = by_transition_.find(pair_key(s, next));
  if (it == by_transition_.end()) return std::nullopt;
  std::optional<std::pair<ActionId, double>> best;
  for (const auto& x : it->second) {
    const auto mean = x.stats.reward_mean();
    if (!mean) continue;
    if (!best || *mean > best->second ||
        (*mean == best->second && space.precedes(x.action, best->first)))
      best = std::make_pair(x.action, *mean);
  }
  return best;
}

bool KnowledgeGraph::has_transition(const SymbolicState& s, const SymbolicState& next) const {
  return by_transition_.contains(pair_key(s, next));
}

std::optional<NodeStats> KnowledgeGraph::node(const SymbolicState& s) const {
  auto it = nodes_.find(s.key());
  if (it == nodes_.end()) return std::nullopt;
  return it->second;
}

std::optional<EdgeStats> KnowledgeGraph::edge(const SymbolicState& s, ActionId a,
                                              const SymbolicState& next) const {
  auto it = edges_.find(EdgeKey{s.key(), a.value, next.key()});
  if (it == edges_.end()) return std::nullopt;
  return it->second.stats;
}

std::vector<std::pair<SymbolicState, NodeStats>> KnowledgeGraph::nodes() const {
  std::vector<std::pair<SymbolicState, NodeStats>> out;
  out.reserve(nodes_.size());
  for (const auto& [key, stats] : nodes_) out.emplace_back(SymbolicState::from_key(key), stats);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

std::vector<Edge> KnowledgeGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edges_.size());
  for (const auto& [key, e] : edges_) out.push_back(e);
  std::sort(out.begin(), out.end(), [](const Edge& a, const Edge& b) {
    if (a.source != b.source) return a.source < b.source;
    if (a.action != b.action) return a.action < b.action;
    return a.destination < b.destination;
  });
  return out;
}

KnowledgeGraph KnowledgeGraph::restore(std::string kpi,
                                       const std::vector<std::pair<SymbolicState, NodeStats>>& nodes,
                                       const std::vector<Edge>& edges) {
  KnowledgeGraph g(std::move(kpi));
  for (const auto& [state, stats] : nodes) {
    if (stats.terminal > stats.visits)
      throw ValidationError("snapshot node has more terminal visits than visits");
    if (!g.nodes_.emplace(state.key(), stats).second)
      throw ValidationError("snapshot lists a node twice");
  }
  std::unordered_map<std::uint32_t, std::uint64_t> outgoing;
  for (const auto& e : edges) {
    if (!std::isfinite(e.stats.reward_sum)) throw ValidationError("snapshot edge reward not finite");
    if (e.stats.count == 0) throw ValidationError("snapshot edge with zero count");
    if (!g.nodes_.contains(e.source.key()) || !g.nodes_.contains(e.destination.key()))
      throw ValidationError("snapshot edge references an unknown node");
    if (!g.edges_.emplace(EdgeKey{e.source.key(), e.action.value, e.destination.key()}, e).second)
      throw ValidationError("snapshot lists an edge twice");
    outgoing[e.source.key()] += e.stats.count;
    auto& entry = source_entry(g.by_source_[e.source.key()], e.action);
    entry.count += e.stats.count;
    auto pos = std::lower_bound(entry.destinations.begin(), entry.destinations.end(), e.destination.key());
    entry.destinations.insert(pos, e.destination.key());
    g.by_transition_[pair_key(e.source, e.destination)].push_back(ActionStats{e.action, e.stats});
  }
  for (auto& [key, list] : g.by_transition_)
    std::sort(list.begin(), list.end(), [](const ActionStats& a, const ActionStats& b) { return a.action < b.action; });
  for (const auto& [key, stats] : g.nodes_) {
    const auto out = outgoing.count(key) ? outgoing[key] : 0;
    if (out != stats.visits - stats.terminal)
      throw ValidationError("snapshot node visit count disagrees with its outgoing edges");
  }
  return g;
}

bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
  if (a.kpi_ != b.kpi_ || a.nodes() != b.nodes()) return false;
  const auto ea = a.edges();
  const auto eb = b.edges();
  if (ea.size() != eb.size()) return false;
  for (std::size_t i = 0; i < ea.size(); ++i) {
    if (ea[i].source != eb[i].source || ea[i].action != eb[i].action ||
        ea[i].destination != eb[i].destination || ea[i].stats != eb[i].stats)
      return false;
  }
  return true;
}

}  // namespace foresight
