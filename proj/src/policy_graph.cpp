#include "foresight/policy_graph.hpp"

#include <algorithm>
#include <cstdio>

namespace foresight {

void PolicyGraphBuilder::add_action(ActionId a) {
  ++visits_[a];
  ++steps_;
  if (last_) {
    const auto key = std::make_pair(*last_, a);
    ++bigrams_[key].count;
    last_edge_ = key;
  } else {
    last_edge_.reset();
  }
  last_ = a;
}

void PolicyGraphBuilder::add_reward(double r) {
  if (!last_edge_) return;
  auto& b = bigrams_[*last_edge_];
  ++b.rewarded;
  b.reward_sum += r;
  last_edge_.reset();
}

PolicyGraph PolicyGraphBuilder::build(const ActionSpace& space) const {
  PolicyGraph g;
  const auto order = [&space](ActionId a, ActionId b) { return space.precedes(a, b); };
  for (const auto& [a, n] : visits_) {
    g.nodes.push_back(PolicyNode{a, space.label(a), n,
                                 static_cast<double>(n) / static_cast<double>(steps_)});
  }
  std::sort(g.nodes.begin(), g.nodes.end(),
            [&](const PolicyNode& x, const PolicyNode& y) { return order(x.action, y.action); });

  std::map<ActionId, std::uint64_t> outgoing;
  for (const auto& [key, b] : bigrams_) outgoing[key.first] += b.count;
  for (const auto& [key, b] : bigrams_) {
    PolicyEdge e;
    e.from = key.first;
    e.to = key.second;
    e.count = b.count;
    e.probability = static_cast<double>(b.count) / static_cast<double>(outgoing[key.first]);
    if (b.rewarded > 0) e.mean_reward = b.reward_sum / static_cast<double>(b.rewarded);
    g.edges.push_back(e);
  }
  std::sort(g.edges.begin(), g.edges.end(), [&](const PolicyEdge& x, const PolicyEdge& y) {
    if (x.from != y.from) return order(x.from, y.from);
    return order(x.to, y.to);
  });
  return g;
}

PolicyGraph build_policy_graph(std::span<const std::pair<ActionId, double>> history,
                               const ActionSpace& space) {
  PolicyGraphBuilder b;
  for (const auto& [a, r] : history) {
    b.add_action(a);
    b.add_reward(r);
  }
  return b.build(space);
}

namespace {

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

std::string percent(double p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", p * 100.0);
  return buf;
}

}  // namespace

std::string export_dot(const PolicyGraph& graph, const std::string& name) {
  std::map<ActionId, std::string> ids;
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) ids[graph.nodes[i].action] = "a" + std::to_string(i);

  std::string out = "digraph " + quoted(name) + " {\n  rankdir=LR;\n  node [shape=ellipse];\n";
  for (const auto& n : graph.nodes) {
    out += "  " + ids[n.action] + " [label=" + quoted(n.label + "\\n" + percent(n.occupancy)) + "];\n";
  }
  for (const auto& e : graph.edges) {
    std::string label = percent(e.probability);
    if (e.mean_reward) {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "\\nr=%.3f", *e.mean_reward);
      label += buf;
    }
    out += "  " + ids[e.from] + " -> " + ids[e.to] + " [label=" + quoted(label) + "];\n";
  }
  out += "}\n";
  return out;
}

}  // namespace foresight
