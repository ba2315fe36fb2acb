#include "foresight/explainer.hpp"

#include <algorithm>
#include <cmath>

#include "foresight/error.hpp"

namespace foresight {

double kl_divergence(const ActionDistribution& p, const ActionDistribution& q) {
  // Merge the two sorted supports.
  std::vector<std::pair<double, double>> cells;
  cells.reserve(p.size() + q.size());
  std::size_t i = 0, j = 0;
  while (i < p.size() || j < q.size()) {
    if (j == q.size() || (i < p.size() && p[i].first < q[j].first)) {
      cells.emplace_back(p[i++].second, 0.0);
    } else if (i == p.size() || q[j].first < p[i].first) {
      cells.emplace_back(0.0, q[j++].second);
    } else {
      cells.emplace_back(p[i++].second, q[j++].second);
    }
  }
  if (cells.empty()) return 0.0;
  double zp = 0.0, zq = 0.0;
  for (auto& [a, b] : cells) {
    a += kSmoothingEpsilon;
    b += kSmoothingEpsilon;
    zp += a;
    zq += b;
  }
  double kl = 0.0;
  for (const auto& [a, b] : cells) {
    const double pa = a / zp;
    const double qb = b / zq;
    kl += pa * std::log(pa / qb);
  }
  return std::max(kl, 0.0);
}

ActionDistribution baseline_distribution(std::span<const ActionDistribution> conditionals) {
  ActionDistribution out;
  std::size_t used = 0;
  for (const auto& p : conditionals) {
    if (p.empty()) continue;
    ++used;
    ActionDistribution merged;
    merged.reserve(out.size() + p.size());
    std::size_t i = 0, j = 0;
    while (i < out.size() || j < p.size()) {
      if (j == p.size() || (i < out.size() && out[i].first < p[j].first)) {
        merged.push_back(out[i++]);
      } else if (i == out.size() || p[j].first < out[i].first) {
        merged.push_back(p[j++]);
      } else {
        merged.emplace_back(out[i].first, out[i].second + p[j].second);
        ++i;
        ++j;
      }
    }
    out = std::move(merged);
  }
  if (used == 0) return out;
  for (auto& [a, w] : out) w /= static_cast<double>(used);
  return out;
}

ActionId most_likely_action(const ActionDistribution& p, const ActionSpace& space) {
  if (p.empty()) throw ColdStartError("most likely action of an empty distribution");
  auto best = p.front();
  for (const auto& x : p) {
    if (x.second > best.second || (x.second == best.second && space.precedes(x.first, best.first)))
      best = x;
  }
  return best.first;
}

InfluenceReport explain(std::int64_t timestep, std::span<const KnowledgeGraph> graphs,
                        std::span<const SymbolicState> joint_state, ActionId a_t,
                        const ActionSpace& space) {
  if (graphs.size() != joint_state.size())
    throw ValidationError("joint state and graph count differ");
  InfluenceReport report;
  report.timestep = timestep;
  report.per_kpi.resize(graphs.size());

  std::vector<ActionDistribution> conditionals(graphs.size());
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    conditionals[k] = graphs[k].action_distribution(joint_state[k]);
    report.per_kpi[k].state = joint_state[k];
  }
  const ActionDistribution baseline = baseline_distribution(conditionals);
  if (baseline.empty()) return report;
  report.cold_start = false;

  for (std::size_t k = 0; k < graphs.size(); ++k) {
    if (conditionals[k].empty()) continue;
    auto& out = report.per_kpi[k];
    out.cold_start = false;
    out.a_star = most_likely_action(conditionals[k], space);
    out.kl = kl_divergence(conditionals[k], baseline);
    out.alignment = space.alignment(a_t, *out.a_star);
    out.score = out.kl * out.alignment;
  }
  return report;
}

}  // namespace foresight
