#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "foresight/config.hpp"
#include "foresight/explainer.hpp"
#include "foresight/knowledge_graph.hpp"
#include "foresight/mutual_information.hpp"
#include "foresight/policy_graph.hpp"
#include "foresight/refiner.hpp"
#include "foresight/symbolizer.hpp"
#include "foresight/trace.hpp"
#include "json.hpp"

namespace foresight {

// Everything emitted for one trace record.
struct ExplanationRecord {
  std::int64_t t = 0;
  bool terminal = false;
  std::vector<SymbolicState> states;
  std::optional<ActionId> action;
  std::optional<ActionSymbol> action_symbol;
  InfluenceReport influence;
  std::optional<RefinementDecision> refinement;
  double tau = 0.0;
};

// Streaming symbolize -> explain/refine -> commit -> (next record) update
// pipeline over a fixed KPI set. Per record, stages run in this order:
//   observe():  symbolize KPIs, close the pending transition with the reward
//   explain():  influence scores for the agent's action
//   refine():   forecast-aware override (read-only)
//   commit():   remember the executed action for the next update
// process() runs all of them for a replayed record.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg);

  // With execute_refined the refined action is committed instead of the
  // record's action (live control); otherwise the override is advisory.
  ExplanationRecord process(const TraceRecord& r, bool execute_refined = false);

  void observe(const TraceRecord& r);
  // Symbolize only; no graph update. Split out for latency measurement.
  void symbolize(const TraceRecord& r);
  void update_graphs(const TraceRecord& r);
  InfluenceReport explain(ActionId a_t) const;
  RefinementDecision refine(ActionId a_t) const;
  void commit(ActionId executed);

  ActionId resolve_action(const ActionValue& v) { return cfg_.action_space.resolve(v); }

  // Override refiner settings from the CLI or harness.
  void set_refine(bool enabled) { cfg_.refiner.enabled = enabled; }
  void set_tau(std::optional<double> tau) { cfg_.refiner.tau = tau; }
  double current_tau() const;
  double reward_range() const;

  const PipelineConfig& config() const noexcept { return cfg_; }
  const ActionSpace& action_space() const noexcept { return cfg_.action_space; }
  const std::vector<KnowledgeGraph>& graphs() const noexcept { return graphs_; }
  const std::vector<KpiSymbolizer>& symbolizers() const noexcept { return symbolizers_; }
  const std::vector<SymbolicState>& current_states() const noexcept { return current_; }
  std::optional<std::int64_t> last_t() const noexcept { return last_t_; }

  std::vector<MiEntry> mi_report() const;
  PolicyGraph policy_graph() const { return policy_.build(cfg_.action_space); }

  nlohmann::ordered_json to_json(const ExplanationRecord& e) const;

  // One <kpi>.json per KPI plus pipeline.json.
  void save_snapshot(const std::filesystem::path& dir) const;
  void load_snapshot(const std::filesystem::path& dir);

 private:
  struct Channel {
    std::size_t kpi;
    int offset;
    std::string name;
    ContingencyTable table;
  };
  struct Pending {
    std::vector<SymbolicState> states;
    ActionId action;
  };

  void end_episode();

  PipelineConfig cfg_;
  std::vector<KpiSymbolizer> symbolizers_;
  std::vector<KnowledgeGraph> graphs_;
  std::vector<SymbolicState> current_;
  std::vector<std::optional<SymbolicState>> future_;
  std::vector<std::size_t> refine_kpis_;

  std::vector<Channel> channels_;
  std::vector<std::optional<std::uint32_t>> channel_symbols_;
  std::vector<std::deque<std::uint32_t>> history_;

  PolicyGraphBuilder policy_;
  std::optional<Pending> pending_;
  std::optional<ActionId> previous_action_;
  std::optional<std::int64_t> last_t_;
  bool terminal_ = false;
  std::optional<double> reward_min_;
  std::optional<double> reward_max_;
};

// Graph-level snapshot documents.
nlohmann::json graph_to_json(const KnowledgeGraph& g, const ActionSpace& space);
KnowledgeGraph graph_from_json(const nlohmann::json& doc, const ActionSpace& space);
nlohmann::json sketch_to_json(const QuantileSketch& s);
QuantileSketch sketch_from_json(const nlohmann::json& doc);

}  // namespace foresight
