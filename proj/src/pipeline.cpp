#include "foresight/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "foresight/error.hpp"

namespace foresight {

using nlohmann::json;

Pipeline::Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const std::size_t n = cfg_.kpis.size();
  symbolizers_.reserve(n);
  graphs_.reserve(n);
  for (const auto& k : cfg_.kpis) {
    symbolizers_.emplace_back(k);
    graphs_.emplace_back(k.name);
  }
  current_.resize(n);
  future_.resize(n);
  history_.resize(n);
  for (const auto& name : cfg_.refiner.kpi_order) refine_kpis_.push_back(*cfg_.kpi_index(name));
  for (std::size_t k = 0; k < n; ++k) {
    for (int o : cfg_.kpis[k].mi_offsets) {
      std::string name = cfg_.kpis[k].name;
      if (o != 0) name += (o > 0 ? "@+" : "@") + std::to_string(o);
      channels_.push_back(Channel{k, o, std::move(name), {}});
    }
  }
  channel_symbols_.resize(channels_.size());
}

void Pipeline::symbolize(const TraceRecord& r) {
  if (last_t_ && r.t <= *last_t_)
    throw ValidationError("timestep " + std::to_string(r.t) + " does not increase past " +
                          std::to_string(*last_t_));
  for (std::size_t k = 0; k < symbolizers_.size(); ++k) {
    const auto& name = cfg_.kpis[k].name;
    auto v = r.kpis.find(name);
    if (v == r.kpis.end()) throw ValidationError("t=" + std::to_string(r.t) + ": missing kpi '" + name + "'");
    std::span<const double> forecast;
    if (auto f = r.forecasts.find(name); f != r.forecasts.end()) forecast = f->second;
    if (cfg_.kpis[k].has_forecast && forecast.size() != cfg_.kpis[k].horizon)
      throw ValidationError("t=" + std::to_string(r.t) + ": forecast for '" + name +
                            "' must have length " + std::to_string(cfg_.kpis[k].horizon));
    const auto res = symbolizers_[k].observe(v->second, forecast);
    current_[k] = res.current;
    future_[k] = res.future;
  }

  for (std::size_t c = 0; c < channels_.size(); ++c) {
    const auto& ch = channels_[c];
    auto& out = channel_symbols_[c];
    out.reset();
    if (ch.offset == 0) {
      out = current_[ch.kpi].key();
    } else if (ch.offset < 0) {
      const auto& h = history_[ch.kpi];
      const auto back = static_cast<std::size_t>(-ch.offset);
      if (h.size() >= back) out = h[h.size() - back];
    } else {
      const auto& name = cfg_.kpis[ch.kpi].name;
      auto f = r.forecasts.find(name);
      if (f != r.forecasts.end() && f->second.size() >= static_cast<std::size_t>(ch.offset)) {
        const auto i = static_cast<std::size_t>(ch.offset - 1);
        const double prev = i == 0 ? r.kpis.at(name) : f->second[i - 1];
        out = symbolizers_[ch.kpi].classify(f->second[i], prev).key();
      }
    }
  }
  for (std::size_t k = 0; k < history_.size(); ++k) {
    std::size_t depth = 0;
    for (int o : cfg_.kpis[k].mi_offsets)
      if (o < 0) depth = std::max(depth, static_cast<std::size_t>(-o));
    if (depth == 0) continue;
    history_[k].push_back(current_[k].key());
    while (history_[k].size() > depth) history_[k].pop_front();
  }
  last_t_ = r.t;
  terminal_ = r.done;
}

void Pipeline::update_graphs(const TraceRecord& r) {
  if (pending_) {
    if (!r.reward)
      throw ValidationError("t=" + std::to_string(r.t) + ": missing reward for the previous action");
    const double reward = *r.reward;
    for (std::size_t k = 0; k < graphs_.size(); ++k)
      graphs_[k].update(pending_->states[k], pending_->action, current_[k], reward);
    policy_.add_reward(reward);
    reward_min_ = reward_min_ ? std::min(*reward_min_, reward) : reward;
    reward_max_ = reward_max_ ? std::max(*reward_max_, reward) : reward;
    pending_.reset();
  }
  if (r.done) {
    for (std::size_t k = 0; k < graphs_.size(); ++k) graphs_[k].record_terminal(current_[k]);
    end_episode();
  }
}

void Pipeline::observe(const TraceRecord& r) {
  symbolize(r);
  update_graphs(r);
}

void Pipeline::end_episode() {
  for (auto& s : symbolizers_) s.reset_episode();
  for (auto& h : history_) h.clear();
  pending_.reset();
  previous_action_.reset();
  policy_.break_chain();
}

InfluenceReport Pipeline::explain(ActionId a_t) const {
  return foresight::explain(last_t_.value_or(0), graphs_, current_, a_t, cfg_.action_space);
}

double Pipeline::reward_range() const {
  if (!reward_min_) return 0.0;
  return *reward_max_ - *reward_min_;
}

double Pipeline::current_tau() const { return cfg_.refiner.resolve_tau(reward_range()); }

RefinementDecision Pipeline::refine(ActionId a_t) const {
  if (!cfg_.refiner.enabled) return RefinementDecision{a_t, a_t, false, std::nullopt, std::nullopt, 0.0};
  std::vector<RefinementCandidate> candidates;
  candidates.reserve(refine_kpis_.size());
  for (std::size_t k : refine_kpis_) {
    if (!future_[k]) continue;
    candidates.push_back(RefinementCandidate{&graphs_[k], current_[k], *future_[k]});
  }
  auto d = refine_action(candidates, a_t, current_tau(), cfg_.action_space);
  // Report the trigger as a KPI index, not a candidate index.
  if (d.trigger) {
    std::size_t seen = 0;
    for (std::size_t k : refine_kpis_) {
      if (!future_[k]) continue;
      if (seen++ == *d.trigger) {
        d.trigger = k;
        break;
      }
    }
  }
  return d;
}

void Pipeline::commit(ActionId executed) {
  if (terminal_) throw ValidationError("cannot commit an action on a terminal record");
  pending_ = Pending{current_, executed};
  policy_.add_action(executed);
  for (std::size_t c = 0; c < channels_.size(); ++c)
    if (channel_symbols_[c]) channels_[c].table.add(*channel_symbols_[c], executed.value);
  previous_action_ = executed;
}

ExplanationRecord Pipeline::process(const TraceRecord& r, bool execute_refined) {
  observe(r);
  ExplanationRecord e;
  e.t = r.t;
  e.terminal = r.done;
  e.states = current_;
  if (r.done) return e;
  if (!r.action) throw ValidationError("t=" + std::to_string(r.t) + ": missing action");
  const ActionId a = cfg_.action_space.resolve(*r.action);
  e.action = a;
  e.action_symbol = symbolize_action(previous_action_, a, cfg_.action_space);
  e.influence = explain(a);
  e.tau = current_tau();
  if (cfg_.refiner.enabled) e.refinement = refine(a);
  commit(execute_refined && e.refinement ? e.refinement->refined : a);
  return e;
}

std::vector<MiEntry> Pipeline::mi_report() const {
  std::vector<MiEntry> out;
  out.reserve(channels_.size());
  for (const auto& ch : channels_)
    out.push_back(MiEntry{ch.name, ch.table.mutual_information(), ch.table.samples()});
  return out;
}

namespace {

json action_json(const ActionSpace& space, ActionId a) {
  const auto v = space.value_of(a);
  if (const double* d = std::get_if<double>(&v)) return *d;
  return std::get<std::string>(v);
}

ActionValue action_value(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw ValidationError("malformed snapshot: action must be a number or a label");
}

json state_json(const SymbolicState& s) {
  return json::array({to_string(s.predicate), s.category, s.trend ? json(*s.trend) : json(nullptr)});
}

SymbolicState state_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ValidationError("malformed snapshot: state must be [p, c, t]");
  SymbolicState s;
  const auto p = j[0].get<std::string>();
  if (p == "inc") {
    s.predicate = Predicate::Inc;
  } else if (p == "dec") {
    s.predicate = Predicate::Dec;
  } else if (p == "const") {
    s.predicate = Predicate::Const;
  } else {
    throw ValidationError("malformed snapshot: unknown predicate '" + p + "'");
  }
  s.category = j[1].get<std::uint8_t>();
  if (!j[2].is_null()) s.trend = j[2].get<std::uint8_t>();
  return s;
}

void check_state(const SymbolicState& s, const KpiConfig& cfg) {
  if (s.category >= cfg.category_labels.size() || (s.trend && *s.trend >= cfg.trend_labels.size()))
    throw ValidationError("snapshot state out of range for kpi '" + cfg.name + "'");
}

std::string file_stem(const std::string& name) {
  std::string out = name;
  for (char& c : out)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) c = '_';
  return out;
}

json kpi_fingerprint_doc(const KpiConfig& k, const ActionSpace& space) {
  return json{{"kpi", to_json(k)}, {"action_space", to_json(space)}};
}

json pipeline_fingerprint_doc(const PipelineConfig& cfg) {
  json kpis = json::array();
  for (const auto& k : cfg.kpis) kpis.push_back(to_json(k));
  return json{{"kpis", kpis}, {"action_space", to_json(cfg.action_space)}};
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed snapshot " + path.string() + ": " + e.what());
  }
}

}  // namespace

json sketch_to_json(const QuantileSketch& s) {
  return json{{"target", s.target()},
              {"count", s.count()},
              {"heights", s.heights()},
              {"positions", s.positions()},
              {"desired", s.desired()}};
}

QuantileSketch sketch_from_json(const json& doc) {
  try {
    return QuantileSketch::from_state(
        doc.at("target").get<double>(), doc.at("count").get<std::uint64_t>(),
        doc.at("heights").get<std::array<double, QuantileSketch::kMarkers>>(),
        doc.at("positions").get<std::array<std::int64_t, QuantileSketch::kMarkers>>(),
        doc.at("desired").get<std::array<double, QuantileSketch::kMarkers>>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed snapshot sketch: ") + e.what());
  }
}

json graph_to_json(const KnowledgeGraph& g, const ActionSpace& space) {
  json nodes = json::array();
  for (const auto& [state, stats] : g.nodes())
    nodes.push_back(json{{"state", state_json(state)}, {"visits", stats.visits}, {"terminal", stats.terminal}});
  json edges = json::array();
  for (const auto& e : g.edges()) {
    edges.push_back(json{{"source", state_json(e.source)},
                         {"action", action_json(space, e.action)},
                         {"destination", state_json(e.destination)},
                         {"count", e.stats.count},
                         {"reward_sum", e.stats.reward_sum}});
  }
  return json{{"kpi", g.kpi()}, {"nodes", nodes}, {"edges", edges}};
}

KnowledgeGraph graph_from_json(const json& doc, const ActionSpace& space) {
  try {
    std::vector<std::pair<SymbolicState, NodeStats>> nodes;
    for (const auto& n : doc.at("nodes"))
      nodes.emplace_back(state_from_json(n.at("state")),
                         NodeStats{n.at("visits").get<std::uint64_t>(), n.at("terminal").get<std::uint64_t>()});
    std::vector<Edge> edges;
    for (const auto& e : doc.at("edges")) {
      auto a = space.find(action_value(e.at("action")));
      if (!a) throw ValidationError("malformed snapshot: edge action outside the action space");
      edges.push_back(Edge{state_from_json(e.at("source")), *a, state_from_json(e.at("destination")),
                           EdgeStats{e.at("count").get<std::uint64_t>(), e.at("reward_sum").get<double>()}});
    }
    return KnowledgeGraph::restore(doc.at("kpi").get<std::string>(), nodes, edges);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed snapshot graph: ") + e.what());
  }
}

void Pipeline::save_snapshot(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  json carry{{"fingerprint", fingerprint(pipeline_fingerprint_doc(cfg_))},
             {"last_t", last_t_ ? json(*last_t_) : json(nullptr)},
             {"previous_action", previous_action_ ? action_json(cfg_.action_space, *previous_action_) : json(nullptr)},
             {"reward_min", reward_min_ ? json(*reward_min_) : json(nullptr)},
             {"reward_max", reward_max_ ? json(*reward_max_) : json(nullptr)},
             {"continuous_actions", cfg_.action_space.kind() == ActionKind::Continuous
                                        ? json(cfg_.action_space.values())
                                        : json::array()}};
  if (pending_) {
    json states = json::array();
    for (const auto& s : pending_->states) states.push_back(state_json(s));
    carry["pending"] = json{{"states", states}, {"action", action_json(cfg_.action_space, pending_->action)}};
  } else {
    carry["pending"] = nullptr;
  }
  write_json(dir / "pipeline.json", carry);

  for (std::size_t k = 0; k < cfg_.kpis.size(); ++k) {
    const auto& sym = symbolizers_[k];
    json values = json::array();
    for (const auto& s : sym.values().sketches()) values.push_back(sketch_to_json(s));
    json slopes = json::array();
    for (const auto& s : sym.slopes().sketches()) slopes.push_back(sketch_to_json(s));
    json history = json::array();
    for (auto key : history_[k]) history.push_back(state_json(SymbolicState::from_key(key)));
    json doc{{"kpi", cfg_.kpis[k].name},
             {"fingerprint", fingerprint(kpi_fingerprint_doc(cfg_.kpis[k], cfg_.action_space))},
             {"previous", sym.previous() ? json(*sym.previous()) : json(nullptr)},
             {"history", history},
             {"sketches", json{{"values", values}, {"slopes", slopes}}},
             {"graph", graph_to_json(graphs_[k], cfg_.action_space)}};
    write_json(dir / (file_stem(cfg_.kpis[k].name) + ".json"), doc);
  }
}

void Pipeline::load_snapshot(const std::filesystem::path& dir) {
  const json carry = read_json(dir / "pipeline.json");
  try {
    if (carry.at("fingerprint").get<std::string>() != fingerprint(pipeline_fingerprint_doc(cfg_)))
      throw ValidationError("snapshot " + dir.string() + " was written with a different configuration");
    if (cfg_.action_space.kind() == ActionKind::Continuous) {
      for (const auto& v : carry.at("continuous_actions")) cfg_.action_space.resolve(v.get<double>());
    }
    const auto find_action = [this](const json& j) {
      auto a = cfg_.action_space.find(action_value(j));
      if (!a) throw ValidationError("malformed snapshot: action outside the action space");
      return *a;
    };
    last_t_ = carry.at("last_t").is_null() ? std::nullopt : std::optional(carry["last_t"].get<std::int64_t>());
    previous_action_ = carry.at("previous_action").is_null()
                           ? std::nullopt
                           : std::optional(find_action(carry["previous_action"]));
    reward_min_ = carry.at("reward_min").is_null() ? std::nullopt : std::optional(carry["reward_min"].get<double>());
    reward_max_ = carry.at("reward_max").is_null() ? std::nullopt : std::optional(carry["reward_max"].get<double>());
    pending_.reset();
    if (!carry.at("pending").is_null()) {
      Pending p;
      for (const auto& s : carry["pending"].at("states")) p.states.push_back(state_from_json(s));
      if (p.states.size() != cfg_.kpis.size()) throw ValidationError("malformed snapshot: pending state size");
      for (std::size_t k = 0; k < p.states.size(); ++k) check_state(p.states[k], cfg_.kpis[k]);
      p.action = find_action(carry["pending"].at("action"));
      pending_ = std::move(p);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed snapshot pipeline.json: ") + e.what());
  }

  for (std::size_t k = 0; k < cfg_.kpis.size(); ++k) {
    const auto& kc = cfg_.kpis[k];
    const json doc = read_json(dir / (file_stem(kc.name) + ".json"));
    try {
      if (doc.at("fingerprint").get<std::string>() != fingerprint(kpi_fingerprint_doc(kc, cfg_.action_space)))
        throw ValidationError("snapshot for kpi '" + kc.name + "' was written with a different configuration");
      KpiSymbolizer sym(kc);
      const auto load_set = [](SketchSet& set, const json& arr) {
        if (arr.size() != set.sketches().size()) throw ValidationError("malformed snapshot: sketch count");
        for (std::size_t i = 0; i < arr.size(); ++i) {
          auto s = sketch_from_json(arr[i]);
          if (s.target() != set.sketches()[i].target())
            throw ValidationError("malformed snapshot: sketch target mismatch");
          set.sketches()[i] = s;
        }
      };
      load_set(sym.values(), doc.at("sketches").at("values"));
      load_set(sym.slopes(), doc.at("sketches").at("slopes"));
      if (!doc.at("previous").is_null()) sym.set_previous(doc["previous"].get<double>());
      auto g = graph_from_json(doc.at("graph"), cfg_.action_space);
      if (g.kpi() != kc.name) throw ValidationError("malformed snapshot: graph kpi mismatch");
      for (const auto& [state, stats] : g.nodes()) check_state(state, kc);
      std::deque<std::uint32_t> history;
      if (auto h = doc.find("history"); h != doc.end()) {
        for (const auto& s : *h) {
          const auto state = state_from_json(s);
          check_state(state, kc);
          history.push_back(state.key());
        }
      }
      symbolizers_[k] = std::move(sym);
      history_[k] = std::move(history);
      graphs_[k] = std::move(g);
    } catch (const json::exception& e) {
      throw ValidationError("malformed snapshot for kpi '" + kc.name + "': " + e.what());
    }
  }
}

nlohmann::ordered_json Pipeline::to_json(const ExplanationRecord& e) const {
  using ojson = nlohmann::ordered_json;
  const auto& space = cfg_.action_space;
  ojson j;
  j["t"] = e.t;
  if (e.terminal) j["terminal"] = true;
  if (e.action) {
    ojson a;
    a["symbol"] = render(*e.action_symbol, space);
    const auto v = space.value_of(*e.action);
    if (const double* d = std::get_if<double>(&v)) {
      a["value"] = *d;
    } else {
      a["value"] = std::get<std::string>(v);
    }
    j["action"] = a;
  }
  ojson kpis = ojson::object();
  for (std::size_t k = 0; k < cfg_.kpis.size() && k < e.states.size(); ++k) {
    ojson entry;
    entry["state"] = render(e.states[k], cfg_.kpis[k]);
    if (!e.terminal && k < e.influence.per_kpi.size()) {
      const auto& inf = e.influence.per_kpi[k];
      entry["is"] = inf.score;
      entry["kl"] = inf.kl;
      entry["alignment"] = inf.alignment;
      entry["a_star"] = inf.a_star ? ojson(space.label(*inf.a_star)) : ojson(nullptr);
      entry["cold_start"] = inf.cold_start;
    }
    kpis[cfg_.kpis[k].name] = entry;
  }
  j["kpis"] = kpis;
  if (e.refinement) {
    const auto& d = *e.refinement;
    ojson r;
    r["refined"] = space.label(d.refined);
    r["overridden"] = d.overridden;
    r["trigger"] = d.trigger ? ojson(cfg_.kpis[*d.trigger].name) : ojson(nullptr);
    r["r_best"] = d.r_best ? ojson(*d.r_best) : ojson(nullptr);
    r["r_agent"] = d.r_agent;
    r["tau"] = e.tau;
    j["refinement"] = r;
  }
  return j;
}

}  // namespace foresight
