#include "foresight/trace.hpp"

#include <cmath>

#include "foresight/error.hpp"

namespace foresight {

using nlohmann::json;

namespace {

double finite_number(const json& v, std::size_t line, const std::string& field) {
  if (!v.is_number()) throw ParseError(line, field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ParseError(line, field, "number is not finite");
  return d;
}

}  // namespace

TraceRecord parse_trace_line(std::string_view text, std::size_t line_no, const PipelineConfig& cfg,
                             std::optional<std::int64_t> previous_t) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line_no, "", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError(line_no, "", "expected a JSON object");

  TraceRecord r;
  auto t = doc.find("t");
  if (t == doc.end()) throw ParseError(line_no, "t", "missing field");
  if (!t->is_number_integer()) throw ParseError(line_no, "t", "expected an integer");
  r.t = t->get<std::int64_t>();
  if (previous_t && r.t <= *previous_t)
    throw ParseError(line_no, "t",
                     "timestep " + std::to_string(r.t) + " does not increase past " +
                         std::to_string(*previous_t));

  if (auto d = doc.find("done"); d != doc.end() && !d->is_null()) {
    if (!d->is_boolean()) throw ParseError(line_no, "done", "expected a boolean");
    r.done = d->get<bool>();
  }

  auto kpis = doc.find("kpis");
  if (kpis == doc.end()) throw ParseError(line_no, "kpis", "missing field");
  if (!kpis->is_object()) throw ParseError(line_no, "kpis", "expected an object");
  for (const auto& k : cfg.kpis) {
    auto v = kpis->find(k.name);
    if (v == kpis->end()) throw ParseError(line_no, "kpis." + k.name, "missing field");
    r.kpis[k.name] = finite_number(*v, line_no, "kpis." + k.name);
  }
  for (const auto& [name, v] : kpis->items())
    if (!cfg.kpi_index(name)) throw ParseError(line_no, "kpis." + name, "undeclared kpi");

  auto forecasts = doc.find("forecasts");
  if (forecasts != doc.end() && !forecasts->is_null()) {
    if (!forecasts->is_object()) throw ParseError(line_no, "forecasts", "expected an object");
    for (const auto& [name, series] : forecasts->items()) {
      const std::string field = "forecasts." + name;
      auto idx = cfg.kpi_index(name);
      if (!idx) throw ParseError(line_no, field, "undeclared kpi");
      if (!cfg.kpis[*idx].has_forecast) throw ParseError(line_no, field, "kpi has no forecast");
      if (!series.is_array()) throw ParseError(line_no, field, "expected an array");
      if (series.size() != cfg.kpis[*idx].horizon)
        throw ParseError(line_no, field,
                         "forecast length " + std::to_string(series.size()) + " != horizon " +
                             std::to_string(cfg.kpis[*idx].horizon));
      auto& out = r.forecasts[name];
      for (std::size_t i = 0; i < series.size(); ++i)
        out.push_back(finite_number(series[i], line_no, field + "[" + std::to_string(i) + "]"));
    }
  }
  for (const auto& k : cfg.kpis) {
    if (k.has_forecast && !r.forecasts.contains(k.name))
      throw ParseError(line_no, "forecasts." + k.name, "missing field");
  }

  auto action = doc.find("action");
  if (action != doc.end() && !action->is_null()) {
    if (r.done) throw ParseError(line_no, "action", "terminal record must not carry an action");
    if (action->is_number()) {
      r.action = finite_number(*action, line_no, "action");
    } else if (action->is_string()) {
      r.action = action->get<std::string>();
    } else {
      throw ParseError(line_no, "action", "expected a number or a label");
    }
    if (!cfg.action_space.find(*r.action) && cfg.action_space.kind() != ActionKind::Continuous)
      throw ParseError(line_no, "action", "outside the declared action space");
    if (cfg.action_space.kind() == ActionKind::Continuous && !std::holds_alternative<double>(*r.action))
      throw ParseError(line_no, "action", "continuous action must be a number");
  } else if (!r.done) {
    throw ParseError(line_no, "action", "missing field");
  }

  if (auto rw = doc.find("reward"); rw != doc.end() && !rw->is_null())
    r.reward = finite_number(*rw, line_no, "reward");
  return r;
}

std::string serialize(const TraceRecord& r) {
  nlohmann::ordered_json j;
  j["t"] = r.t;
  j["kpis"] = r.kpis;
  if (!r.forecasts.empty()) j["forecasts"] = r.forecasts;
  if (r.action) {
    if (const double* d = std::get_if<double>(&*r.action)) {
      j["action"] = *d;
    } else {
      j["action"] = std::get<std::string>(*r.action);
    }
  }
  if (r.reward) j["reward"] = *r.reward;
  if (r.done) j["done"] = true;
  return j.dump();
}

}  // namespace foresight
