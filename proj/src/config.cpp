#include "foresight/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "foresight/error.hpp"

namespace foresight {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + ": key '" + key + "' has the wrong type");
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(where + ": missing key '" + key + "'");
  return *it;
}

KpiConfig parse_kpi(const json& j, std::size_t index) {
  const std::string where = "kpis[" + std::to_string(index) + "]";
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  KpiConfig k;
  const json& name = require(j, "name", where);
  if (!name.is_string()) throw ValidationError(where + ": key 'name' must be a string");
  k.name = name.get<std::string>();
  k.theta = get_or(j, "theta", k.theta, where);
  k.category_labels = get_or(j, "category_labels", k.category_labels, where);
  k.category_boundaries = get_or(j, "category_boundaries", k.category_boundaries, where);
  k.trend_labels = get_or(j, "trend_labels", k.trend_labels, where);
  k.trend_boundaries = get_or(j, "trend_boundaries", k.trend_boundaries, where);
  k.has_forecast = get_or(j, "has_forecast", k.has_forecast, where);
  k.horizon = get_or<std::size_t>(j, "horizon", k.has_forecast ? 1 : 0, where);
  k.mi_offsets = get_or(j, "mi_offsets", k.mi_offsets, where);
  k.validate();
  return k;
}

ActionSpace parse_action_space(const json& j) {
  const std::string where = "action_space";
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  const std::string kind = get_or<std::string>(j, "kind", "", where);
  const std::string name = get_or<std::string>(j, "name", "action", where);
  if (kind == "ordered") {
    require(j, "values", where);
    return ActionSpace::ordered(name, get_or<std::vector<double>>(j, "values", {}, where),
                                get_or(j, "sigma", 1.0, where));
  }
  if (kind == "categorical") {
    require(j, "labels", where);
    return ActionSpace::categorical(name, get_or<std::string>(j, "predicate", "", where),
                                    get_or<std::vector<std::string>>(j, "labels", {}, where));
  }
  if (kind == "continuous") return ActionSpace::continuous(name, get_or(j, "sigma", 1.0, where));
  throw ValidationError(where + ": kind must be one of ordered, categorical, continuous");
}

}  // namespace

void PipelineConfig::validate() const {
  if (kpis.empty()) throw ValidationError("config declares no kpis");
  std::set<std::string> names;
  for (const auto& k : kpis) {
    k.validate();
    if (!names.insert(k.name).second) throw ValidationError("kpi '" + k.name + "' declared twice");
  }
  refiner.validate();
  for (const auto& n : refiner.kpi_order) {
    auto idx = kpi_index(n);
    if (!idx) throw ValidationError("refiner.kpi_order names undeclared kpi '" + n + "'");
    if (!kpis[*idx].has_forecast)
      throw ValidationError("refiner.kpi_order names kpi '" + n + "' which has no forecast");
  }
}

std::optional<std::size_t> PipelineConfig::kpi_index(const std::string& name) const {
  for (std::size_t i = 0; i < kpis.size(); ++i)
    if (kpis[i].name == name) return i;
  return std::nullopt;
}

PipelineConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ValidationError("config: expected a JSON object");
  PipelineConfig cfg;
  const json& kpis = require(doc, "kpis", "config");
  if (!kpis.is_array()) throw ValidationError("config: 'kpis' must be an array");
  for (std::size_t i = 0; i < kpis.size(); ++i) cfg.kpis.push_back(parse_kpi(kpis[i], i));
  cfg.action_space = parse_action_space(require(doc, "action_space", "config"));
  if (auto it = doc.find("refiner"); it != doc.end()) {
    const std::string where = "refiner";
    cfg.refiner.enabled = get_or(*it, "enabled", false, where);
    if (auto tau = it->find("tau"); tau != it->end() && !tau->is_null()) cfg.refiner.tau = get_or(*it, "tau", 0.0, where);
    cfg.refiner.tau_fraction = get_or(*it, "tau_fraction", cfg.refiner.tau_fraction, where);
    cfg.refiner.kpi_order = get_or(*it, "kpi_order", std::vector<std::string>{}, where);
  }
  if (cfg.refiner.kpi_order.empty()) {
    for (const auto& k : cfg.kpis)
      if (k.has_forecast) cfg.refiner.kpi_order.push_back(k.name);
  }
  if (auto it = doc.find("env"); it != doc.end()) cfg.env = *it;
  cfg.validate();
  return cfg;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PipelineConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  try {
    return parse_config(doc);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

json to_json(const KpiConfig& k) {
  return json{{"name", k.name},
              {"theta", k.theta},
              {"category_labels", k.category_labels},
              {"category_boundaries", k.category_boundaries},
              {"trend_labels", k.trend_labels},
              {"trend_boundaries", k.trend_boundaries},
              {"has_forecast", k.has_forecast},
              {"horizon", k.horizon},
              {"mi_offsets", k.mi_offsets}};
}

json to_json(const ActionSpace& s) {
  json j{{"kind", to_string(s.kind())}, {"name", s.name()}};
  switch (s.kind()) {
    case ActionKind::Ordered:
      j["values"] = s.values();
      j["sigma"] = s.sigma();
      break;
    case ActionKind::Categorical:
      j["predicate"] = s.predicate();
      j["labels"] = s.labels();
      break;
    case ActionKind::Continuous:
      j["sigma"] = s.sigma();
      break;
  }
  return j;
}

json to_json(const PipelineConfig& cfg) {
  json kpis = json::array();
  for (const auto& k : cfg.kpis) kpis.push_back(to_json(k));
  json refiner{{"enabled", cfg.refiner.enabled},
               {"tau", cfg.refiner.tau ? json(*cfg.refiner.tau) : json(nullptr)},
               {"tau_fraction", cfg.refiner.tau_fraction},
               {"kpi_order", cfg.refiner.kpi_order}};
  json out{{"kpis", kpis}, {"action_space", to_json(cfg.action_space)}, {"refiner", refiner}};
  if (cfg.env) out["env"] = *cfg.env;
  return out;
}

std::string fingerprint(const json& doc) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace foresight
