#include "foresight/symbolic.hpp"

#include <algorithm>
#include <cmath>

#include "foresight/error.hpp"

namespace foresight {

const char* to_string(Predicate p) noexcept {
  switch (p) {
    case Predicate::Inc: return "inc";
    case Predicate::Dec: return "dec";
    case Predicate::Const: break;
  }
  return "const";
}

namespace {

void check_scheme(const std::string& kpi, const char* what,
                  const std::vector<std::string>& labels, const std::vector<double>& bounds) {
  const std::string where = "kpi '" + kpi + "' " + what;
  if (labels.size() != bounds.size() + 1)
    throw ValidationError(where + ": need exactly one more label than boundaries");
  if (labels.size() > 255) throw ValidationError(where + ": too many labels");
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (!(bounds[i] > 0.0 && bounds[i] < 100.0))
      throw ValidationError(where + ": boundaries must lie in (0,100)");
    if (i > 0 && !(bounds[i] > bounds[i - 1]))
      throw ValidationError(where + ": boundaries must be strictly increasing");
  }
}

}  // namespace

void KpiConfig::validate() const {
  if (name.empty()) throw ValidationError("kpi name must not be empty");
  if (!(theta >= 0.0) || !std::isfinite(theta))
    throw ValidationError("kpi '" + name + "': theta must be finite and >= 0");
  check_scheme(name, "categories", category_labels, category_boundaries);
  check_scheme(name, "trends", trend_labels, trend_boundaries);
  if (has_forecast && horizon == 0)
    throw ValidationError("kpi '" + name + "': forecast horizon must be >= 1");
  if (!has_forecast && horizon != 0)
    throw ValidationError("kpi '" + name + "': horizon set without has_forecast");
  for (int o : mi_offsets) {
    if (o > 0 && static_cast<std::size_t>(o) > horizon)
      throw ValidationError("kpi '" + name + "': mi offset " + std::to_string(o) +
                            " exceeds forecast horizon");
  }
}

std::size_t KpiConfig::max_states() const noexcept {
  return kPredicateCount * category_labels.size() * (has_trend() ? trend_labels.size() : 1);
}

SymbolicState SymbolicState::from_key(std::uint32_t key) {
  SymbolicState s;
  s.predicate = static_cast<Predicate>((key >> 16) & 0xff);
  s.category = static_cast<std::uint8_t>((key >> 8) & 0xff);
  const auto t = key & 0xff;
  if (t != 0) s.trend = static_cast<std::uint8_t>(t - 1);
  return s;
}

std::string render(const SymbolicState& s, const KpiConfig& cfg) {
  std::string out = to_string(s.predicate);
  out += '(';
  out += cfg.name;
  out += ", ";
  out += cfg.category_labels.at(s.category);
  if (s.trend) {
    out += ", ";
    out += cfg.trend_labels.at(*s.trend);
  }
  out += ')';
  return out;
}

}  // namespace foresight
