#include "foresight/action_space.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "foresight/error.hpp"

namespace foresight {

const char* to_string(ActionKind k) noexcept {
  switch (k) {
    case ActionKind::Categorical: return "categorical";
    case ActionKind::Continuous: return "continuous";
    case ActionKind::Ordered: break;
  }
  return "ordered";
}

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, end);
  if (std::isfinite(v) && s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

ActionSpace ActionSpace::ordered(std::string name, std::vector<double> values, double sigma) {
  if (values.empty()) throw ValidationError("ordered action space needs at least one value");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require_finite(values[i], "action value");
    if (i > 0 && !(values[i] > values[i - 1]))
      throw ValidationError("ordered action values must be strictly increasing");
  }
  if (!(sigma > 0.0)) throw ValidationError("action sigma must be > 0");
  ActionSpace s;
  s.kind_ = ActionKind::Ordered;
  s.name_ = std::move(name);
  s.values_ = std::move(values);
  s.sigma_ = sigma;
  return s;
}

ActionSpace ActionSpace::categorical(std::string name, std::string predicate,
                                     std::vector<std::string> labels) {
  if (labels.empty()) throw ValidationError("categorical action space needs at least one label");
  auto sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ValidationError("categorical action labels must be unique");
  ActionSpace s;
  s.kind_ = ActionKind::Categorical;
  s.name_ = std::move(name);
  s.predicate_ = predicate.empty() ? "to" + s.name_ : std::move(predicate);
  s.labels_ = std::move(labels);
  return s;
}

ActionSpace ActionSpace::continuous(std::string name, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("action sigma must be > 0");
  ActionSpace s;
  s.kind_ = ActionKind::Continuous;
  s.name_ = std::move(name);
  s.sigma_ = sigma;
  return s;
}

std::optional<ActionId> ActionSpace::find(const ActionValue& v) const {
  if (const double* d = std::get_if<double>(&v); d && !std::isfinite(*d)) return std::nullopt;
  switch (kind_) {
    case ActionKind::Ordered: {
      const double* d = std::get_if<double>(&v);
      if (!d) return std::nullopt;
      for (std::size_t i = 0; i < values_.size(); ++i)
        if (std::fabs(values_[i] - *d) <= 1e-9 * std::max(1.0, std::fabs(values_[i])))
          return ActionId{static_cast<std::uint32_t>(i)};
      return std::nullopt;
    }
    case ActionKind::Categorical: {
      const std::string* l = std::get_if<std::string>(&v);
      if (!l) return std::nullopt;
      auto it = std::find(labels_.begin(), labels_.end(), *l);
      if (it == labels_.end()) return std::nullopt;
      return ActionId{static_cast<std::uint32_t>(it - labels_.begin())};
    }
    case ActionKind::Continuous: {
      const double* d = std::get_if<double>(&v);
      if (!d) return std::nullopt;
      auto it = interned_.find(*d);
      if (it == interned_.end()) return std::nullopt;
      return ActionId{it->second};
    }
  }
  return std::nullopt;
}

ActionId ActionSpace::resolve(const ActionValue& v) {
  if (auto id = find(v)) return *id;
  if (kind_ == ActionKind::Continuous) {
    if (const double* d = std::get_if<double>(&v)) {
      require_finite(*d, "action value");
      const auto id = static_cast<std::uint32_t>(values_.size());
      values_.push_back(*d);
      interned_.emplace(*d, id);
      return ActionId{id};
    }
  }
  std::string shown = std::holds_alternative<double>(v) ? format_number(std::get<double>(v))
                                                        : "'" + std::get<std::string>(v) + "'";
  throw ValidationError("action " + shown + " is outside the " + to_string(kind_) +
                        " action space '" + name_ + "'");
}

std::size_t ActionSpace::size() const noexcept {
  return kind_ == ActionKind::Categorical ? labels_.size() : values_.size();
}

ActionValue ActionSpace::value_of(ActionId a) const {
  if (kind_ == ActionKind::Categorical) return labels_.at(a.value);
  return values_.at(a.value);
}

double ActionSpace::numeric(ActionId a) const {
  if (kind_ == ActionKind::Categorical) return static_cast<double>(a.value);
  return values_.at(a.value);
}

std::string ActionSpace::label(ActionId a) const {
  if (kind_ == ActionKind::Categorical) return labels_.at(a.value);
  return format_number(values_.at(a.value));
}

bool ActionSpace::precedes(ActionId a, ActionId b) const {
  if (kind_ == ActionKind::Continuous) return values_.at(a.value) < values_.at(b.value);
  return a.value < b.value;
}

double ActionSpace::distance(ActionId a, ActionId b) const {
  switch (kind_) {
    case ActionKind::Ordered:
      return std::fabs(static_cast<double>(a.value) - static_cast<double>(b.value));
    case ActionKind::Continuous:
      return std::fabs(values_.at(a.value) - values_.at(b.value));
    case ActionKind::Categorical:
      break;
  }
  return a == b ? 0.0 : 1.0;
}

double ActionSpace::alignment(ActionId a, ActionId b) const {
  if (kind_ == ActionKind::Categorical) return a == b ? 1.0 : 0.0;
  const double d = distance(a, b);
  return std::exp(-(d * d) / (2.0 * sigma_ * sigma_));
}

ActionSymbol symbolize_action(std::optional<ActionId> prev, ActionId next,
                              const ActionSpace& space) {
  ActionSymbol sym;
  sym.kind = space.kind();
  sym.label = space.label(next);
  sym.next = space.numeric(next);
  sym.previous = prev ? space.numeric(*prev) : sym.next;
  if (sym.next > sym.previous) {
    sym.direction = Predicate::Inc;
  } else if (sym.next < sym.previous) {
    sym.direction = Predicate::Dec;
  }
  return sym;
}

std::string render(const ActionSymbol& a, const ActionSpace& space) {
  switch (a.kind) {
    case ActionKind::Ordered:
      return std::string(to_string(a.direction)) + "(" + space.name() + ", " +
             format_number(a.previous) + ", " + format_number(a.next) + ")";
    case ActionKind::Categorical:
      return space.predicate() + "(" + a.label + ")";
    case ActionKind::Continuous:
      return space.name() + "(" + format_number(a.next) + ")";
  }
  return {};
}

}  // namespace foresight
