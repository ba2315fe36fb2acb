#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "foresight/symbolic.hpp"

namespace foresight {

enum class ActionKind : std::uint8_t { Ordered, Categorical, Continuous };

const char* to_string(ActionKind k) noexcept;

// Dense handle for an action inside one ActionSpace. For ordered and
// categorical spaces the value is the configured index.
struct ActionId {
  std::uint32_t value = 0;
  friend auto operator<=>(const ActionId&, const ActionId&) = default;
};

// Raw action as it appears on the wire: a number or a category label.
using ActionValue = std::variant<double, std::string>;

class ActionSpace {
 public:
  static ActionSpace ordered(std::string name, std::vector<double> values, double sigma = 1.0);
  static ActionSpace categorical(std::string name, std::string predicate,
                                 std::vector<std::string> labels);
  static ActionSpace continuous(std::string name, double sigma);

  ActionKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  const std::string& predicate() const noexcept { return predicate_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  double sigma() const noexcept { return sigma_; }

  // Resolves a raw action, interning new continuous values. Throws
  // ValidationError if the action lies outside the declared space.
  ActionId resolve(const ActionValue& v);
  // Lookup without interning.
  std::optional<ActionId> find(const ActionValue& v) const;

  std::size_t size() const noexcept;
  ActionValue value_of(ActionId a) const;
  double numeric(ActionId a) const;
  std::string label(ActionId a) const;

  // Configured action order; used for every tie-break.
  bool precedes(ActionId a, ActionId b) const;
  double distance(ActionId a, ActionId b) const;
  // delta(a_t, a*): Gaussian decay for ordered/continuous, indicator for categorical.
  double alignment(ActionId a, ActionId b) const;

  friend bool operator==(const ActionSpace&, const ActionSpace&) = default;

 private:
  ActionKind kind_ = ActionKind::Ordered;
  std::string name_;
  std::string predicate_;
  std::vector<double> values_;
  std::vector<std::string> labels_;
  double sigma_ = 1.0;
  std::map<double, std::uint32_t> interned_;
};

// Symbolized agent decision, e.g. dec(bitrate, 1200.0, 750.0) or toPolicy(WF).
struct ActionSymbol {
  ActionKind kind = ActionKind::Ordered;
  Predicate direction = Predicate::Const;
  double previous = 0.0;
  double next = 0.0;
  std::string label;

  friend bool operator==(const ActionSymbol&, const ActionSymbol&) = default;
};

// prev == nullopt means there is no earlier action; it is treated as unchanged.
ActionSymbol symbolize_action(std::optional<ActionId> prev, ActionId next,
                              const ActionSpace& space);
std::string render(const ActionSymbol& a, const ActionSpace& space);

// Shortest round-trip decimal with at least one fractional digit: 750 -> "750.0".
std::string format_number(double v);

}  // namespace foresight
