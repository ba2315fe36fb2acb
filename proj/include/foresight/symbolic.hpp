#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace foresight {

enum class Predicate : std::uint8_t { Const = 0, Inc = 1, Dec = 2 };

inline constexpr std::size_t kPredicateCount = 3;

const char* to_string(Predicate p) noexcept;

struct KpiConfig {
  std::string name;
  double theta = 0.05;
  std::vector<std::string> category_labels{"VeryLow", "Low", "Medium", "High", "VeryHigh"};
  std::vector<double> category_boundaries{20, 40, 60, 80};
  std::vector<std::string> trend_labels{"Dropping", "Fluctuating", "Spiking"};
  std::vector<double> trend_boundaries{40, 60};
  bool has_forecast = false;
  // Forecast series length. A trend is only attached when horizon > 1.
  std::size_t horizon = 0;
  // MI channels as offsets relative to t (negative: past, positive: forecast step).
  std::vector<int> mi_offsets{0};

  // Throws ValidationError on any broken invariant.
  void validate() const;

  bool has_trend() const noexcept { return has_forecast && horizon > 1; }
  std::size_t max_states() const noexcept;
};

// <predicate, category, trend?> for one KPI at one timestep.
struct SymbolicState {
  Predicate predicate = Predicate::Const;
  std::uint8_t category = 0;
  std::optional<std::uint8_t> trend;

  // Dense, config-independent key; distinct states map to distinct keys.
  std::uint32_t key() const noexcept {
    return (static_cast<std::uint32_t>(predicate) << 16) |
           (static_cast<std::uint32_t>(category) << 8) |
           (trend ? static_cast<std::uint32_t>(*trend) + 1u : 0u);
  }
  static SymbolicState from_key(std::uint32_t key);

  friend bool operator==(const SymbolicState&, const SymbolicState&) = default;
  friend auto operator<=>(const SymbolicState& a, const SymbolicState& b) {
    return a.key() <=> b.key();
  }
};

// "inc(tput, High, Dropping)" / "const(buffer, Low)"
std::string render(const SymbolicState& s, const KpiConfig& cfg);

}  // namespace foresight
