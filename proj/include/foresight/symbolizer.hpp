#pragma once

#include <optional>
#include <span>
#include <vector>

#include "foresight/quantile_sketch.hpp"
#include "foresight/symbolic.hpp"

namespace foresight {

// Values at or below this magnitude count as zero when the previous value is 0.
inline constexpr double kZeroEpsilon = 1e-9;

// inc/dec when |v - prev| exceeds theta * |prev| (strictly); const otherwise.
Predicate detect_change(double v, double prev, double theta);

// Piecewise-linear rank of v against boundary heights. The knots are
// (lo, 0), (heights[i], percentiles[i])..., (hi, 100). Values outside the
// outermost knots clamp to 0 or 100.
double percentile_rank(double v, std::span<const double> percentiles,
                       std::span<const double> heights,
                       std::optional<double> lo = std::nullopt,
                       std::optional<double> hi = std::nullopt);

// Index of the half-open band [b_i, b_{i+1}) holding rank; the top band is closed.
std::size_t bucket_index(double rank, std::span<const double> boundaries);

// OLS slope of values against indices 0..n-1. Throws ValidationError for n < 2.
double linreg_slope(std::span<const double> series);

// One P-square sketch per boundary percentile.
class SketchSet {
 public:
  SketchSet() = default;
  explicit SketchSet(std::span<const double> boundaries);

  void update(double v);
  // Rank against current marker heights; throws ColdStartError when empty.
  double rank(double v) const;
  std::vector<double> heights() const;

  bool empty() const noexcept { return sketches_.empty() || sketches_.front().empty(); }
  std::uint64_t count() const noexcept { return sketches_.empty() ? 0 : sketches_.front().count(); }
  const std::vector<double>& boundaries() const noexcept { return boundaries_; }
  const std::vector<QuantileSketch>& sketches() const noexcept { return sketches_; }
  std::vector<QuantileSketch>& sketches() noexcept { return sketches_; }

  friend bool operator==(const SketchSet&, const SketchSet&) = default;

 private:
  std::vector<double> boundaries_;
  std::vector<QuantileSketch> sketches_;
};

const std::string& categorize(double rank, const KpiConfig& cfg);

struct SymbolizeResult {
  SymbolicState current;
  // State implied by the first forecast step; only when a forecast was given.
  std::optional<SymbolicState> future;
  double rank = 0.0;
  std::optional<double> slope;
  std::optional<double> slope_rank;
};

// Per-KPI symbolizer state: value sketches, slope-history sketches and the
// previous observation. Single writer.
class KpiSymbolizer {
 public:
  KpiSymbolizer() = default;
  explicit KpiSymbolizer(KpiConfig cfg);

  // Symbolize v_t (plus optional forecast) and then fold v_t and the
  // forecast slope into the sketches.
  SymbolizeResult observe(double v, std::span<const double> forecast = {});

  // Read-only two-component state of a hypothetical value, predicate
  // relative to prev. Throws ColdStartError before any observation.
  SymbolicState classify(double v, double prev) const;

  void reset_episode() noexcept { previous_.reset(); }

  const KpiConfig& config() const noexcept { return cfg_; }
  const SketchSet& values() const noexcept { return values_; }
  const SketchSet& slopes() const noexcept { return slopes_; }
  SketchSet& values() noexcept { return values_; }
  SketchSet& slopes() noexcept { return slopes_; }
  std::optional<double> previous() const noexcept { return previous_; }
  void set_previous(std::optional<double> v) noexcept { previous_ = v; }

 private:
  KpiConfig cfg_;
  SketchSet values_;
  SketchSet slopes_;
  std::optional<double> previous_;
};

}  // namespace foresight
