#include "foresight/symbolizer.hpp"

#include <algorithm>
#include <cmath>

#include "foresight/error.hpp"

namespace foresight {

Predicate detect_change(double v, double prev, double theta) {
  require_finite(v, "kpi value");
  require_finite(prev, "previous kpi value");
  if (!(theta >= 0.0) || !std::isfinite(theta)) throw ValidationError("theta must be finite and >= 0");
  if (prev == 0.0) {
    if (std::fabs(v) <= kZeroEpsilon) return Predicate::Const;
    return v > 0.0 ? Predicate::Inc : Predicate::Dec;
  }
  const double limit = theta * std::fabs(prev);
  const double diff = v - prev;
  if (diff > limit) return Predicate::Inc;
  if (-diff > limit) return Predicate::Dec;
  return Predicate::Const;
}

double percentile_rank(double v, std::span<const double> percentiles,
                       std::span<const double> heights, std::optional<double> lo,
                       std::optional<double> hi) {
  if (percentiles.size() != heights.size() || heights.empty())
    throw ValidationError("percentile_rank needs one height per boundary");
  std::vector<double> xs;
  std::vector<double> ps;
  xs.reserve(heights.size() + 2);
  ps.reserve(heights.size() + 2);
  if (lo) {
    xs.push_back(std::min(*lo, heights.front()));
    ps.push_back(0.0);
  }
  // Independent estimators can cross; force the knots non-decreasing.
  for (std::size_t i = 0; i < heights.size(); ++i) {
    const double h = xs.empty() ? heights[i] : std::max(heights[i], xs.back());
    xs.push_back(h);
    ps.push_back(percentiles[i]);
  }
  if (hi) {
    xs.push_back(std::max(*hi, xs.back()));
    ps.push_back(100.0);
  }

  if (v < xs.front()) return 0.0;
  if (v > xs.back()) return 100.0;

  auto first = std::lower_bound(xs.begin(), xs.end(), v);
  if (*first == v) {
    auto last = std::upper_bound(first, xs.end(), v) - 1;
    const auto i = static_cast<std::size_t>(first - xs.begin());
    const auto j = static_cast<std::size_t>(last - xs.begin());
    return std::clamp((ps[i] + ps[j]) / 2.0, 0.0, 100.0);
  }
  const auto j = static_cast<std::size_t>(first - xs.begin());
  const std::size_t i = j - 1;
  const double r = ps[i] + (ps[j] - ps[i]) * (v - xs[i]) / (xs[j] - xs[i]);
  return std::clamp(r, 0.0, 100.0);
}

std::size_t bucket_index(double rank, std::span<const double> boundaries) {
  return static_cast<std::size_t>(std::upper_bound(boundaries.begin(), boundaries.end(), rank) -
                                  boundaries.begin());
}

double linreg_slope(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 2) throw ValidationError("linreg_slope needs at least two points");
  double mean_y = 0.0;
  for (double y : series) {
    require_finite(y, "forecast value");
    mean_y += y;
  }
  mean_y /= static_cast<double>(n);
  const double mean_x = static_cast<double>(n - 1) / 2.0;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(i) - mean_x;
    sxy += dx * (series[i] - mean_y);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

SketchSet::SketchSet(std::span<const double> boundaries)
    : boundaries_(boundaries.begin(), boundaries.end()) {
  sketches_.reserve(boundaries_.size());
  for (double b : boundaries_) sketches_.emplace_back(b / 100.0);
}

void SketchSet::update(double v) {
  for (auto& s : sketches_) s.update(v);
}

std::vector<double> SketchSet::heights() const {
  std::vector<double> out;
  out.reserve(sketches_.size());
  for (const auto& s : sketches_) out.push_back(s.query());
  return out;
}

double SketchSet::rank(double v) const {
  if (empty()) throw ColdStartError("percentile rank before any observation");
  const std::vector<double> hs = heights();
  return percentile_rank(v, boundaries_, hs, sketches_.front().min(), sketches_.front().max());
}

const std::string& categorize(double rank, const KpiConfig& cfg) {
  return cfg.category_labels.at(bucket_index(rank, cfg.category_boundaries));
}

KpiSymbolizer::KpiSymbolizer(KpiConfig cfg)
    : cfg_(std::move(cfg)), values_(cfg_.category_boundaries), slopes_(cfg_.trend_boundaries) {
  cfg_.validate();
}

SymbolizeResult KpiSymbolizer::observe(double v, std::span<const double> forecast) {
  require_finite(v, "kpi value");
  if (!forecast.empty() && !cfg_.has_forecast)
    throw ValidationError("kpi '" + cfg_.name + "' has no forecast configured");
  for (double f : forecast) require_finite(f, "forecast value");

  SymbolizeResult out;
  out.current.predicate = previous_ ? detect_change(v, *previous_, cfg_.theta) : Predicate::Const;

  // Cold start: the very first value seeds the sketch before it is ranked.
  const bool seeded = values_.empty();
  if (seeded) values_.update(v);
  out.rank = values_.rank(v);
  out.current.category = static_cast<std::uint8_t>(bucket_index(out.rank, cfg_.category_boundaries));

  if (!forecast.empty()) {
    SymbolicState future;
    future.predicate = detect_change(forecast.front(), v, cfg_.theta);
    future.category = static_cast<std::uint8_t>(
        bucket_index(values_.rank(forecast.front()), cfg_.category_boundaries));
    out.future = future;
  }

  if (forecast.size() >= 2) {
    const double slope = linreg_slope(forecast);
    const bool slope_seeded = slopes_.empty();
    if (slope_seeded) slopes_.update(slope);
    const double srank = slopes_.rank(slope);
    const auto trend = static_cast<std::uint8_t>(bucket_index(srank, cfg_.trend_boundaries));
    out.current.trend = trend;
    out.future->trend = trend;
    out.slope = slope;
    out.slope_rank = srank;
    if (!slope_seeded) slopes_.update(slope);
  }

  if (!seeded) values_.update(v);
  previous_ = v;
  return out;
}

SymbolicState KpiSymbolizer::classify(double v, double prev) const {
  SymbolicState s;
  s.predicate = detect_change(v, prev, cfg_.theta);
  s.category = static_cast<std::uint8_t>(bucket_index(values_.rank(v), cfg_.category_boundaries));
  return s;
}

}  // namespace foresight
