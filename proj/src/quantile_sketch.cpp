#include "foresight/quantile_sketch.hpp"

#include <algorithm>
#include <cmath>

#include "foresight/error.hpp"

namespace foresight {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw ValidationError(std::string(what) + " must be finite");
}

QuantileSketch::QuantileSketch(double target) : target_(target) {
  if (!(target > 0.0 && target < 1.0)) throw ValidationError("quantile target must lie in (0,1)");
  increments_ = {0.0, target / 2.0, target, (1.0 + target) / 2.0, 1.0};
  desired_ = {1.0, 1.0 + 2.0 * target, 1.0 + 4.0 * target, 3.0 + 2.0 * target, 5.0};
}

QuantileSketch QuantileSketch::from_state(double target, std::uint64_t count,
                                          const std::array<double, kMarkers>& heights,
                                          const std::array<std::int64_t, kMarkers>& positions,
                                          const std::array<double, kMarkers>& desired) {
  QuantileSketch s(target);
  s.count_ = count;
  const std::size_t used = std::min<std::uint64_t>(count, kMarkers);
  for (std::size_t i = 0; i < kMarkers; ++i) require_finite(heights[i], "sketch marker height");
  if (!std::is_sorted(heights.begin(), heights.begin() + used))
    throw ValidationError("sketch marker heights must be non-decreasing");
  s.heights_ = heights;
  if (count > kMarkers) {
    if (positions[0] != 1 || positions[4] != static_cast<std::int64_t>(count))
      throw ValidationError("sketch end markers must sit at positions 1 and count");
    for (std::size_t i = 1; i < kMarkers; ++i)
      if (positions[i] <= positions[i - 1])
        throw ValidationError("sketch marker positions must be strictly increasing");
    s.positions_ = positions;
    s.desired_ = desired;
  } else if (count == kMarkers) {
    s.positions_ = {1, 2, 3, 4, 5};
  }
  return s;
}

void QuantileSketch::update(double v) {
  require_finite(v, "sketch observation");
  if (count_ < kMarkers) {
    // Insertion into the sorted prefix keeps markers equal to sorted samples.
    auto end = heights_.begin() + count_;
    auto pos = std::upper_bound(heights_.begin(), end, v);
    std::move_backward(pos, end, end + 1);
    *pos = v;
    ++count_;
    if (count_ == kMarkers) positions_ = {1, 2, 3, 4, 5};
    return;
  }

  std::size_t k;
  if (v < heights_[0]) {
    heights_[0] = v;
    k = 0;
  } else if (v < heights_[1]) {
    k = 0;
  } else if (v < heights_[2]) {
    k = 1;
  } else if (v < heights_[3]) {
    k = 2;
  } else if (v <= heights_[4]) {
    k = 3;
  } else {
    heights_[4] = v;
    k = 3;
  }
  ++count_;
  for (std::size_t i = k + 1; i < kMarkers; ++i) ++positions_[i];
  for (std::size_t i = 0; i < kMarkers; ++i) desired_[i] += increments_[i];

  for (std::size_t i = 1; i <= 3; ++i) {
    const double delta = desired_[i] - static_cast<double>(positions_[i]);
    const auto right_gap = positions_[i + 1] - positions_[i];
    const auto left_gap = positions_[i - 1] - positions_[i];
    if ((delta >= 1.0 && right_gap > 1) || (delta <= -1.0 && left_gap < -1)) {
      const int d = delta > 0 ? 1 : -1;
      const double candidate = parabolic(i, d);
      if (heights_[i - 1] < candidate && candidate < heights_[i + 1]) {
        heights_[i] = candidate;
      } else {
        heights_[i] = linear(i, d);
      }
      positions_[i] += d;
    }
  }
}

double QuantileSketch::parabolic(std::size_t i, int d) const {
  const double q0 = heights_[i - 1], q1 = heights_[i], q2 = heights_[i + 1];
  const auto n0 = static_cast<double>(positions_[i - 1]);
  const auto n1 = static_cast<double>(positions_[i]);
  const auto n2 = static_cast<double>(positions_[i + 1]);
  return q1 + d / (n2 - n0) *
                  ((n1 - n0 + d) * (q2 - q1) / (n2 - n1) + (n2 - n1 - d) * (q1 - q0) / (n1 - n0));
}

double QuantileSketch::linear(std::size_t i, int d) const {
  const std::size_t j = d > 0 ? i + 1 : i - 1;
  return heights_[i] + d * (heights_[j] - heights_[i]) /
                           static_cast<double>(positions_[j] - positions_[i]);
}

double QuantileSketch::query() const {
  if (count_ == 0) throw ColdStartError("quantile query on empty sketch");
  if (count_ <= kMarkers) {
    const double h = target_ * static_cast<double>(count_ - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min<std::size_t>(lo + 1, count_ - 1);
    return heights_[lo] + (h - static_cast<double>(lo)) * (heights_[hi] - heights_[lo]);
  }
  return heights_[2];
}

double QuantileSketch::min() const {
  if (count_ == 0) throw ColdStartError("min query on empty sketch");
  return heights_[0];
}

double QuantileSketch::max() const {
  if (count_ == 0) throw ColdStartError("max query on empty sketch");
  return heights_[std::min<std::uint64_t>(count_, kMarkers) - 1];
}

}  // namespace foresight
