#pragma once

#include <array>
#include <cstdint>

namespace foresight {

// Streaming estimator of a single quantile using the P-square algorithm
// (Jain & Chlamtac, 1985). Five markers, O(1) memory and update.
//
// Until five observations have arrived the markers hold the sorted samples
// and queries are exact.
class QuantileSketch {
 public:
  static constexpr std::size_t kMarkers = 5;

  explicit QuantileSketch(double target = 0.5);

  // Rebuild a sketch from persisted marker state. Throws ValidationError if
  // heights decrease or positions are inconsistent with count.
  static QuantileSketch from_state(double target, std::uint64_t count,
                                   const std::array<double, kMarkers>& heights,
                                   const std::array<std::int64_t, kMarkers>& positions,
                                   const std::array<double, kMarkers>& desired);

  void update(double v);

  // Throws ColdStartError when empty.
  double query() const;
  double min() const;
  double max() const;

  double target() const noexcept { return target_; }
  std::uint64_t count() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }

  const std::array<double, kMarkers>& heights() const noexcept { return heights_; }
  const std::array<std::int64_t, kMarkers>& positions() const noexcept { return positions_; }
  const std::array<double, kMarkers>& desired() const noexcept { return desired_; }

  friend bool operator==(const QuantileSketch&, const QuantileSketch&) = default;

 private:
  double parabolic(std::size_t i, int d) const;
  double linear(std::size_t i, int d) const;

  double target_;
  std::uint64_t count_ = 0;
  std::array<double, kMarkers> heights_{};
  std::array<std::int64_t, kMarkers> positions_{};
  std::array<double, kMarkers> desired_{};
  std::array<double, kMarkers> increments_{};
};

}  // namespace foresight
