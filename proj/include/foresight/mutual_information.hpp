#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace foresight {

// Plug-in MI (nats) of a sequence of (symbol, action) pairs.
double mutual_information(std::span<const std::pair<std::uint32_t, std::uint32_t>> samples);

// Streaming joint count table; memory is O(|S| * |A|), independent of
// stream length.
class ContingencyTable {
 public:
  void add(std::uint32_t x, std::uint32_t y);
  double mutual_information() const;
  // Same table with the roles of the two variables swapped.
  ContingencyTable transposed() const;

  std::uint64_t samples() const noexcept { return total_; }
  const std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t>& cells() const noexcept {
    return joint_;
  }

 private:
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> joint_;
  std::map<std::uint32_t, std::uint64_t> rows_;
  std::map<std::uint32_t, std::uint64_t> cols_;
  std::uint64_t total_ = 0;
};

struct MiEntry {
  std::string channel;
  double mi_nats = 0.0;
  std::uint64_t samples = 0;
};

// CSV with header "channel,mi_nats,samples".
std::string to_csv(std::span<const MiEntry> report);

}  // namespace foresight
