#include "foresight/mutual_information.hpp"

#include <cmath>

#include "foresight/action_space.hpp"

namespace foresight {

void ContingencyTable::add(std::uint32_t x, std::uint32_t y) {
  ++joint_[{x, y}];
  ++rows_[x];
  ++cols_[y];
  ++total_;
}

double ContingencyTable::mutual_information() const {
  if (total_ == 0) return 0.0;
  const double n = static_cast<double>(total_);
  double mi = 0.0;
  for (const auto& [cell, count] : joint_) {
    const double c = static_cast<double>(count);
    const double rx = static_cast<double>(rows_.at(cell.first));
    const double cy = static_cast<double>(cols_.at(cell.second));
    // p(x,y) log p(x,y) / (p(x) p(y)) with counts: c/n * log(c n / (rx cy))
    mi += c / n * std::log(c * n / (rx * cy));
  }
  return std::max(mi, 0.0);
}

ContingencyTable ContingencyTable::transposed() const {
  ContingencyTable t;
  for (const auto& [cell, count] : joint_) {
    t.joint_[{cell.second, cell.first}] = count;
    t.rows_[cell.second] += count;
    t.cols_[cell.first] += count;
  }
  t.total_ = total_;
  return t;
}

double mutual_information(std::span<const std::pair<std::uint32_t, std::uint32_t>> samples) {
  ContingencyTable table;
  for (const auto& [x, y] : samples) table.add(x, y);
  return table.mutual_information();
}

std::string to_csv(std::span<const MiEntry> report) {
  std::string out = "channel,mi_nats,samples\n";
  for (const auto& e : report) {
    out += e.channel;
    out += ',';
    out += format_number(e.mi_nats);
    out += ',';
    out += std::to_string(e.samples);
    out += '\n';
  }
  return out;
}

}  // namespace foresight
