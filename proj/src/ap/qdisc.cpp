#include "eaps/ap/qdisc.hpp"

#include <algorithm>
#include <stdexcept>

namespace eaps {

double wired_tx_time_us(std::int64_t size_bytes, std::int64_t h_mac, std::int64_t h_phy, double rate_bps) {
  return 8.0 * static_cast<double>(size_bytes + h_mac + h_phy) * 1e6 / rate_bps;
}

double compute_delta_a_us(const std::vector<std::int64_t>& sizes, std::int64_t h_mac, std::int64_t h_phy,
                          double rate_bps) {
  if (!(rate_bps > 0)) throw std::invalid_argument("wired rate must be positive");
  double total = 0.0;
  for (std::int64_t s : sizes) total += wired_tx_time_us(s, h_mac, h_phy, rate_bps);
  return total;
}

PrioQdisc::PrioQdisc(std::size_t capacity_per_band) : capacity_(capacity_per_band) {
  if (capacity_ == 0) throw std::invalid_argument("qdisc band capacity must be positive");
}

std::size_t PrioQdisc::band_of(const Packet& p) {
  return p.kind == PacketKind::control ? kControlBand : band_of(p.ac);
}

bool PrioQdisc::enqueue(Packet p) {
  const std::size_t b = band_of(p);
  if (bands_[b].size() >= capacity_) {
    ++drops_[b];
    return false;
  }
  bands_[b].push_back(std::move(p));
  max_occupancy_[b] = std::max(max_occupancy_[b], bands_[b].size());
  return true;
}

bool PrioQdisc::empty() const {
  for (const auto& b : bands_) {
    if (!b.empty()) return false;
  }
  return true;
}

std::size_t PrioQdisc::head_band() const {
  for (std::size_t b = 0; b < kBands; ++b) {
    if (!bands_[b].empty()) return b;
  }
  return kBands;
}

const Packet* PrioQdisc::head() const {
  const std::size_t b = head_band();
  return b == kBands ? nullptr : &bands_[b].front();
}

Packet PrioQdisc::pop() {
  const std::size_t b = head_band();
  if (b == kBands) throw std::logic_error("pop from an empty qdisc");
  Packet p = std::move(bands_[b].front());
  bands_[b].pop_front();
  return p;
}

}  // namespace eaps
