#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <vector>

#include "eaps/core/packet.hpp"

namespace eaps {

/// Transmit time in microseconds of one packet on a wired link:
/// 8 * (size + mac header + phy header) / rate.
double wired_tx_time_us(std::int64_t size_bytes, std::int64_t h_mac, std::int64_t h_phy, double rate_bps);

/// Time needed to drain the given wired-egress backlog, in microseconds.
/// Throws std::invalid_argument if rate_bps <= 0.
double compute_delta_a_us(const std::vector<std::int64_t>& sizes, std::int64_t h_mac, std::int64_t h_phy,
                          double rate_bps);

/// Linux PRIO-style qdisc with five strict-priority FIFO bands:
/// control, VO, VI, BE, BK.
class PrioQdisc {
 public:
  static constexpr std::size_t kBands = 5;
  static constexpr std::size_t kControlBand = 0;

  explicit PrioQdisc(std::size_t capacity_per_band = 1000);

  static std::size_t band_of(const Packet& p);
  static std::size_t band_of(AccessCategory ac) { return 1 + priority_rank(ac); }

  /// Tail-drops (returns false) when the band is full.
  bool enqueue(Packet p);
  bool empty() const;
  /// Front of the highest-priority non-empty band, or nullptr.
  const Packet* head() const;
  std::size_t head_band() const;
  Packet pop();

  std::size_t occupancy(std::size_t band) const { return bands_.at(band).size(); }
  std::size_t occupancy(AccessCategory ac) const { return occupancy(band_of(ac)); }
  std::size_t max_occupancy(std::size_t band) const { return max_occupancy_.at(band); }
  std::uint64_t drops(std::size_t band) const { return drops_.at(band); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::array<std::deque<Packet>, kBands> bands_;
  std::array<std::size_t, kBands> max_occupancy_{};
  std::array<std::uint64_t, kBands> drops_{};
};

}  // namespace eaps
