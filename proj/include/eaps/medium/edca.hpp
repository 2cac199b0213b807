#pragma once

#include <array>
#include <cstdint>

#include "eaps/core/access_category.hpp"
#include "eaps/core/sim_time.hpp"

namespace eaps {

struct AcParams {
  int aifsn = 3;
  int cw_min = 15;
  int cw_max = 1023;
  Duration txop_limit_us = 0;  // 0: one frame per channel access
};

/// Per-AC contention parameters plus the slot/SIFS timing they refer to.
struct EdcaParams {
  std::array<AcParams, kNumAcs> per_ac{};  // indexed by index_of(ac)
  Duration slot_us = 9;
  Duration sifs_us = 16;
  int retry_limit = 7;

  /// 802.11n-typical defaults: AIFSN {VO 2, VI 2, BE 3, BK 7},
  /// CWmin {3, 7, 15, 15}, CWmax {7, 15, 1023, 1023}, TXOP VO 1504 us, VI 3008 us.
  static EdcaParams defaults();

  const AcParams& operator[](AccessCategory ac) const { return per_ac[index_of(ac)]; }
  AcParams& operator[](AccessCategory ac) { return per_ac[index_of(ac)]; }

  Duration aifs(AccessCategory ac) const { return sifs_us + (*this)[ac].aifsn * slot_us; }
  /// PIFS, used by the beacon queue.
  Duration pifs() const { return sifs_us + slot_us; }

  /// Throws std::invalid_argument when cw_min > cw_max, a CW is not 2^n-1,
  /// or the AIFS ordering VO <= VI <= BE <= BK is broken.
  void validate() const;
};

/// Single-rate PHY abstraction shared by every link.
struct PhyParams {
  double data_rate_bps = 144e6;
  double basic_rate_bps = 6e6;   // beacons
  double ack_rate_bps = 24e6;
  Duration preamble_us = 20;
  std::int64_t mac_header_bytes = 26;
  std::int64_t ack_bytes = 14;

  /// Preamble plus payload time of a frame carrying `size_bytes` of MSDU.
  Duration frame_airtime(std::int64_t size_bytes, double rate_bps) const;
  Duration frame_airtime(std::int64_t size_bytes) const { return frame_airtime(size_bytes, data_rate_bps); }
  /// Payload-only part of frame_airtime (no preamble), rounded up to 1 us.
  Duration payload_time(std::int64_t size_bytes, double rate_bps) const;
  Duration ack_airtime() const;
};

}  // namespace eaps
