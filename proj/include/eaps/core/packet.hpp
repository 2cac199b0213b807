#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "eaps/core/access_category.hpp"
#include "eaps/core/sim_time.hpp"

namespace eaps {

using NodeId = std::uint32_t;
using PacketId = std::uint64_t;

inline constexpr NodeId kApNode = 0;
/// Destination used for frames that leave the AP through the wired port.
inline constexpr NodeId kWiredNode = 0xFFFFFFFFu;
inline constexpr NodeId kBroadcast = 0xFFFFFFFEu;

enum class Direction : std::uint8_t { uplink, downlink };
enum class PacketKind : std::uint8_t { data, beacon, null_trigger, control, ps_poll };

/// Lifecycle stamps t1..t8 of a transaction's packets.
enum class Stamp : std::uint8_t { t1 = 0, t2, t3, t4, t5, t6, t7, t8 };

class TimestampOrderError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class Packet {
 public:
  PacketId id = 0;
  std::int64_t size_bytes = 0;
  AccessCategory ac = AccessCategory::BE;
  Direction direction = Direction::downlink;
  PacketKind kind = PacketKind::data;
  NodeId src = kApNode;
  NodeId dst = kApNode;
  int retry_count = 0;
  /// Transaction this packet belongs to, if any (IoT request/response traffic).
  std::optional<std::uint64_t> txn;
  /// Set by the AP when a PS-Poll or trigger released the frame from the
  /// power-save buffer; such frames may be sent to a dozing station.
  bool ps_release = false;
  /// Power-management bit carried by station frames: true = station dozes after this frame.
  bool pm_doze = false;
  std::vector<std::uint8_t> payload;

  /// Records `when` for `stamp`. A stamp is write-once and must keep the
  /// recorded subset ordered t1 <= t2 <= ... <= t8.
  void stamp(Stamp which, SimTime when);
  std::optional<SimTime> at(Stamp which) const { return stamps_[static_cast<std::size_t>(which)]; }
  bool has(Stamp which) const { return at(which).has_value(); }

 private:
  std::array<std::optional<SimTime>, 8> stamps_{};
};

const char* to_string(PacketKind kind);

}  // namespace eaps
