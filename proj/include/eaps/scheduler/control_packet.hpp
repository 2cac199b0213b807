#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "eaps/core/sim_time.hpp"

namespace eaps {

class MalformedPacket : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sleep schedule sent to a station: four one-byte millisecond fields.
struct ControlPacket {
  std::uint8_t da_ms = 0;
  std::uint8_t db_ms = 0;
  std::uint8_t dc_ms = 0;
  std::uint8_t sigma_ms = 0;

  static constexpr std::size_t kPayloadBytes = 4;

  /// Quantizes microsecond values: half-up rounding to whole ms, clamped to
  /// [0, 255]; sigma is raised to at least 1 ms. `clamped` reports whether
  /// any field hit 255.
  static ControlPacket from_us(double da_us, double db_us, double dc_us, double sigma_us, bool* clamped = nullptr);

  /// Predicted wake offset from the uplink, da + db + dc, in microseconds.
  Duration predicted_total_us() const { return (Duration(da_ms) + db_ms + dc_ms) * kMillisecond; }
  Duration sigma_us() const { return Duration(sigma_ms) * kMillisecond; }

  bool operator==(const ControlPacket&) const = default;
};

/// Half-up rounding of a millisecond value into one byte.
std::uint8_t quantize_ms(double ms, bool* clamped = nullptr);

std::array<std::uint8_t, ControlPacket::kPayloadBytes> encode(const ControlPacket& c);
std::vector<std::uint8_t> encode_payload(const ControlPacket& c);
/// Throws MalformedPacket unless the payload is exactly 4 bytes.
ControlPacket decode(const std::vector<std::uint8_t>& payload);
ControlPacket decode(const std::uint8_t* data, std::size_t size);

}  // namespace eaps
