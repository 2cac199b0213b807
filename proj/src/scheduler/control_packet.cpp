#include "eaps/scheduler/control_packet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace eaps {

std::uint8_t quantize_ms(double ms, bool* clamped) {
  const double r = std::floor(ms + 0.5);
  if (!(r > 0)) return 0;  // negatives and NaN
  if (r >= 255) {
    if (clamped) *clamped = true;
    return 255;
  }
  return static_cast<std::uint8_t>(r);
}

ControlPacket ControlPacket::from_us(double da_us, double db_us, double dc_us, double sigma_us, bool* clamped) {
  bool hit = false;
  ControlPacket c;
  c.da_ms = quantize_ms(da_us / 1000.0, &hit);
  c.db_ms = quantize_ms(db_us / 1000.0, &hit);
  c.dc_ms = quantize_ms(dc_us / 1000.0, &hit);
  c.sigma_ms = std::max<std::uint8_t>(1, quantize_ms(sigma_us / 1000.0, &hit));
  if (clamped) *clamped = hit;
  return c;
}

std::array<std::uint8_t, ControlPacket::kPayloadBytes> encode(const ControlPacket& c) {
  return {c.da_ms, c.db_ms, c.dc_ms, c.sigma_ms};
}

std::vector<std::uint8_t> encode_payload(const ControlPacket& c) {
  const auto a = encode(c);
  return {a.begin(), a.end()};
}

ControlPacket decode(const std::uint8_t* data, std::size_t size) {
  if (size != ControlPacket::kPayloadBytes) {
    throw MalformedPacket("control payload must be 4 bytes, got " + std::to_string(size));
  }
  if (data == nullptr) throw MalformedPacket("control payload is null");
  return ControlPacket{data[0], data[1], data[2], data[3]};
}

ControlPacket decode(const std::vector<std::uint8_t>& payload) { return decode(payload.data(), payload.size()); }

}  // namespace eaps
