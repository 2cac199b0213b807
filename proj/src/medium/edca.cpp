#include "eaps/medium/edca.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace eaps {

namespace {

bool is_pow2_minus_one(int v) { return v >= 0 && ((v + 1) & v) == 0; }

}  // namespace

EdcaParams EdcaParams::defaults() {
  EdcaParams p;
  p[AccessCategory::VO] = AcParams{2, 3, 7, 1504};
  p[AccessCategory::VI] = AcParams{2, 7, 15, 3008};
  p[AccessCategory::BE] = AcParams{3, 15, 1023, 0};
  p[AccessCategory::BK] = AcParams{7, 15, 1023, 0};
  return p;
}

void EdcaParams::validate() const {
  for (AccessCategory ac : kAcsByPriority) {
    const AcParams& p = (*this)[ac];
    const std::string name(to_string(ac));
    if (p.cw_min > p.cw_max) throw std::invalid_argument("edca " + name + ": cw_min > cw_max");
    if (!is_pow2_minus_one(p.cw_min) || !is_pow2_minus_one(p.cw_max)) {
      throw std::invalid_argument("edca " + name + ": contention windows must be 2^n - 1");
    }
    if (p.aifsn < 1) throw std::invalid_argument("edca " + name + ": aifsn must be >= 1");
    if (p.txop_limit_us < 0) throw std::invalid_argument("edca " + name + ": negative txop");
  }
  if (!(aifs(AccessCategory::VO) <= aifs(AccessCategory::VI) &&
        aifs(AccessCategory::VI) <= aifs(AccessCategory::BE) &&
        aifs(AccessCategory::BE) <= aifs(AccessCategory::BK))) {
    throw std::invalid_argument("edca: AIFS must be non-decreasing from VO to BK");
  }
  if (slot_us <= 0 || sifs_us <= 0) throw std::invalid_argument("edca: slot and SIFS must be positive");
  if (retry_limit < 0) throw std::invalid_argument("edca: negative retry limit");
}

Duration PhyParams::payload_time(std::int64_t size_bytes, double rate_bps) const {
  const double bits = 8.0 * static_cast<double>(size_bytes + mac_header_bytes);
  return static_cast<Duration>(std::ceil(bits * 1e6 / rate_bps - 1e-9));
}

Duration PhyParams::frame_airtime(std::int64_t size_bytes, double rate_bps) const {
  return preamble_us + payload_time(size_bytes, rate_bps);
}

Duration PhyParams::ack_airtime() const {
  return preamble_us + static_cast<Duration>(std::ceil(8.0 * static_cast<double>(ack_bytes) * 1e6 / ack_rate_bps));
}

}  // namespace eaps
