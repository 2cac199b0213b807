#include "eaps/core/packet.hpp"

#include <string>

namespace eaps {

std::optional<AccessCategory> parse_access_category(std::string_view text) {
  if (text == "VO" || text == "vo") return AccessCategory::VO;
  if (text == "VI" || text == "vi") return AccessCategory::VI;
  if (text == "BE" || text == "be") return AccessCategory::BE;
  if (text == "BK" || text == "bk") return AccessCategory::BK;
  return std::nullopt;
}

void Packet::stamp(Stamp which, SimTime when) {
  const auto idx = static_cast<std::size_t>(which);
  if (stamps_[idx]) {
    throw TimestampOrderError("packet " + std::to_string(id) + ": t" + std::to_string(idx + 1) +
                              " already recorded");
  }
  for (std::size_t i = 0; i < stamps_.size(); ++i) {
    if (!stamps_[i]) continue;
    if ((i < idx && *stamps_[i] > when) || (i > idx && *stamps_[i] < when)) {
      throw TimestampOrderError("packet " + std::to_string(id) + ": t" + std::to_string(idx + 1) +
                                "=" + std::to_string(when) + " breaks ordering with t" +
                                std::to_string(i + 1) + "=" + std::to_string(*stamps_[i]));
    }
  }
  stamps_[idx] = when;
}

const char* to_string(PacketKind kind) {
  switch (kind) {
    case PacketKind::data: return "data";
    case PacketKind::beacon: return "beacon";
    case PacketKind::null_trigger: return "null_trigger";
    case PacketKind::control: return "control";
    case PacketKind::ps_poll: return "ps_poll";
  }
  return "?";
}

}  // namespace eaps
