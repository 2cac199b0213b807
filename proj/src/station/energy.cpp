#include "eaps/station/energy.hpp"

#include <stdexcept>

namespace eaps {

double PowerStateTable::power_mw(PowerMode m) const {
  switch (m) {
    case PowerMode::sleep: return sleep_mw;
    case PowerMode::idle: return idle_mw;
    case PowerMode::rx: return rx_mw;
    case PowerMode::tx: return tx_mw;
  }
  return 0.0;
}

void PowerStateTable::validate() const {
  if (!(sleep_mw >= 0 && sleep_mw < idle_mw && idle_mw <= rx_mw && rx_mw <= tx_mw)) {
    throw std::invalid_argument("power table must satisfy 0 <= sleep < idle <= rx <= tx");
  }
  if (transition_us < 0) throw std::invalid_argument("transition latency must be >= 0");
}

PowerStateTable PowerStateTable::scaled(double c) const {
  PowerStateTable t = *this;
  t.sleep_mw *= c;
  t.idle_mw *= c;
  t.rx_mw *= c;
  t.tx_mw *= c;
  return t;
}

EnergyMeter::EnergyMeter(PowerStateTable table) : table_(table) { table_.validate(); }

double EnergyMeter::accumulate(PowerMode mode, Duration duration_us) {
  if (duration_us < 0) throw std::invalid_argument("negative duration");
  const double uj = table_.power_mw(mode) * static_cast<double>(duration_us) / 1000.0;
  billed_uj_ += uj;
  time_in_[static_cast<std::size_t>(mode)] += duration_us;
  return uj;
}

void EnergyMeter::set_mode(PowerMode mode, SimTime now) {
  if (now < since_) throw std::logic_error("energy meter clock moved backwards");
  accumulate(mode_, now - since_);
  mode_ = mode;
  since_ = now;
}

void EnergyMeter::reclassify(PowerMode from, PowerMode to, Duration duration_us) {
  if (duration_us <= 0) return;
  billed_uj_ += (table_.power_mw(to) - table_.power_mw(from)) * static_cast<double>(duration_us) / 1000.0;
  time_in_[static_cast<std::size_t>(from)] -= duration_us;
  time_in_[static_cast<std::size_t>(to)] += duration_us;
}

double EnergyMeter::total_uj(SimTime now) const {
  return billed_uj_ + table_.power_mw(mode_) * static_cast<double>(now - since_) / 1000.0;
}

}  // namespace eaps
