#include "eaps/medium/interferer.hpp"

#include <cmath>
#include <stdexcept>

namespace eaps {

void InterfererProfile::validate() const {
  if (airtime_fraction < 0.0 || airtime_fraction >= 1.0) {
    throw std::invalid_argument("interferer airtime fraction must be in [0, 1)");
  }
  if (mean_on_us <= 0) throw std::invalid_argument("interferer mean on period must be positive");
  if (excursion_db < 0) throw std::invalid_argument("interferer noise excursion must be >= 0");
}

Duration InterfererProfile::mean_off_us() const {
  if (airtime_fraction <= 0) return 0;
  return static_cast<Duration>(std::llround(static_cast<double>(mean_on_us) * (1.0 - airtime_fraction) /
                                            airtime_fraction));
}

Interferer::Interferer(Simulator& sim, Channel& channel, RandomStream stream, InterfererProfile profile)
    : sim_(sim), channel_(channel), stream_(stream), profile_(profile) {
  profile_.validate();
}

void Interferer::start() {
  if (profile_.airtime_fraction <= 0) return;
  schedule_next_on();
}

void Interferer::schedule_next_on() {
  const auto off = static_cast<Duration>(stream_.exponential(static_cast<double>(profile_.mean_off_us())));
  sim_.schedule_in(off, "interferer.on", [this] { step(); });
}

bool Interferer::step() {
  if (!on_) {
    on_ = true;
    requested_on_us_ = std::max<Duration>(1, static_cast<Duration>(stream_.exponential(static_cast<double>(profile_.mean_on_us))));
    channel_.interferer_burst(requested_on_us_, profile_.excursion_db, [this](SimTime) { step(); });
  } else {
    on_ = false;
    schedule_next_on();
  }
  return on_;
}

}  // namespace eaps
