#include <cmath>

#include "doctest.h"
#include "eaps/station/energy.hpp"
#include "eaps/station/station.hpp"
#include "test_support.hpp"

using namespace eaps;
using test::MiniWorld;

TEST_CASE("energy meter integrates power over time") {
  EnergyMeter m(PowerStateTable{});
  CHECK(m.accumulate(PowerMode::sleep, 100 * kMillisecond) == doctest::Approx(150.0));
  CHECK(m.accumulate(PowerMode::tx, 0) == 0.0);
  CHECK_THROWS_AS(m.accumulate(PowerMode::idle, -1), std::invalid_argument);
  EnergyMeter n(PowerStateTable{});
  n.set_mode(PowerMode::sleep, 1000);  // 1 ms idle
  CHECK(n.total_uj(1000) == doctest::Approx(120.0));
  CHECK(n.total_uj(3000) == doctest::Approx(123.0));
  n.reclassify(PowerMode::sleep, PowerMode::idle, 500);
  CHECK(n.total_uj(3000) == doctest::Approx(123.0 + 0.5 * (120 - 1.5)));
}

TEST_CASE("power table ordering is enforced") {
  PowerStateTable t;
  CHECK_NOTHROW(t.validate());
  t.sleep_mw = 200;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t = PowerStateTable{};
  t.rx_mw = 100;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}

TEST_CASE("EAPS sleep offsets follow the variant rules") {
  const ControlPacket sched{0, 40, 2, 3};  // 42 ms predicted, sigma 3 ms
  CHECK(Station::eaps_sleep_us(sched, Discipline::EAPS_M, 2000) == 40000);
  CHECK(Station::eaps_sleep_us(sched, Discipline::EAPS_E, 2000) == 34000);
  CHECK(Station::eaps_sleep_us(sched, Discipline::EAPS_L, 2000) == 46000);
  const ControlPacket tight{0, 3, 2, 3};  // 5 ms predicted: 5 - 6 < elapsed
  CHECK(Station::eaps_sleep_us(tight, Discipline::EAPS_E, 1000) == 4000);
  CHECK(Station::eaps_sleep_us(ControlPacket{0, 0, 0, 1}, Discipline::EAPS_M, 500) < 0);
}

TEST_CASE("CAM stays awake and its duration is the round trip") {
  MiniWorld w(Discipline::CAM, 30 * kMillisecond);
  w.run(1, 0);
  REQUIRE(w.done.size() == 1);
  const auto& r = w.done[0];
  CHECK(r.completed);
  CHECK(r.duration_us >= 30 * kMillisecond);
  CHECK(r.duration_us < 31 * kMillisecond);
  // Closed form: idle for the whole window plus the downlink's receive overhead.
  const PowerStateTable p;
  const Duration air = w.channel.config().phy.frame_airtime(100);
  const double oracle = p.idle_mw * r.duration_us / 1000.0 + (p.rx_mw - p.idle_mw) * air / 1000.0;
  CHECK(r.energy_uj == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("PSM waits for the next beacon") {
  MiniWorld w(Discipline::PSM, 5 * kMillisecond);
  w.run(1, 0);
  REQUIRE(w.done.size() == 1);
  const auto& r = w.done[0];
  CHECK(r.completed);
  REQUIRE(r.retrieval_beacon.has_value());
  CHECK(*r.retrieval_beacon >= 102400);
  CHECK(r.t8.value() > 102400);
  CHECK(r.duration_us >= 102400 - r.t1);
}

TEST_CASE("APSM with a long round trip behaves like PSM but costs more") {
  MiniWorld psm(Discipline::PSM, 30 * kMillisecond);
  MiniWorld apsm(Discipline::APSM, 30 * kMillisecond);
  psm.run(1, 0);
  apsm.run(1, 0);
  REQUIRE(psm.done.size() == 1);
  REQUIRE(apsm.done.size() == 1);
  CHECK(std::abs(psm.done[0].duration_us - apsm.done[0].duration_us) < kMillisecond);
  CHECK(apsm.done[0].energy_uj > psm.done[0].energy_uj);
}

TEST_CASE("APSM with a short round trip matches CAM") {
  MiniWorld cam(Discipline::CAM, 3 * kMillisecond);
  MiniWorld apsm(Discipline::APSM, 3 * kMillisecond);
  cam.run(3, 50 * kMillisecond);
  apsm.run(3, 50 * kMillisecond);
  for (int i = 0; i < 3; ++i) CHECK(cam.done[i].duration_us == apsm.done[i].duration_us);
}

TEST_CASE("EAPS-M sleeps on schedule and saves energy against CAM") {
  MiniWorld cam(Discipline::CAM, 40 * kMillisecond);
  MiniWorld eaps(Discipline::EAPS_M, 40 * kMillisecond);
  eaps.schedule = ControlPacket{0, 40, 1, 1};
  cam.run(1, 0);
  eaps.run(1, 0);
  REQUIRE(eaps.done.size() == 1);
  const auto& r = eaps.done[0];
  CHECK(r.completed);
  REQUIRE(r.t2.has_value());
  REQUIRE(r.scheduled_wake.has_value());
  CHECK(*r.scheduled_wake - r.t1 == 41 * kMillisecond);
  CHECK(r.energy_uj < cam.done[0].energy_uj);

  // Closed-form integration of the EAPS timeline.
  const PowerStateTable p;
  const auto& phy = eaps.channel.config().phy;
  const Duration ctrl_air = phy.frame_airtime(4);
  const Duration trig_air = phy.frame_airtime(0);
  const Duration down_air = phy.frame_airtime(100);
  // The radio dozes only after acknowledging the schedule.
  const Duration ack = eaps.channel.config().edca.sifs_us + phy.ack_airtime();
  const Duration awake1 = *r.t2 + ack - r.t1;
  const Duration slept = *r.scheduled_wake - (*r.t2 + ack);
  const Duration awake2 = *r.t8 - *r.scheduled_wake;
  const double oracle = (p.idle_mw * (awake1 + awake2) + p.sleep_mw * slept +
                         (p.idle_mw - p.sleep_mw) * 2 * p.transition_us + (p.rx_mw - p.idle_mw) * (ctrl_air + down_air) +
                         (p.tx_mw - p.idle_mw) * trig_air) /
                        1000.0;
  CHECK(r.energy_uj == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("EAPS-L wakes after the downlink is buffered and fetches it at once") {
  MiniWorld w(Discipline::EAPS_L, 20 * kMillisecond);
  w.schedule = ControlPacket{0, 20, 0, 3};
  w.run(1, 0);
  REQUIRE(w.done.size() == 1);
  const auto& r = w.done[0];
  CHECK(r.completed);
  CHECK(*r.scheduled_wake - r.t1 == 26 * kMillisecond);
  CHECK(w.ready.at(0) < *r.scheduled_wake);
  CHECK(*r.t8 - *r.scheduled_wake < kMillisecond);
}

TEST_CASE("EAPS-E wakes early and waits for the downlink") {
  MiniWorld w(Discipline::EAPS_E, 20 * kMillisecond);
  w.schedule = ControlPacket{0, 20, 0, 3};
  w.run(1, 0);
  const auto& r = w.done.at(0);
  CHECK(r.completed);
  CHECK(*r.scheduled_wake - r.t1 == 14 * kMillisecond);
  CHECK(r.duration_us < 21 * kMillisecond);
}

TEST_CASE("zero schedule makes the station trigger immediately") {
  MiniWorld w(Discipline::EAPS_M, 5 * kMillisecond);
  w.schedule = ControlPacket{0, 0, 0, 1};
  w.run(1, 0);
  const auto& r = w.done.at(0);
  CHECK(r.completed);
  CHECK(*r.scheduled_wake == *r.t2);
  CHECK(r.duration_us < 6 * kMillisecond);
}

TEST_CASE("missing schedule falls back to PSM and is flagged") {
  MiniWorld w(Discipline::EAPS_M, 40 * kMillisecond);
  w.run(1, 0);
  const auto& r = w.done.at(0);
  CHECK(r.completed);
  CHECK((r.flags & txn_flags::control_timeout) != 0);
  CHECK(r.retrieval_beacon.has_value());
}

TEST_CASE("APSD polling retrieves on the first poll after arrival") {
  MiniWorld w(Discipline::APSD_POLL, 30 * kMillisecond);
  w.run(1, 0);
  const auto& r = w.done.at(0);
  CHECK(r.completed);
  CHECK(r.duration_us >= 40 * kMillisecond);
  CHECK(r.duration_us < 41 * kMillisecond);
}

TEST_CASE("scaling the power table scales every transaction's energy") {
  for (Discipline d : {Discipline::CAM, Discipline::PSM, Discipline::EAPS_M}) {
    MiniWorld a(d, 12 * kMillisecond);
    MiniWorld b(d, 12 * kMillisecond, PowerStateTable{}.scaled(2.5));
    a.schedule = b.schedule = ControlPacket{0, 12, 1, 1};
    a.run(4, 70 * kMillisecond);
    b.run(4, 70 * kMillisecond);
    REQUIRE(a.done.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(a.done[i].duration_us == b.done[i].duration_us);
      CHECK(b.done[i].energy_uj == doctest::Approx(2.5 * a.done[i].energy_uj).epsilon(1e-12));
    }
  }
}

TEST_CASE("a second transaction while one is pending is rejected") {
  MiniWorld w(Discipline::CAM, 5 * kMillisecond);
  w.station->start_transaction(1, AccessCategory::BE, 100);
  CHECK_THROWS_AS(w.station->start_transaction(2, AccessCategory::BE, 100), std::logic_error);
}

TEST_CASE("discipline names round-trip") {
  for (Discipline d : {Discipline::CAM, Discipline::PSM, Discipline::APSM, Discipline::APSD_POLL, Discipline::EAPS_E,
                       Discipline::EAPS_M, Discipline::EAPS_L}) {
    CHECK(parse_discipline(to_string(d)) == d);
  }
  CHECK_FALSE(parse_discipline("nope").has_value());
  CHECK(format_flags(txn_flags::timeout | txn_flags::degraded) == "timeout|degraded");
  CHECK(format_flags(0).empty());
}
