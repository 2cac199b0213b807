#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "eaps/medium/channel.hpp"
#include "eaps/medium/interferer.hpp"
#include "test_support.hpp"

using namespace eaps;
using test::FifoSource;
using test::make_frame;

TEST_CASE("EDCA defaults validate and keep the AIFS order") {
  const EdcaParams p = EdcaParams::defaults();
  CHECK_NOTHROW(p.validate());
  CHECK(p[AccessCategory::VO].txop_limit_us == 1504);
  CHECK(p.aifs(AccessCategory::VO) == 34);
  CHECK(p.aifs(AccessCategory::BK) == 79);
  EdcaParams bad = p;
  bad[AccessCategory::BE].cw_min = 2047;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad[AccessCategory::VI].cw_min = 10;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("a 1400 byte frame at 54 Mbps takes about 207 us on air after AIFS") {
  Simulator sim;
  Rng rng(1);
  ChannelConfig cfg;
  cfg.phy.mac_header_bytes = 0;  // the frame size below already includes headers
  Channel ch(sim, rng, cfg);
  ch.force_backoff(0);
  FifoSource src;
  const auto id = ch.add_contender(1, AccessCategory::VO, &src, ContenderOptions{false, false, 54e6});
  src.q.push_back(make_frame(1, 1400, AccessCategory::VO));
  ch.notify(id);
  sim.run_until(kSecond);
  REQUIRE(src.delivered.size() == 1);
  REQUIRE(src.airtimes.size() == 1);
  CHECK(src.airtimes[0].first == cfg.edca.aifs(AccessCategory::VO));
  const Duration payload = src.airtimes[0].second - src.airtimes[0].first - cfg.phy.preamble_us;
  CHECK(std::abs(payload - 207) <= 5);
}

TEST_CASE("forced loss drops the frame after the retry limit") {
  Simulator sim;
  Rng rng(1);
  ChannelConfig cfg;
  cfg.loss_prob = 1.0;
  Channel ch(sim, rng, cfg);
  FifoSource src;
  const auto id = ch.add_contender(1, AccessCategory::BE, &src);
  src.q.push_back(make_frame(9, 500, AccessCategory::BE));
  ch.notify(id);
  sim.run_until(kSecond);
  CHECK(src.delivered.empty());
  REQUIRE(src.dropped.size() == 1);
  CHECK(src.dropped[0].retry_count == 7);
  CHECK(src.failed == 8);
  CHECK(ch.stats().drops == 1);
}

struct CwProbe : FifoSource {
  Channel* ch = nullptr;
  ContenderId id = 0;
  std::vector<int> cws;
  void on_tx_start(const Packet& f, SimTime s, SimTime e) override {
    cws.push_back(ch->current_cw(id));
    FifoSource::on_tx_start(f, s, e);
  }
};

TEST_CASE("contention window doubles per retry up to cw_max") {
  Simulator sim;
  Rng rng(2);
  ChannelConfig cfg;
  cfg.loss_prob = 1.0;
  Channel ch(sim, rng, cfg);
  CwProbe src;
  src.ch = &ch;
  src.id = ch.add_contender(1, AccessCategory::VO, &src);
  src.q.push_back(make_frame(1, 100, AccessCategory::VO));
  ch.notify(src.id);
  sim.run_until(kSecond);
  CHECK(src.cws == std::vector<int>{3, 7, 7, 7, 7, 7, 7, 7});
}

TEST_CASE("VO wins an internal collision with BK in the same slot") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Simulator sim;
    Rng rng(seed);
    ChannelConfig cfg;
    cfg.edca[AccessCategory::BK].aifsn = 2;  // same AIFS as VO to force a same-slot tie
    cfg.edca[AccessCategory::BE].aifsn = 2;
    Channel ch(sim, rng, cfg);
    ch.force_backoff(0);
    FifoSource vo, bk;
    const auto ivo = ch.add_contender(1, AccessCategory::VO, &vo);
    const auto ibk = ch.add_contender(1, AccessCategory::BK, &bk);
    bk.q.push_back(make_frame(1, 200, AccessCategory::BK));
    vo.q.push_back(make_frame(2, 200, AccessCategory::VO));
    ch.notify(ibk);
    ch.notify(ivo);
    sim.run_until(kSecond);
    REQUIRE(vo.delivered.size() == 1);
    REQUIRE(bk.delivered.size() == 1);
    CHECK(vo.delivered[0].second < bk.delivered[0].second);
    CHECK(ch.stats().internal_collisions == 1);
    CHECK(ch.stats().collisions == 0);
  }
}

TEST_CASE("VO precedes BK with default parameters in every seed") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Simulator sim;
    Rng rng(seed);
    Channel ch(sim, rng, ChannelConfig{});
    FifoSource vo, bk;
    const auto ibk = ch.add_contender(1, AccessCategory::BK, &bk);
    const auto ivo = ch.add_contender(1, AccessCategory::VO, &vo);
    bk.q.push_back(make_frame(1, 200, AccessCategory::BK));
    vo.q.push_back(make_frame(2, 200, AccessCategory::VO));
    ch.notify(ibk);
    ch.notify(ivo);
    sim.run_until(kSecond);
    REQUIRE(vo.delivered.size() == 1);
    REQUIRE(bk.delivered.size() == 1);
    CHECK(vo.delivered[0].second < bk.delivered[0].second);
  }
}

TEST_CASE("saturated VO gets more grants than saturated BK") {
  Simulator sim;
  Rng rng(5);
  Channel ch(sim, rng, ChannelConfig{});
  FifoSource vo, bk;
  const auto ivo = ch.add_contender(1, AccessCategory::VO, &vo);
  const auto ibk = ch.add_contender(2, AccessCategory::BK, &bk);
  for (int i = 0; i < 3000; ++i) {
    vo.q.push_back(make_frame(static_cast<PacketId>(i), 1000, AccessCategory::VO));
    bk.q.push_back(make_frame(static_cast<PacketId>(100000 + i), 1000, AccessCategory::BK));
  }
  ch.notify(ivo);
  ch.notify(ibk);
  sim.run_until(200 * kMillisecond);
  CHECK(ch.grants(ivo) > ch.grants(ibk));
  CHECK(ch.grants(ivo) > 100);
}

TEST_CASE("airtime never overlaps and accounting closes") {
  Simulator sim;
  Rng rng(11);
  Channel ch(sim, rng, ChannelConfig{});
  InterfererProfile prof;
  prof.airtime_fraction = 0.2;
  prof.excursion_db = 10;
  Interferer intf(sim, ch, rng.derive("interferer", 0), prof);
  std::vector<FifoSource> srcs(4);
  std::vector<ContenderId> ids;
  PacketId next = 0;
  for (std::size_t i = 0; i < srcs.size(); ++i) {
    ids.push_back(ch.add_contender(static_cast<NodeId>(i + 1), kAcsByPriority[i], &srcs[i]));
  }
  for (int burst = 0; burst < 200; ++burst) {
    sim.schedule_at(burst * 5 * kMillisecond, "load", [&, burst] {
      for (std::size_t i = 0; i < srcs.size(); ++i) {
        srcs[i].q.push_back(make_frame(next++, 300 + 100 * burst % 1200, kAcsByPriority[i]));
        ch.notify(ids[i]);
      }
    });
  }
  intf.start();
  sim.run_until(kSecond);
  std::vector<std::pair<SimTime, SimTime>> all;
  for (const auto& s : srcs) all.insert(all.end(), s.airtimes.begin(), s.airtimes.end());
  std::sort(all.begin(), all.end());
  // Collisions put two frames on air at once; exclude exact-start duplicates.
  std::size_t overlaps = 0;
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].first < all[i - 1].second && all[i].first != all[i - 1].first) ++overlaps;
  }
  CHECK(overlaps == 0);
  CHECK(ch.total_busy() == ch.stats().granted_airtime_us + ch.stats().interferer_busy_us);
  CHECK(ch.busy_between(0, kSecond) == ch.total_busy());
}

TEST_CASE("utilization is quantized to whole milliseconds") {
  CHECK(quantized_utilization(0, 10 * kMillisecond) == 0.0);
  CHECK(quantized_utilization(10 * kMillisecond, 10 * kMillisecond) == 100.0);
  CHECK(quantized_utilization(4200, 10 * kMillisecond) == 40.0);
  CHECK(quantized_utilization(9999, 10 * kMillisecond) == 90.0);
  CHECK_THROWS_AS(quantized_utilization(10, 0), std::invalid_argument);
}

TEST_CASE("busy meter sums partial windows") {
  BusyMeter m;
  m.add(0, 100);
  m.add(200, 300);
  CHECK(m.busy_between(50, 250) == 100);
  CHECK(m.busy_between(0, 1000) == 200);
  CHECK(m.busy_between(300, 1000) == 0);
  CHECK_THROWS_AS(m.add(250, 400), std::logic_error);
  m.prune(150);
  CHECK(m.busy_between(200, 250) == 50);
  CHECK(m.busy_between(150, 1000) == 100);
  CHECK(m.total() == 200);
}

TEST_CASE("interferer alone reaches its airtime target") {
  Simulator sim;
  Rng rng(3);
  Channel ch(sim, rng, ChannelConfig{});
  InterfererProfile prof;
  prof.airtime_fraction = 0.5;
  prof.excursion_db = 40;
  Interferer intf(sim, ch, rng.derive("interferer", 0), prof);
  intf.start();
  double max_noise = -200;
  for (int i = 1; i <= 2000; ++i) {
    sim.schedule_at(i * 5 * kMillisecond + 1, "probe", [&] { max_noise = std::max(max_noise, ch.noise_dbm()); });
  }
  const SimTime horizon = 20 * kSecond;
  sim.run_until(horizon);
  const double frac = static_cast<double>(ch.busy_between(horizon - 2 * kSecond, horizon)) / (2.0 * kSecond);
  const double whole = static_cast<double>(ch.stats().interferer_busy_us) / static_cast<double>(horizon);
  CHECK(whole == doctest::Approx(0.5).epsilon(0.1));
  CHECK(frac > 0.3);
  CHECK(max_noise <= -66.0);
  CHECK(max_noise == -66.0);  // a 40 dB excursion saturates at the ceiling
}

TEST_CASE("silent interferer leaves noise at the floor") {
  Simulator sim;
  Rng rng(3);
  Channel ch(sim, rng, ChannelConfig{});
  Interferer intf(sim, ch, rng.derive("interferer", 0), InterfererProfile{});
  intf.start();
  sim.run_until(kSecond);
  CHECK(ch.noise_dbm() == -95.0);
  CHECK(ch.total_busy() == 0);
  InterfererProfile bad;
  bad.airtime_fraction = 1.0;
  CHECK_THROWS_AS(Interferer(sim, ch, rng.derive("i", 1), bad), std::invalid_argument);
}

TEST_CASE("backoff draws are uniform over the window") {
  RandomStream s(99);
  std::vector<int> counts(16, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(s.uniform_int(0, 15))];
  double chi2 = 0;
  const double expected = n / 16.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 37.7);  // 15 dof, p = 0.001
}
