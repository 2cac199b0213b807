#include <cmath>
#include <map>
#include <sstream>

#include "doctest.h"
#include "eaps/traffic/bursts.hpp"
#include "eaps/traffic/flow.hpp"
#include "eaps/traffic/trace_io.hpp"

using namespace eaps;

namespace {

std::vector<TraceRecord> at_ms(std::initializer_list<double> times, std::int64_t size = 100) {
  std::vector<TraceRecord> t;
  for (double ms : times) t.push_back(TraceRecord{from_ms(ms), size, Direction::downlink, AccessCategory::BE, -1});
  return t;
}

Burst make_burst(double d, double s, double p, double gap, std::array<double, 4> ac = {0, 0, 1, 0}) {
  Burst b;
  b.duration_s = d;
  b.size_bytes = s;
  b.packets = p;
  b.gap_s = gap;
  b.per_ac = ac;
  return b;
}

}  // namespace

TEST_CASE("segmentation splits at the threshold") {
  const auto bursts = segment_bursts(at_ms({0, 1, 2, 50, 51}), 10 * kMillisecond);
  REQUIRE(bursts.size() == 2);
  CHECK(bursts[0].packets == 3);
  CHECK(bursts[1].packets == 2);
  CHECK(bursts[0].gap_s == doctest::Approx(0.048));
  CHECK(bursts[1].gap_s == 0.0);
  CHECK(bursts[0].duration_s == doctest::Approx(0.002));
}

TEST_CASE("gaps at or above the threshold isolate every packet") {
  CHECK(segment_bursts(at_ms({0, 10, 20, 35}), 10 * kMillisecond).size() == 4);
  CHECK(segment_bursts({}, 10 * kMillisecond).empty());
}

TEST_CASE("packets every half threshold form one burst") {
  std::vector<TraceRecord> t;
  for (int i = 0; i < 100; ++i) t.push_back(TraceRecord{i * 5 * kMillisecond, 10, Direction::uplink, AccessCategory::VO, 0});
  const auto b = segment_bursts(t, 10 * kMillisecond);
  REQUIRE(b.size() == 1);
  CHECK(b[0].start == 0);
  CHECK(b[0].end == 495 * kMillisecond);
}

TEST_CASE("segmentation is a partition of the trace") {
  TrafficConfig c;
  const auto t = generate_trace(c, 3, 5 * kSecond);
  const auto bursts = segment_bursts(t, 20 * kMillisecond);
  double packets = 0, bytes = 0, total_bytes = 0;
  for (const auto& b : bursts) {
    packets += b.packets;
    bytes += b.size_bytes;
  }
  for (const auto& r : t) total_bytes += static_cast<double>(r.size_bytes);
  CHECK(packets == static_cast<double>(t.size()));
  CHECK(bytes == total_bytes);
  for (std::size_t i = 1; i < bursts.size(); ++i) {
    CHECK(bursts[i].start - bursts[i - 1].end >= 20 * kMillisecond);
  }
}

TEST_CASE("unsorted traces and bad thresholds are rejected") {
  CHECK_THROWS_AS(segment_bursts(at_ms({5, 1}), 10), MetricError);
  CHECK_THROWS_AS(segment_bursts(at_ms({1}), 0), MetricError);
}

TEST_CASE("burstiness worked examples") {
  std::vector<Burst> four(4, make_burst(0.1, 1000, 1, 0.4));
  const auto r = burstiness(four, 2.0);
  CHECK(r.bursts_per_second == 2.0);
  CHECK(r.value == doctest::Approx(500.0));
  CHECK(burstiness(std::vector<Burst>(2, make_burst(0, 800, 1, 1)), 2.0).value == 0.0);
  // Fewer than one burst per second clamps the rate factor at zero.
  CHECK(burstiness(std::vector<Burst>(1, make_burst(0, 800, 1, 1)), 10.0).value == 0.0);
  std::vector<Burst> doubled = four;
  for (auto& b : doubled) b.size_bytes *= 2;
  CHECK(burstiness(doubled, 2.0).value == doctest::Approx(2 * r.value));
  CHECK_THROWS_AS(burstiness(four, 0.0), MetricError);
}

TEST_CASE("dynamicity worked examples") {
  const std::vector<Burst> two = {make_burst(1, 1000, 10, 1), make_burst(2, 1500, 10, 0)};
  CHECK(dynamicity(two) == doctest::Approx(0.75));
  CHECK(dynamicity(std::vector<Burst>(5, make_burst(0.2, 700, 7, 0.3))) == 0.0);
  std::vector<Burst> halved = two;
  halved[0].gap_s = 0.5;
  CHECK(dynamicity(halved) == doctest::Approx(1.5));
}

TEST_CASE("dynamicity floors zero denominators") {
  // Singleton bursts have zero duration: a change to 3 ms counts as 3 ms / 1 ms.
  const std::vector<Burst> b = {make_burst(0, 100, 1, 1, {0, 0, 0, 0}), make_burst(0.003, 100, 1, 0, {1, 0, 0, 0})};
  CHECK(dynamicity(b) == doctest::Approx((3.0 + 1.0) / 2));
  const std::vector<Burst> zero_gap = {make_burst(1, 100, 1, 0), make_burst(2, 100, 1, 0)};
  CHECK(dynamicity(zero_gap) == doctest::Approx(1.0 / 1e-6 / 2));
}

TEST_CASE("metrics are invariant under time translation") {
  TrafficConfig c;
  auto t = generate_trace(c, 9, 3 * kSecond);
  const auto a = trace_metrics(t, 100 * kMillisecond);
  for (auto& r : t) r.timestamp_us += 123456789;
  const auto b = trace_metrics(t, 100 * kMillisecond);
  CHECK(a.burstiness == b.burstiness);
  CHECK(a.dynamicity == b.dynamicity);
  CHECK(a.bursts == b.bursts);
}

TEST_CASE("generation is a pure function of config and seed") {
  TrafficConfig c;
  CHECK(generate_trace(c, 42, 2 * kSecond) == generate_trace(c, 42, 2 * kSecond));
  CHECK(generate_trace(c, 42, 2 * kSecond) != generate_trace(c, 43, 2 * kSecond));
  CHECK(generate_trace(c, 42, 0).empty());
  const auto t = generate_trace(c, 1, 4 * kSecond);
  for (std::size_t i = 1; i < t.size(); ++i) REQUIRE(t[i - 1].timestamp_us <= t[i].timestamp_us);
  for (const auto& r : t) REQUIRE(r.timestamp_us < 4 * kSecond);
}

TEST_CASE("zero variability repeats the first burst forever") {
  TrafficConfig c;
  c.variability = 0.0;
  TrafficGenerator g(c, 5);
  g.record_bursts(true);
  while (g.next(20 * kSecond)) {}
  CHECK(g.redraws() == 0);
  std::map<int, FlowSpec> first;
  for (const auto& b : g.bursts()) {
    auto [it, fresh] = first.emplace(b.flow, b.spec);
    if (!fresh) REQUIRE(it->second == b.spec);
  }
  CHECK(first.size() == 16);
}

TEST_CASE("full variability redraws after every burst") {
  TrafficConfig c;
  c.variability = 1.0;
  TrafficGenerator g(c, 5);
  g.record_bursts(true);
  while (g.next(20 * kSecond)) {}
  std::map<int, int> per_flow;
  for (const auto& b : g.bursts()) ++per_flow[b.flow];
  std::uint64_t expected = 0;
  for (const auto& [f, n] : per_flow) expected += static_cast<std::uint64_t>(n - 1);
  // A flow may finish a burst and redraw before its next burst starts inside the horizon.
  CHECK(g.redraws() >= expected);
  CHECK(g.redraws() <= expected + per_flow.size());
}

TEST_CASE("real-time classes use UDP, the rest the paced transport") {
  RandomStream rs(7);
  for (int i = 0; i < 500; ++i) {
    const FlowSpec s = draw_flow_spec(rs, FlowRanges{});
    CHECK_NOTHROW(s.validate());
    const bool realtime = s.ac == AccessCategory::VO || s.ac == AccessCategory::VI;
    CHECK((s.transport == Transport::udp) == realtime);
    CHECK(s.packet_bytes >= 64);
    CHECK(s.packet_bytes <= 1460);
    CHECK(s.bit_rate_bps >= 0.1e6);
    CHECK(s.bit_rate_bps <= 20e6);
  }
}

TEST_CASE("HD traces are more dynamic than ND traces") {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    TrafficConfig nd, hd;
    nd.variability = variability_for(DynamicityLevel::ND);
    hd.variability = variability_for(DynamicityLevel::HD);
    const double d_nd = trace_metrics(generate_trace(nd, seed, 60 * kSecond), 100 * kMillisecond).dynamicity;
    const double d_hd = trace_metrics(generate_trace(hd, seed, 60 * kSecond), 100 * kMillisecond).dynamicity;
    if (d_hd > d_nd) ++wins;
  }
  // One-sided sign test at the 1% level needs at least 16 of 20.
  CHECK(wins >= 16);
}

TEST_CASE("trace CSV round-trips and reports bad lines") {
  TrafficConfig c;
  auto t = generate_trace(c, 2, kSecond);
  std::stringstream ss;
  write_trace_csv(ss, t);
  const auto back = read_trace_csv(ss);
  REQUIRE(back.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(back[i].timestamp_us == t[i].timestamp_us);
    CHECK(back[i].size_bytes == t[i].size_bytes);
    CHECK(back[i].direction == t[i].direction);
    CHECK(back[i].ac == t[i].ac);
  }
  std::stringstream bad("timestamp_us,size_bytes,direction,ac\n0,10,uplink,VO\nx,10,uplink,VO\n5,10,sideways,VO\n3,1,uplink,VO\n");
  try {
    read_trace_csv(bad);
    FAIL("expected a parse error");
  } catch (const TraceParseError& e) {
    CHECK(e.lines() == std::vector<std::size_t>{3, 4});
    CHECK(std::string(e.what()).find("3, 4") != std::string::npos);
  }
  std::stringstream unsorted("timestamp_us,size_bytes,direction,ac\n10,10,uplink,VO\n3,10,uplink,VO\n");
  CHECK_THROWS_AS(read_trace_csv(unsorted), TraceParseError);
}

TEST_CASE("trace CSV keeps flow ids when asked") {
  TrafficConfig c;
  auto t = generate_trace(c, 3, kSecond);
  std::stringstream with;
  write_trace_csv(with, t, true);
  const auto back = read_trace_csv(with);
  REQUIRE(back == t);
  std::stringstream without;
  write_trace_csv(without, t);
  for (const auto& r : read_trace_csv(without)) CHECK(r.flow == -1);
  std::stringstream bad("timestamp_us,size_bytes,direction,ac,flow\n0,10,uplink,VO,x\n1,10,uplink,VO,2\n");
  CHECK_THROWS_AS(read_trace_csv(bad), TraceParseError);
}
