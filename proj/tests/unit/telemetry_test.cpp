#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "eaps/telemetry/collector.hpp"
#include "eaps/telemetry/dataset.hpp"
#include "test_support.hpp"

using namespace eaps;

namespace {

struct Net {
  Simulator sim;
  Rng rng{3};
  Channel channel{sim, rng, ChannelConfig{}};
  AccessPoint ap{sim, channel, ApConfig{}};
};

CollectorConfig no_stalls() {
  CollectorConfig c;
  c.stall_probability = 0.0;
  return c;
}

Dataset synthetic_dataset(std::size_t n, std::uint64_t seed) {
  RandomStream rs(seed);
  Dataset d;
  d.k = 2;
  for (std::size_t i = 0; i < n; ++i) {
    DatasetRow r;
    r.txn_id = i;
    r.target_dc_us = rs.uniform(0, 120000);
    r.ac = static_cast<AccessCategory>(rs.uniform_int(0, 3));
    r.da_plus_db_us = rs.uniform(0, 5e4);
    for (std::size_t j = 0; j < d.k * kFeaturesPerSample; ++j) r.samples.push_back(rs.uniform(-95, 100));
    d.rows.push_back(r);
  }
  return d;
}

}  // namespace

TEST_CASE("an idle network samples as zeros") {
  Net n;
  Collector c(n.sim, n.channel, n.ap, n.rng, no_stalls());
  c.start();
  n.sim.run_until(50 * kMillisecond);
  REQUIRE(!c.history().empty());
  for (const auto& s : c.history()) {
    CHECK(s.cu == 0.0);
    CHECK(s.cn == -95.0);
    CHECK(s.rin == 0.0);
    CHECK(s.w == 0.0);
    for (double q : s.q) CHECK(q == 0.0);
    for (double q : s.qhat) CHECK(q == 0.0);
  }
}

TEST_CASE("one second at a 10 ms interval gives exactly 100 samples") {
  Net n;
  Collector c(n.sim, n.channel, n.ap, n.rng, no_stalls());
  c.start();
  n.sim.run_until(kSecond);
  CHECK(c.samples_taken() == 100);
  CHECK(c.stale_samples() == 0);
  CHECK(c.history().size() == 6);
  CHECK(c.history().back().time == kSecond);
}

TEST_CASE("history assembly picks the latest k boundaries") {
  Net n;
  Collector c(n.sim, n.channel, n.ap, n.rng, no_stalls());
  c.start();
  n.sim.run_until(100 * kMillisecond);
  const auto v1 = c.assemble_vector(1, AccessCategory::VI, 1234);
  REQUIRE(v1);
  REQUIRE(v1->samples.size() == 1);
  CHECK(v1->samples[0].time == 100 * kMillisecond);
  const auto v4 = c.assemble_vector(4, AccessCategory::VI, 1234);
  REQUIRE(v4);
  std::vector<SimTime> times;
  for (const auto& s : v4->samples) times.push_back(s.time);
  CHECK(times == std::vector<SimTime>{70000, 80000, 90000, 100000});
  CHECK(v4->samples.back().time - v4->samples.front().time == 3 * c.config().interval_us);
  const auto flat = v4->flatten();
  CHECK(flat.size() == feature_count(4));
  CHECK(flat[0] == 1.0);  // VI
  CHECK(flat[1] == 1234.0);
  CHECK_FALSE(c.assemble_vector(7, AccessCategory::VO, 0));
}

TEST_CASE("a late sample is stale and blocks assembly") {
  Net n;
  Collector c(n.sim, n.channel, n.ap, n.rng, no_stalls());
  for (SimTime t : {50, 60, 70}) {
    n.sim.run_until(t * kMillisecond);
    c.sample_tick(t * kMillisecond);
  }
  n.sim.run_until(86 * kMillisecond);  // 16 ms after the previous one
  CHECK(c.sample_tick(80 * kMillisecond).stale);
  for (SimTime t : {90, 100}) {
    n.sim.run_until(t * kMillisecond);
    CHECK_FALSE(c.sample_tick(t * kMillisecond).stale);
  }
  CHECK_FALSE(c.assemble_vector(4, AccessCategory::BE, 0));
  CHECK(c.assemble_vector(2, AccessCategory::BE, 0));
}

TEST_CASE("stalls are detected at the configured rate") {
  Net n;
  CollectorConfig cfg;
  cfg.stall_probability = 0.05;
  Collector c(n.sim, n.channel, n.ap, n.rng, cfg);
  c.start();
  n.sim.run_until(20 * kSecond);
  const double rate = static_cast<double>(c.stale_samples()) / static_cast<double>(c.samples_taken());
  CHECK(rate > 0.03);
  CHECK(rate < 0.07);
}

TEST_CASE("the collector sees wired input and queued frames") {
  test::MiniWorld w(Discipline::PSM, 0);
  Collector c(w.sim, w.channel, w.ap, w.rng, no_stalls());
  c.start();
  w.sim.run_until(15 * kMillisecond);
  for (int i = 0; i < 5; ++i) {
    Packet p;
    p.id = 100 + i;
    p.size_bytes = 1000;
    p.ac = AccessCategory::VI;
    p.dst = 1;  // the dozing station
    w.ap.enqueue_downlink(std::move(p));
  }
  w.sim.run_until(20 * kMillisecond);
  const FeatureSample& s = c.history().back();
  CHECK(s.time == 20 * kMillisecond);
  CHECK(s.rin == doctest::Approx(5000.0 / 0.01));
  CHECK(w.ap.ps_buffered(1) == 5);
}

TEST_CASE("scaling examples") {
  const Scaler s = Scaler::fit({{0.0, -95.0}, {100.0, -66.0}}, {"a", "cn"});
  CHECK(s.scale_one(0, 50.0) == 0.0);
  CHECK(s.scale_one(1, -95.0) == -1.0);
  CHECK(s.scale_one(1, -66.0) == 1.0);
  std::vector<std::string> warnings;
  const Scaler k = Scaler::fit({{3.0}, {3.0}}, {"flat"}, &warnings);
  CHECK(k.scale_one(0, 3.0) == 0.0);
  CHECK(k.scale_one(0, 9.0) == 0.0);
  CHECK(warnings.size() == 1);
}

TEST_CASE("unscale inverts scale to one ulp of the feature's range") {
  RandomStream rs(11);
  for (int trial = 0; trial < 200; ++trial) {
    const double lo = rs.uniform(-1e6, 1e6);
    const double hi = lo + std::exp(rs.uniform(-10, 20));
    const Scaler s = Scaler::fit({{lo}, {hi}}, {"f"});
    const double mag = std::max(std::abs(lo), std::abs(hi));
    const double ulp = std::nextafter(mag, INFINITY) - mag;
    for (int i = 0; i < 50; ++i) {
      const double x = rs.uniform(lo, hi);
      REQUIRE(std::abs(s.unscale_one(0, s.scale_one(0, x)) - x) <= ulp);
    }
  }
}

TEST_CASE("under-sampling cuts every bin to the smallest") {
  std::vector<double> t;
  for (int i = 0; i < 500; ++i) t.push_back(5000);
  for (int i = 0; i < 300; ++i) t.push_back(15000);
  for (int i = 0; i < 100; ++i) t.push_back(25000);
  RandomStream rs(1);
  std::vector<std::size_t> before, after;
  const auto keep = undersample_bins(t, 10000, 10, 1, rs, &before, &after);
  CHECK(keep.size() == 300);
  CHECK(before[0] == 500);
  CHECK(after == std::vector<std::size_t>{100, 100, 100, 0, 0, 0, 0, 0, 0, 0});
  CHECK(std::is_sorted(keep.begin(), keep.end()));
  RandomStream rs2(1);
  CHECK_THROWS_AS(undersample_bins(t, 10000, 10, 1000, rs2), DatasetError);
}

TEST_CASE("preprocessing drops long targets and fits on the training split only") {
  const Dataset d = synthetic_dataset(3000, 4);
  PreprocessOptions o;
  o.seed = 9;
  const PreparedData p = preprocess(d, o);
  std::size_t over = 0;
  for (const auto& r : d.rows) over += r.target_dc_us >= 100000;
  CHECK(p.dropped_over_limit == over);
  const std::size_t usable = d.rows.size() - over;
  CHECK(p.valid_y.size() == usable - static_cast<std::size_t>(std::llround(0.7 * usable)));
  for (double y : p.train_y) CHECK(y < 100000);
  // Recompute the scaler from the rows that are not in validation.
  std::multiset<double> valid_targets(p.valid_y.begin(), p.valid_y.end());
  std::vector<std::vector<double>> train_inputs;
  for (const auto& r : d.rows) {
    if (r.target_dc_us >= 100000) continue;
    auto it = valid_targets.find(r.target_dc_us);
    if (it != valid_targets.end()) {
      valid_targets.erase(it);
      continue;
    }
    train_inputs.push_back(r.inputs());
  }
  const Scaler again = Scaler::fit(train_inputs, feature_names(d.k));
  for (std::size_t i = 0; i < again.size(); ++i) {
    CHECK(again.ranges()[i].min == p.scaler.ranges()[i].min);
    CHECK(again.ranges()[i].max == p.scaler.ranges()[i].max);
  }
  for (const auto& x : p.train_x) {
    for (double v : x) REQUIRE(std::abs(v) <= 1.0);
  }
  // Balanced bins after under-sampling.
  for (std::size_t c : p.bin_counts_after) CHECK(c == p.bin_counts_after[0]);
}

TEST_CASE("dataset CSV round-trips exactly") {
  const Dataset d = synthetic_dataset(50, 2);
  std::stringstream ss;
  write_dataset_csv(ss, d);
  const std::string text = ss.str();
  CHECK(text.rfind("target_dc_us,ac,da_plus_db_us,cu,cn,rin,w,qvo,qvi,qbe,qbk,qhvo,qhvi,qhbe,qhbk,cu,", 0) == 0);
  const Dataset back = read_dataset_csv(ss);
  CHECK(back.k == 2);
  REQUIRE(back.rows.size() == 50);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(back.rows[i].target_dc_us == d.rows[i].target_dc_us);
    CHECK(back.rows[i].ac == d.rows[i].ac);
    CHECK(back.rows[i].samples == d.rows[i].samples);
  }
  const Dataset newest = with_history(d, 1);
  CHECK(newest.rows[0].samples ==
        std::vector<double>(d.rows[0].samples.begin() + kFeaturesPerSample, d.rows[0].samples.end()));
  std::stringstream bad(text.substr(0, text.find('\n') + 1) + "1,XX,2\n");
  try {
    read_dataset_csv(bad);
    FAIL("expected an error");
  } catch (const DatasetError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("scaler sidecar round-trips") {
  const Scaler s = Scaler::fit({{0.1, -95.0}, {0.7, -66.0}}, {"x", "cn"});
  std::stringstream ss;
  s.write_csv(ss);
  const Scaler b = Scaler::read_csv(ss);
  REQUIRE(b.size() == 2);
  CHECK(b.ranges()[0].name == "x");
  CHECK(b.ranges()[0].min == 0.1);
  CHECK(b.ranges()[1].max == -66.0);
}
