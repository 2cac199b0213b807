#include "eaps/harness/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace eaps {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

template <class T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

/// Milliseconds in the file, microseconds in memory.
Duration parse_ms(const std::string& key, const std::string& v) {
  const double ms = parse_double(key, v);
  if (std::abs(ms) > 1e12) throw ConfigError(key + ": out of range");
  return static_cast<Duration>(std::llround(ms * 1000.0));
}

std::string fmt_ms(Duration us) { return fmt(static_cast<double>(us) / 1000.0); }

struct Entry {
  std::string key;
  std::string description;
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

template <class T, class Access>
Entry integer(std::string key, std::string desc, Access a) {
  return {key, std::move(desc),
          [a, key](ScenarioConfig& c, const std::string& v) { a(c) = parse_integer<T>(key, v); },
          [a](const ScenarioConfig& c) { return std::to_string(a(const_cast<ScenarioConfig&>(c))); }};
}

template <class Access>
Entry number(std::string key, std::string desc, Access a, double unit = 1.0) {
  return {key, std::move(desc),
          [a, key, unit](ScenarioConfig& c, const std::string& v) { a(c) = parse_double(key, v) * unit; },
          [a, unit](const ScenarioConfig& c) { return fmt(a(const_cast<ScenarioConfig&>(c)) / unit); }};
}

template <class Access>
Entry millis(std::string key, std::string desc, Access a) {
  return {key, std::move(desc), [a, key](ScenarioConfig& c, const std::string& v) { a(c) = parse_ms(key, v); },
          [a](const ScenarioConfig& c) { return fmt_ms(a(const_cast<ScenarioConfig&>(c))); }};
}

template <class Access>
Entry flag(std::string key, std::string desc, Access a) {
  return {key, std::move(desc), [a, key](ScenarioConfig& c, const std::string& v) { a(c) = parse_bool(key, v); },
          [a](const ScenarioConfig& c) { return std::string(a(const_cast<ScenarioConfig&>(c)) ? "true" : "false"); }};
}

std::vector<Entry> build_entries() {
  using C = ScenarioConfig;
  std::vector<Entry> e;
  e.push_back(integer<std::uint64_t>("seed", "master seed of every random stream", [](C& c) -> auto& { return c.seed; }));
  e.push_back({"horizon_s", "simulated time limit in seconds; 0 runs nothing",
               [](C& c, const std::string& v) {
                 const double s = parse_double("horizon_s", v);
                 if (s < 0 || s > 1e7) throw ConfigError("horizon_s: must be in [0, 1e7]");
                 c.horizon_us = static_cast<Duration>(std::llround(s * 1e6));
               },
               [](const C& c) { return fmt(static_cast<double>(c.horizon_us) / 1e6); }});
  e.push_back(integer<std::size_t>("transactions", "stop after this many completed transactions (0: horizon only)",
                                   [](C& c) -> auto& { return c.transactions; }));
  e.push_back(integer<std::size_t>("min_transactions", "minimum completed transactions per result row",
                                   [](C& c) -> auto& { return c.min_transactions; }));
  e.push_back({"scenario", "background dynamicity: ND (redraw 0.1) or HD (redraw 0.9)",
               [](C& c, const std::string& v) {
                 const auto l = parse_dynamicity_level(v);
                 if (!l) throw ConfigError("scenario: expected ND or HD, got '" + v + "'");
                 c.scenario = *l;
               },
               [](const C& c) { return std::string(to_string(c.scenario)); }});
  e.push_back({"variability", "redraw probability after each burst; 'auto' follows the scenario",
               [](C& c, const std::string& v) {
                 if (v == "auto") {
                   c.variability.reset();
                 } else {
                   c.variability = parse_double("variability", v);
                 }
               },
               [](const C& c) { return c.variability ? fmt(*c.variability) : std::string("auto"); }});
  e.push_back({"server", "server response profile: edge (1-3 ms), cloud (25-60 ms) or fixed",
               [](C& c, const std::string& v) {
                 const auto k = parse_server_kind(v);
                 if (!k) throw ConfigError("server: expected edge, cloud or fixed, got '" + v + "'");
                 c.server = *k;
               },
               [](const C& c) { return std::string(to_string(c.server)); }});
  e.push_back(millis("server_fixed_ms", "response delay of the fixed profile", [](C& c) -> auto& { return c.server_fixed_us; }));
  e.push_back({"disciplines", "comma-separated disciplines for compare (CAM, PSM, APSM, APSD_POLL, EAPS_E, EAPS_M, EAPS_L)",
               [](C& c, const std::string& v) {
                 std::vector<Discipline> out;
                 std::stringstream ss(v);
                 std::string item;
                 while (std::getline(ss, item, ',')) {
                   const auto d = parse_discipline(trim(item));
                   if (!d) throw ConfigError("disciplines: unknown discipline '" + trim(item) + "'");
                   out.push_back(*d);
                 }
                 c.disciplines = std::move(out);
               },
               [](const C& c) {
                 std::string s;
                 for (std::size_t i = 0; i < c.disciplines.size(); ++i) {
                   if (i) s += ',';
                   s += to_string(c.disciplines[i]);
                 }
                 return s;
               }});
  e.push_back(integer<int>("iot_stations", "IoT stations running transactions", [](C& c) -> auto& { return c.iot_stations; }));
  e.push_back(millis("gap_min_ms", "lower bound of the inter-transaction gap", [](C& c) -> auto& { return c.gap_min_us; }));
  e.push_back(millis("gap_max_ms", "upper bound of the inter-transaction gap", [](C& c) -> auto& { return c.gap_max_us; }));
  e.push_back(integer<std::int64_t>("uplink_bytes", "request payload", [](C& c) -> auto& { return c.uplink_bytes; }));
  e.push_back(integer<std::int64_t>("reply_bytes", "server reply payload", [](C& c) -> auto& { return c.reply_bytes; }));

  e.push_back(flag("background", "run the background load nodes", [](C& c) -> auto& { return c.background; }));
  e.push_back(integer<int>("load_nodes", "background load nodes", [](C& c) -> auto& { return c.traffic.load_nodes; }));
  e.push_back(integer<int>("flows_per_node", "background flows per load node", [](C& c) -> auto& { return c.traffic.flows_per_node; }));
  e.push_back(integer<std::int64_t>("packet_bytes_min", "smallest background packet",
                                    [](C& c) -> auto& { return c.traffic.ranges.packet_bytes_min; }));
  e.push_back(integer<std::int64_t>("packet_bytes_max", "largest background packet",
                                    [](C& c) -> auto& { return c.traffic.ranges.packet_bytes_max; }));
  e.push_back(number("bit_rate_min_mbps", "lowest flow bit rate", [](C& c) -> auto& { return c.traffic.ranges.bit_rate_min_bps; }, 1e6));
  e.push_back(number("bit_rate_max_mbps", "highest flow bit rate", [](C& c) -> auto& { return c.traffic.ranges.bit_rate_max_bps; }, 1e6));
  e.push_back(integer<std::int64_t>("burst_bytes_min", "smallest burst", [](C& c) -> auto& { return c.traffic.ranges.burst_bytes_min; }));
  e.push_back(integer<std::int64_t>("burst_bytes_max", "largest burst", [](C& c) -> auto& { return c.traffic.ranges.burst_bytes_max; }));
  e.push_back(millis("inter_burst_min_ms", "shortest pause between bursts",
                     [](C& c) -> auto& { return c.traffic.ranges.inter_burst_min_us; }));
  e.push_back(millis("inter_burst_max_ms", "longest pause between bursts",
                     [](C& c) -> auto& { return c.traffic.ranges.inter_burst_max_us; }));
  e.push_back(flag("log_scale_draws", "draw bit rate and burst size log-uniformly instead of uniformly",
                   [](C& c) -> auto& { return c.traffic.ranges.log_scale; }));
  e.push_back(integer<std::int64_t>("tcp_ack_bytes", "reverse ack size of paced TCP-like flows",
                                    [](C& c) -> auto& { return c.traffic.tcp_ack_bytes; }));

  e.push_back(integer<int>("tcp_window_packets", "packets of one TCP-like flow allowed in the network (0: no limit)",
                           [](C& c) -> auto& { return c.traffic.tcp_window_packets; }));
  e.push_back(integer<Duration>("beacon_interval_us", "beacon interval", [](C& c) -> auto& { return c.ap.beacon_interval_us; }));
  e.push_back(integer<std::int64_t>("beacon_bytes", "beacon frame size", [](C& c) -> auto& { return c.ap.beacon_bytes; }));
  e.push_back(number("wired_rate_mbps", "wired egress rate", [](C& c) -> auto& { return c.ap.wired_rate_bps; }, 1e6));
  e.push_back(integer<std::int64_t>("wired_h_mac", "wired MAC header bytes", [](C& c) -> auto& { return c.ap.wired_h_mac; }));
  e.push_back(integer<std::int64_t>("wired_h_phy", "wired PHY overhead bytes", [](C& c) -> auto& { return c.ap.wired_h_phy; }));
  e.push_back(integer<std::size_t>("band_capacity", "qdisc band capacity in packets", [](C& c) -> auto& { return c.ap.band_capacity; }));
  e.push_back(integer<std::size_t>("mac_queue_capacity", "AP driver queue depth per AC",
                                   [](C& c) -> auto& { return c.ap.mac_queue_capacity; }));

  e.push_back(flag("driver_round_robin", "serve AP driver queues round robin across stations instead of FIFO",
                   [](C& c) -> auto& { return c.ap.driver_round_robin; }));
  e.push_back(number("phy_rate_mbps", "data rate of every link", [](C& c) -> auto& { return c.channel.phy.data_rate_bps; }, 1e6));
  e.push_back(number("basic_rate_mbps", "beacon rate", [](C& c) -> auto& { return c.channel.phy.basic_rate_bps; }, 1e6));
  e.push_back(number("loss_prob", "per-attempt loss probability at the noise floor", [](C& c) -> auto& { return c.channel.loss_prob; }));
  e.push_back(number("loss_noise_coupling", "extra loss probability at the noise ceiling",
                     [](C& c) -> auto& { return c.channel.loss_noise_coupling; }));
  e.push_back(integer<int>("edca.retry_limit", "MAC retry limit", [](C& c) -> auto& { return c.channel.edca.retry_limit; }));
  for (AccessCategory ac : kAcsByPriority) {
    std::string name(to_string(ac));
    for (auto& ch : name) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    const std::size_t i = index_of(ac);
    const std::string p = "edca." + name + ".";
    e.push_back(integer<int>(p + "aifsn", "AIFSN", [i](C& c) -> auto& { return c.channel.edca.per_ac[i].aifsn; }));
    e.push_back(integer<int>(p + "cw_min", "minimum contention window", [i](C& c) -> auto& { return c.channel.edca.per_ac[i].cw_min; }));
    e.push_back(integer<int>(p + "cw_max", "maximum contention window", [i](C& c) -> auto& { return c.channel.edca.per_ac[i].cw_max; }));
    e.push_back(integer<Duration>(p + "txop_us", "TXOP limit (0: one frame)",
                                  [i](C& c) -> auto& { return c.channel.edca.per_ac[i].txop_limit_us; }));
  }
  e.push_back(number("interferer_fraction", "airtime share of the external interferer",
                     [](C& c) -> auto& { return c.interferer.airtime_fraction; }));
  e.push_back(millis("interferer_mean_on_ms", "mean interferer burst", [](C& c) -> auto& { return c.interferer.mean_on_us; }));
  e.push_back(number("interferer_excursion_db", "noise rise while the interferer is on",
                     [](C& c) -> auto& { return c.interferer.excursion_db; }));

  e.push_back(number("power_sleep_mw", "radio power asleep", [](C& c) -> auto& { return c.power.sleep_mw; }));
  e.push_back(number("power_idle_mw", "radio power awake and idle", [](C& c) -> auto& { return c.power.idle_mw; }));
  e.push_back(number("power_rx_mw", "radio power receiving", [](C& c) -> auto& { return c.power.rx_mw; }));
  e.push_back(number("power_tx_mw", "radio power transmitting", [](C& c) -> auto& { return c.power.tx_mw; }));
  e.push_back(integer<Duration>("power_transition_us", "sleep/wake transition latency",
                                [](C& c) -> auto& { return c.power.transition_us; }));
  e.push_back(number("power_scale", "multiplier applied to every power level", [](C& c) -> auto& { return c.power_scale; }));
  e.push_back(millis("apsm_tail_ms", "APSM awake tail after the uplink", [](C& c) -> auto& { return c.station.apsm_tail_us; }));
  e.push_back(millis("apsd_poll_ms", "APSD trigger period", [](C& c) -> auto& { return c.station.apsd_poll_interval_us; }));
  e.push_back(millis("control_timeout_ms", "EAPS wait for the schedule before falling back to PSM",
                     [](C& c) -> auto& { return c.station.control_timeout_us; }));
  e.push_back(millis("transaction_timeout_ms", "abandon a transaction after this long",
                     [](C& c) -> auto& { return c.station.transaction_timeout_us; }));

  e.push_back(millis("collector_interval_ms", "telemetry sampling interval", [](C& c) -> auto& { return c.collector.interval_us; }));
  e.push_back(integer<std::size_t>("collector_history", "samples kept by the collector",
                                   [](C& c) -> auto& { return c.collector.history; }));
  e.push_back(number("stall_probability", "chance that a sample is taken late",
                     [](C& c) -> auto& { return c.collector.stall_probability; }));
  e.push_back(integer<std::size_t>("history_k", "samples per feature vector", [](C& c) -> auto& { return c.history_k; }));
  e.push_back(millis("burst_threshold_ms", "inter-arrival threshold that splits bursts",
                     [](C& c) -> auto& { return c.burst_threshold_us; }));
  e.push_back(integer<Duration>("processing_delay_us", "scheduler delay before the schedule is injected",
                                [](C& c) -> auto& { return c.scheduler.processing_delay_us; }));
  e.push_back(number("ewma_alpha", "weight of the newest server round trip", [](C& c) -> auto& { return c.scheduler.ewma_alpha; }));

  e.push_back(number("dc_limit_ms", "targets at or above this are dropped",
                     [](C& c) -> auto& { return c.preprocess.target_limit_us; }, 1000.0));
  e.push_back(number("bin_width_ms", "target bin width for under-sampling",
                     [](C& c) -> auto& { return c.preprocess.bin_width_us; }, 1000.0));
  e.push_back(number("train_fraction", "training share of the dataset", [](C& c) -> auto& { return c.preprocess.train_fraction; }));
  e.push_back(flag("undersample", "balance training bins", [](C& c) -> auto& { return c.preprocess.undersample; }));
  e.push_back(integer<std::size_t>("min_bin_rows", "bins smaller than this do not set the balanced size",
                                   [](C& c) -> auto& { return c.preprocess.min_bin_rows; }));
  e.push_back(integer<std::size_t>("etr_trees", "trees in the ensemble", [](C& c) -> auto& { return c.etr.n_trees; }));
  e.push_back(integer<std::size_t>("etr_max_depth", "maximum tree depth", [](C& c) -> auto& { return c.etr.max_depth; }));
  e.push_back(integer<std::size_t>("etr_min_leaf", "minimum rows per leaf", [](C& c) -> auto& { return c.etr.min_samples_leaf; }));
  e.push_back(integer<std::size_t>("etr_max_features", "features tried per split (0: ceil(sqrt(F)))",
                                   [](C& c) -> auto& { return c.etr.max_features; }));
  e.push_back(flag("etr_grid", "pick trees/depth/leaf from a small grid", [](C& c) -> auto& { return c.etr_grid; }));
  return e;
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = build_entries();
  return table;
}

}  // namespace

ServerProfile ScenarioConfig::server_profile() const {
  return server == ServerKind::fixed ? ServerProfile::fixed(server_fixed_us) : ServerProfile::for_kind(server);
}

TrafficConfig ScenarioConfig::traffic_config() const {
  TrafficConfig t = traffic;
  t.variability = variability ? *variability : variability_for(scenario);
  return t;
}

void ScenarioConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  auto wrap = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string(section) + ": " + e.what());
    }
  };
  check(horizon_us >= 0, "horizon_s: must be >= 0");
  check(!disciplines.empty(), "disciplines: at least one is required");
  check(iot_stations >= 1 && iot_stations <= 64, "iot_stations: must be in [1, 64]");
  check(gap_min_us >= 0 && gap_max_us >= gap_min_us, "gap_min_ms/gap_max_ms: need 0 <= min <= max");
  check(uplink_bytes > 0 && reply_bytes > 0, "uplink_bytes/reply_bytes: must be positive");
  check(power_scale > 0.0, "power_scale: must be positive");
  check(history_k >= 1 && history_k <= collector.history, "history_k: must be in [1, collector_history]");
  check(burst_threshold_us > 0, "burst_threshold_ms: must be positive");
  check(scheduler.ewma_alpha > 0.0 && scheduler.ewma_alpha <= 1.0, "ewma_alpha: must be in (0, 1]");
  check(scheduler.processing_delay_us >= 0, "processing_delay_us: must be >= 0");
  check(!variability || (*variability >= 0.0 && *variability <= 1.0), "variability: must be in [0, 1]");
  check(preprocess.target_limit_us > 0.0 && preprocess.bin_width_us > 0.0, "dc_limit_ms/bin_width_ms: must be positive");
  check(preprocess.train_fraction > 0.0 && preprocess.train_fraction < 1.0, "train_fraction: must be in (0, 1)");
  wrap("server", [&] { server_profile().validate(); });
  wrap("traffic", [&] { traffic_config().validate(); });
  wrap("ap", [&] { ap.validate(); });
  wrap("edca", [&] { channel.edca.validate(); });
  wrap("interferer", [&] { interferer.validate(); });
  wrap("power", [&] { power_table().validate(); });
  wrap("station", [&] { station.validate(); });
  wrap("collector", [&] { collector.validate(); });
  wrap("etr", [&] { etr.validate(); });
  check(channel.phy.data_rate_bps > 0 && channel.phy.basic_rate_bps > 0, "phy rates must be positive");
  check(channel.loss_prob >= 0.0 && channel.loss_prob < 1.0, "loss_prob: must be in [0, 1)");
}

void apply_setting(ScenarioConfig& c, const std::string& key, const std::string& value) {
  for (const Entry& e : entries()) {
    if (e.key == key) {
      e.set(c, value);
      return;
    }
  }
  throw ConfigError("unknown key '" + key + "'");
}

ScenarioConfig parse_config(std::istream& in, ScenarioConfig base) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_setting(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  base.validate();
  return base;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open config " + path);
  return parse_config(in);
}

void write_config(std::ostream& out, const ScenarioConfig& c) {
  for (const Entry& e : entries()) out << e.key << " = " << e.get(c) << '\n';
}

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = [] {
    std::vector<ConfigKey> out;
    for (const Entry& e : entries()) out.push_back({e.key, e.description});
    return out;
  }();
  return schema;
}

}  // namespace eaps
