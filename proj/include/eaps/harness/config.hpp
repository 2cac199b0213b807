#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eaps/ap/access_point.hpp"
#include "eaps/medium/channel.hpp"
#include "eaps/medium/interferer.hpp"
#include "eaps/predictor/regressors.hpp"
#include "eaps/scheduler/scheduler.hpp"
#include "eaps/station/station.hpp"
#include "eaps/telemetry/collector.hpp"
#include "eaps/telemetry/dataset.hpp"
#include "eaps/traffic/flow.hpp"

namespace eaps {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a run depends on. Defaults reproduce the reference scenario;
/// a config file only lists what it changes.
struct ScenarioConfig {
  std::uint64_t seed = 1;
  /// Simulated time limit; 0 runs nothing.
  Duration horizon_us = 3600 * kSecond;
  /// A run stops once this many transactions completed (0: horizon only).
  std::size_t transactions = 1000;
  /// ResultTable rows with fewer completed transactions are flagged.
  std::size_t min_transactions = 1000;

  DynamicityLevel scenario = DynamicityLevel::ND;
  /// Overrides the scenario's redraw probability when set.
  std::optional<double> variability;
  ServerKind server = ServerKind::edge;
  Duration server_fixed_us = 30 * kMillisecond;
  std::vector<Discipline> disciplines{Discipline::CAM, Discipline::PSM, Discipline::APSM, Discipline::EAPS_M};

  int iot_stations = 4;
  Duration gap_min_us = 1 * kMillisecond;
  Duration gap_max_us = 500 * kMillisecond;
  std::int64_t uplink_bytes = 100;
  std::int64_t reply_bytes = 200;

  bool background = true;
  TrafficConfig traffic{};
  ApConfig ap{};
  ChannelConfig channel{};
  InterfererProfile interferer{};
  PowerStateTable power{};
  double power_scale = 1.0;
  StationConfig station{};
  CollectorConfig collector{};
  SchedulerConfig scheduler{};

  std::size_t history_k = 4;
  Duration burst_threshold_us = 100 * kMillisecond;

  /// Training keeps the natural target distribution unless `undersample`
  /// is switched on.
  PreprocessOptions preprocess{.undersample = false};
  EtrParams etr{};
  /// Train picks hyperparameters from a small grid on the validation split.
  bool etr_grid = false;

  ServerProfile server_profile() const;
  TrafficConfig traffic_config() const;
  PowerStateTable power_table() const { return power.scaled(power_scale); }

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Applies one `key = value` assignment. Throws ConfigError for unknown keys
/// and unparsable values.
void apply_setting(ScenarioConfig& c, const std::string& key, const std::string& value);

/// Reads `key = value` lines; `#` starts a comment, blank lines are skipped.
/// Errors carry the line number.
ScenarioConfig parse_config(std::istream& in, ScenarioConfig base = {});
ScenarioConfig load_config(const std::string& path);

/// Every key with its current value, one `key = value` per line, sorted by
/// schema order. Feeding the output back to parse_config is lossless.
void write_config(std::ostream& out, const ScenarioConfig& c);

struct ConfigKey {
  std::string key;
  std::string description;
};
const std::vector<ConfigKey>& config_schema();

}  // namespace eaps
