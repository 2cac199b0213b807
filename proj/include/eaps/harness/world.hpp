#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "eaps/harness/config.hpp"
#include "eaps/scheduler/scheduler.hpp"
#include "eaps/station/station.hpp"
#include "eaps/telemetry/dataset.hpp"
#include "eaps/traffic/flow.hpp"

namespace eaps {

/// One finished (or abandoned) transaction with the scheduler's view of it.
struct TxnOutcome {
  TransactionRecord record;
  /// Discipline that was requested; differs from record.discipline when an
  /// EAPS run had to fall back to PSM.
  Discipline label = Discipline::CAM;
  std::optional<SimTime> t3;
  std::optional<SimTime> t6;
  /// When the reply left the qdisc towards the driver queue.
  std::optional<SimTime> ready;
  std::optional<double> dc_actual_us;  // t8 - t6
  std::optional<double> dc_pred_us;
  /// scheduled wake - ready; positive means the station woke late.
  std::optional<double> sleep_error_us;
};

struct RunOptions {
  Discipline discipline = Discipline::CAM;
  /// Needed by EAPS stations; without it they run PSM and are flagged.
  const DelayModel* model = nullptr;
  bool collect_dataset = false;
  bool record_trace = false;
};

struct RunStats {
  SimTime end = 0;
  std::uint64_t events = 0;
  std::uint64_t background_packets = 0;
  std::uint64_t controls_sent = 0;
  std::uint64_t samples = 0;
  std::uint64_t stale_samples = 0;
  std::uint64_t started = 0;
  bool degraded = false;
};

struct RunResult {
  std::vector<TxnOutcome> transactions;
  /// Rows for every transaction with a feature vector and a measured reply
  /// delay; only meaningful for stations that never doze (CAM).
  std::vector<DatasetRow> dataset;
  std::vector<TraceRecord> trace;
  RunStats stats;
};

/// Builds the network described by `config` (AP, IoT stations, load nodes,
/// collector, scheduler, server) and runs it until `config.transactions`
/// transactions completed or the horizon passed.
RunResult run_scenario(const ScenarioConfig& config, const RunOptions& options);

/// IoT station ids are 1..n; load nodes start here.
inline constexpr NodeId kFirstLoadNode = 1000;

}  // namespace eaps
