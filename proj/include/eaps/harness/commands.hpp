#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eaps/core/stats.hpp"
#include "eaps/harness/config.hpp"
#include "eaps/harness/world.hpp"

namespace eaps {

enum class ExitCode : int {
  ok = 0,
  failure = 1,
  config = 2,
  io = 3,
  /// The run finished but some results are not what was asked for: EAPS ran
  /// without a model, or a discipline completed fewer transactions than the
  /// configured minimum.
  degraded = 4,
  /// Input files parse but their content cannot be used (bad rows, too few
  /// rows per bin, model/width mismatch).
  data = 5,
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `txn_id,discipline,ac,t1_us,t2_us,t7_us,t8_us,duration_us,energy_uj,
/// dc_actual_us,dc_pred_us,sleep_error_us,flags`; absent values are empty.
void write_transactions_csv(std::ostream& out, const std::vector<TxnOutcome>& txns);

struct ResultRow {
  Discipline discipline = Discipline::CAM;
  DynamicityLevel scenario = DynamicityLevel::ND;
  ServerKind server = ServerKind::edge;
  /// Completed transactions; only these enter the statistics.
  std::size_t count = 0;
  Quartiles energy_uj;
  Quartiles duration_us;
  bool degraded = false;
  bool below_minimum = false;
};

/// Statistics of the completed transactions in `txns`.
ResultRow summarize(const std::vector<TxnOutcome>& txns, Discipline d, const ScenarioConfig& cfg);

/// `discipline,scenario,server,count,energy_q1_uj,energy_median_uj,
/// energy_q3_uj,duration_q1_us,duration_median_us,duration_q3_us,flags`
void write_result_table_csv(std::ostream& out, const std::vector<ResultRow>& rows);

/// Files written by train and read by evaluate and compare.
struct ModelBundle {
  DelayModel model;
  /// Mean training target, the global-mean baseline.
  double mean_target_us = 0.0;
};
void save_model(const std::filesystem::path& dir, const ModelBundle& m);
/// Throws IoError for missing files and ModelError for inconsistent ones.
ModelBundle load_model(const std::filesystem::path& dir);

Dataset load_dataset(const std::filesystem::path& path);

// --- commands ---------------------------------------------------------------
// Each writes CSV files under `out` (created if needed) plus the resolved
// config as config.txt, and prints a short summary to `log`. Errors are
// thrown; exit_code_for_current_exception maps them.

/// CAM run collecting telemetry: dataset.csv, delays.csv, trace.csv,
/// transactions.csv, summary.csv.
ExitCode cmd_generate(const ScenarioConfig& cfg, const std::filesystem::path& out, std::ostream& log);

/// model.csv, scaler.csv, residuals.csv, model_info.csv, validation.csv,
/// bins.csv and, with etr_grid, grid.csv.
ExitCode cmd_train(const ScenarioConfig& cfg, const std::filesystem::path& dataset, const std::filesystem::path& out,
                   std::ostream& log);

/// evaluation.csv, per_ac.csv, ecdf.csv, predictions.csv. Prediction timing
/// goes to `log` only, so the files stay reproducible.
ExitCode cmd_evaluate(const ScenarioConfig& cfg, const std::filesystem::path& model_dir,
                      const std::filesystem::path& test, const std::filesystem::path& out, std::ostream& log);

struct SweepRequest {
  std::vector<std::size_t> sizes{1000, 5000, 15000};
  std::vector<std::size_t> history{1, 2, 3, 4};
};
/// sweep.csv with `sweep,value,train_rows,mae_us,skipped` rows.
ExitCode cmd_sweep(const ScenarioConfig& cfg, const std::filesystem::path& train, const std::filesystem::path& test,
                   const SweepRequest& req, const std::filesystem::path& out, std::ostream& log);

/// Runs every configured discipline on the same seed: result_table.csv and
/// transactions.csv. Returns degraded when a row is flagged.
ExitCode cmd_compare(const ScenarioConfig& cfg, const std::optional<std::filesystem::path>& model_dir,
                     const std::filesystem::path& out, std::ostream& log);

/// metrics.csv with one row per trace file.
ExitCode cmd_metrics(const ScenarioConfig& cfg, const std::vector<std::filesystem::path>& traces,
                     const std::filesystem::path& out, std::ostream& log);

/// Maps the exception in flight to an exit code and writes a diagnostic.
/// Call only from a catch block.
ExitCode exit_code_for_current_exception(std::ostream& err);

}  // namespace eaps
