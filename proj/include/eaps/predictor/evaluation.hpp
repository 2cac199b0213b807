#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "eaps/core/access_category.hpp"
#include "eaps/predictor/regressors.hpp"
#include "eaps/telemetry/dataset.hpp"

namespace eaps {

struct AcErrorStats {
  std::size_t count = 0;
  double mae_us = 0.0;
  /// Population standard deviation of the signed errors.
  double sigma_us = 0.0;
};

struct TimingStats {
  double q1_ns = 0.0;
  double median_ns = 0.0;
  double q3_ns = 0.0;
};

struct EvalReport {
  std::size_t count = 0;
  double mae_us = 0.0;
  /// Indexed by priority rank (VO, VI, BE, BK); empty when no rows.
  std::array<std::optional<AcErrorStats>, kNumAcs> per_ac{};
  /// Signed errors prediction - actual, in row order.
  std::vector<double> errors;
  TimingStats timing;
  std::vector<std::string> warnings;

  /// Fraction of |error| <= bound_us.
  double fraction_within(double bound_us) const;
};

/// Predicts every row (clamped to [0, 100 ms) when `clamp`), timing each
/// prediction with a steady clock.
EvalReport evaluate(const Regressor& model, const Matrix& x, const std::vector<double>& y,
                    const std::vector<AccessCategory>& acs, bool clamp = true);

/// Per-AC residual spread shipped in the schedule's sigma field.
struct ResidualStats {
  std::array<std::optional<AcErrorStats>, kNumAcs> per_ac{};

  static ResidualStats from(const EvalReport& r);
  /// Sigma for `ac`, or the pooled fallback when that AC had no rows.
  double sigma_us(AccessCategory ac, double fallback_us) const;
  /// `ac,count,mae_us,sigma_us`
  void write_csv(std::ostream& out) const;
  static ResidualStats read_csv(std::istream& in);
};

/// `error_us,fraction` with one row per distinct error value.
void write_ecdf_csv(std::ostream& out, const std::vector<double>& errors);

struct SweepPoint {
  std::size_t value = 0;  // training rows or history depth k
  std::size_t train_rows = 0;
  double mae_us = 0.0;
  bool skipped = false;
};

struct SweepOptions {
  PreprocessOptions preprocess{};
  EtrParams etr{};
  /// Seed of the permutation that picks the training subset; subsets of
  /// different sizes are nested.
  std::uint64_t subset_seed = 1;
};

/// Trains on the first n rows of a seeded permutation of `train` for each
/// n, evaluates on `test`. Sizes above the available rows are skipped.
std::vector<SweepPoint> sweep_training_size(const Dataset& train, const Dataset& test,
                                            const std::vector<std::size_t>& sizes, const SweepOptions& o,
                                            std::vector<std::string>* warnings = nullptr);

/// Trains with the newest k sample blocks for each k.
std::vector<SweepPoint> sweep_history(const Dataset& train, const Dataset& test, const std::vector<std::size_t>& ks,
                                      const SweepOptions& o, std::vector<std::string>* warnings = nullptr);

/// Fits an ETR on prepared data and evaluates it on `test` scaled the same
/// way. Shared by the sweeps and the train/evaluate commands.
struct TrainedModel {
  EtrModel model;
  Scaler scaler;
  ResidualStats residuals;
  EvalReport validation;
  std::size_t train_rows = 0;
};
TrainedModel train_model(const Dataset& d, const PreprocessOptions& p, const EtrParams& etr);

/// Rows of `test` below the target limit, scaled with `scaler`.
struct ScaledRows {
  Matrix x;
  std::vector<double> y;
  std::vector<AccessCategory> ac;
};
ScaledRows scale_rows(const Dataset& test, const Scaler& scaler, double target_limit_us = 100000.0);

}  // namespace eaps
