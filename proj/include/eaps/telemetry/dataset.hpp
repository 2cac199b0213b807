#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eaps/core/access_category.hpp"
#include "eaps/core/rng.hpp"
#include "eaps/telemetry/collector.hpp"

namespace eaps {

struct DatasetRow {
  std::uint64_t txn_id = 0;
  double target_dc_us = 0.0;
  AccessCategory ac = AccessCategory::BE;
  double da_plus_db_us = 0.0;
  /// k sample blocks, oldest first, kFeaturesPerSample values each.
  std::vector<double> samples;
  // Measured delay components, kept for analysis.
  double da_us = 0.0;
  double db_us = 0.0;

  /// Model input in FeatureVector::flatten() order.
  std::vector<double> inputs() const;
};

struct Dataset {
  std::size_t k = 4;
  std::vector<DatasetRow> rows;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Header then `target_dc_us,ac,da_plus_db_us,` + k blocks of
/// cu,cn,rin,w,qvo,qvi,qbe,qbk,qhvo,qhvi,qhbe,qhbk (oldest to newest).
void write_dataset_csv(std::ostream& out, const Dataset& d);
/// Sidecar `txn_id,da_us,db_us,dc_us`, one line per dataset row.
void write_delays_csv(std::ostream& out, const Dataset& d);
/// k is inferred from the header. Throws DatasetError with a line number.
Dataset read_dataset_csv(std::istream& in);

/// Keeps the newest `k` blocks of every row (k <= d.k).
Dataset with_history(const Dataset& d, std::size_t k);

// --- preprocessing --------------------------------------------------------

/// Per-feature min-max map onto [-1, 1]. Constant features map to 0.
class Scaler {
 public:
  struct Range {
    std::string name;
    double min = 0.0;
    double max = 0.0;
  };

  static Scaler fit(const std::vector<std::vector<double>>& inputs, std::vector<std::string> names,
                    std::vector<std::string>* warnings = nullptr);

  std::vector<double> scale(const std::vector<double>& x) const;
  std::vector<double> unscale(const std::vector<double>& y) const;
  double scale_one(std::size_t i, double x) const;
  double unscale_one(std::size_t i, double y) const;
  std::size_t size() const { return ranges_.size(); }
  const std::vector<Range>& ranges() const { return ranges_; }

  /// Sidecar `feature,min,max`.
  void write_csv(std::ostream& out) const;
  static Scaler read_csv(std::istream& in);

 private:
  std::vector<Range> ranges_;
};

struct PreparedData {
  Scaler scaler;
  std::vector<std::vector<double>> train_x, valid_x;
  std::vector<double> train_y, valid_y;
  std::vector<AccessCategory> train_ac, valid_ac;
  /// Training rows per 10 ms target bin before and after under-sampling.
  std::vector<std::size_t> bin_counts_before, bin_counts_after;
  std::size_t dropped_over_limit = 0;
  std::vector<std::string> warnings;
};

struct PreprocessOptions {
  double target_limit_us = 100000.0;
  double bin_width_us = 10000.0;
  double train_fraction = 0.7;
  bool undersample = true;
  /// Bins with fewer training rows than this are kept whole and do not set
  /// the under-sampling size. Throws DatasetError if no bin qualifies.
  std::size_t min_bin_rows = 1;
  std::uint64_t seed = 1;
};

/// Drops rows with target >= the limit, splits train/validation with a
/// seeded shuffle, fits the scaler on the training split, under-samples the
/// training bins and scales both splits.
PreparedData preprocess(const Dataset& d, const PreprocessOptions& options);

/// Indices of `targets` kept when every non-empty bin is reduced to the size
/// of the smallest qualifying bin. Order is preserved.
std::vector<std::size_t> undersample_bins(const std::vector<double>& targets, double bin_width, std::size_t bins,
                                          std::size_t min_bin_rows, RandomStream& rs,
                                          std::vector<std::size_t>* counts_before = nullptr,
                                          std::vector<std::size_t>* counts_after = nullptr);

}  // namespace eaps
