#include "eaps/telemetry/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace eaps {

std::vector<double> DatasetRow::inputs() const {
  std::vector<double> out;
  out.reserve(2 + samples.size());
  out.push_back(static_cast<double>(priority_rank(ac)));
  out.push_back(da_plus_db_us);
  out.insert(out.end(), samples.begin(), samples.end());
  return out;
}

namespace {

// Shortest text that parses back to the same double.
void put_double(std::ostream& out, double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, p - buf);
}

bool get_double(std::string_view s, double& v) {
  if (s.empty()) return false;
  std::string tmp(s);
  char* end = nullptr;
  v = std::strtod(tmp.c_str(), &end);
  return end == tmp.c_str() + tmp.size() && std::isfinite(v);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t c = line.find(',', pos);
    out.push_back(line.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos));
    if (c == std::string_view::npos) break;
    pos = c + 1;
  }
  return out;
}

std::string dataset_header(std::size_t k) {
  std::string h = "target_dc_us,ac,da_plus_db_us";
  for (std::size_t i = 0; i < k; ++i) {
    for (const char* n : sample_feature_names()) {
      h += ',';
      h += n;
    }
  }
  return h;
}

}  // namespace

void write_dataset_csv(std::ostream& out, const Dataset& d) {
  out << dataset_header(d.k) << '\n';
  for (const DatasetRow& r : d.rows) {
    if (r.samples.size() != d.k * kFeaturesPerSample) throw DatasetError("row has the wrong number of features");
    put_double(out, r.target_dc_us);
    out << ',' << to_string(r.ac) << ',';
    put_double(out, r.da_plus_db_us);
    for (double v : r.samples) {
      out << ',';
      put_double(out, v);
    }
    out << '\n';
  }
}

void write_delays_csv(std::ostream& out, const Dataset& d) {
  out << "txn_id,da_us,db_us,dc_us\n";
  for (const DatasetRow& r : d.rows) {
    out << r.txn_id << ',';
    put_double(out, r.da_us);
    out << ',';
    put_double(out, r.db_us);
    out << ',';
    put_double(out, r.target_dc_us);
    out << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in) {
  Dataset d;
  std::string line;
  if (!std::getline(in, line)) throw DatasetError("dataset is empty (missing header)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto head = split_commas(line);
  if (head.size() < 3 || (head.size() - 3) % kFeaturesPerSample != 0) {
    throw DatasetError("line 1: unexpected dataset header");
  }
  d.k = (head.size() - 3) / kFeaturesPerSample;
  if (line != dataset_header(d.k)) throw DatasetError("line 1: unexpected dataset header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_commas(line);
    auto fail = [&] { return DatasetError("line " + std::to_string(lineno) + ": malformed dataset row"); };
    if (f.size() != head.size()) throw fail();
    DatasetRow r;
    r.txn_id = d.rows.size();
    const auto ac = parse_access_category(f[1]);
    if (!ac || !get_double(f[0], r.target_dc_us) || !get_double(f[2], r.da_plus_db_us)) throw fail();
    r.ac = *ac;
    r.samples.resize(f.size() - 3);
    for (std::size_t i = 3; i < f.size(); ++i) {
      if (!get_double(f[i], r.samples[i - 3])) throw fail();
    }
    d.rows.push_back(std::move(r));
  }
  return d;
}

Dataset with_history(const Dataset& d, std::size_t k) {
  if (k == 0 || k > d.k) throw DatasetError("requested history exceeds the dataset's");
  Dataset out;
  out.k = k;
  out.rows.reserve(d.rows.size());
  const std::size_t skip = (d.k - k) * kFeaturesPerSample;
  for (const DatasetRow& r : d.rows) {
    DatasetRow c = r;
    c.samples.assign(r.samples.begin() + static_cast<std::ptrdiff_t>(skip), r.samples.end());
    out.rows.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------

Scaler Scaler::fit(const std::vector<std::vector<double>>& inputs, std::vector<std::string> names,
                   std::vector<std::string>* warnings) {
  if (inputs.empty()) throw DatasetError("cannot fit a scaler on no rows");
  const std::size_t n = inputs.front().size();
  if (names.size() != n) throw DatasetError("scaler feature names do not match the input width");
  Scaler s;
  s.ranges_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    s.ranges_[j].name = std::move(names[j]);
    s.ranges_[j].min = std::numeric_limits<double>::infinity();
    s.ranges_[j].max = -std::numeric_limits<double>::infinity();
  }
  for (const auto& x : inputs) {
    if (x.size() != n) throw DatasetError("rows of different widths");
    for (std::size_t j = 0; j < n; ++j) {
      s.ranges_[j].min = std::min(s.ranges_[j].min, x[j]);
      s.ranges_[j].max = std::max(s.ranges_[j].max, x[j]);
    }
  }
  if (warnings) {
    for (const Range& r : s.ranges_) {
      if (r.min == r.max) warnings->push_back("feature " + r.name + " is constant; it is scaled to 0");
    }
  }
  return s;
}

// Long double keeps unscale(scale(x)) within one ulp of the range's magnitude.
double Scaler::scale_one(std::size_t i, double x) const {
  const Range& r = ranges_[i];
  if (r.max == r.min) return 0.0;
  const long double span = static_cast<long double>(r.max) - r.min;
  return static_cast<double>(2.0L * (static_cast<long double>(x) - r.min) / span - 1.0L);
}

double Scaler::unscale_one(std::size_t i, double y) const {
  const Range& r = ranges_[i];
  if (r.max == r.min) return r.min;
  const long double span = static_cast<long double>(r.max) - r.min;
  return static_cast<double>(r.min + (static_cast<long double>(y) + 1.0L) * span / 2.0L);
}

std::vector<double> Scaler::scale(const std::vector<double>& x) const {
  if (x.size() != ranges_.size()) throw DatasetError("input width does not match the scaler");
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = scale_one(i, x[i]);
  return y;
}

std::vector<double> Scaler::unscale(const std::vector<double>& y) const {
  if (y.size() != ranges_.size()) throw DatasetError("input width does not match the scaler");
  std::vector<double> x(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) x[i] = unscale_one(i, y[i]);
  return x;
}

void Scaler::write_csv(std::ostream& out) const {
  out << "feature,min,max\n";
  for (const Range& r : ranges_) {
    out << r.name << ',';
    put_double(out, r.min);
    out << ',';
    put_double(out, r.max);
    out << '\n';
  }
}

Scaler Scaler::read_csv(std::istream& in) {
  Scaler s;
  std::string line;
  if (!std::getline(in, line) || (line != "feature,min,max" && line != "feature,min,max\r")) {
    throw DatasetError("line 1: expected header feature,min,max");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_commas(line);
    Range r;
    if (f.size() != 3 || !get_double(f[1], r.min) || !get_double(f[2], r.max) || r.min > r.max) {
      throw DatasetError("line " + std::to_string(lineno) + ": malformed scaler row");
    }
    r.name = std::string(f[0]);
    s.ranges_.push_back(std::move(r));
  }
  return s;
}

std::vector<std::size_t> undersample_bins(const std::vector<double>& targets, double bin_width, std::size_t bins,
                                          std::size_t min_bin_rows, RandomStream& rs,
                                          std::vector<std::size_t>* counts_before,
                                          std::vector<std::size_t>* counts_after) {
  std::vector<std::vector<std::size_t>> members(bins);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto b = static_cast<std::size_t>(std::max(0.0, std::floor(targets[i] / bin_width)));
    if (b < bins) members[b].push_back(i);
  }
  std::size_t size = std::numeric_limits<std::size_t>::max();
  for (const auto& m : members) {
    if (m.size() >= std::max<std::size_t>(min_bin_rows, 1)) size = std::min(size, m.size());
  }
  if (size == std::numeric_limits<std::size_t>::max()) {
    throw DatasetError("no target bin has at least " + std::to_string(min_bin_rows) + " training rows");
  }
  if (counts_before) {
    counts_before->clear();
    for (const auto& m : members) counts_before->push_back(m.size());
  }
  std::vector<std::size_t> keep;
  for (auto& m : members) {
    if (m.size() > size) {
      // Partial Fisher-Yates: choose `size` members uniformly.
      for (std::size_t i = 0; i < size; ++i) {
        const auto j = static_cast<std::size_t>(rs.uniform_int(static_cast<std::int64_t>(i),
                                                               static_cast<std::int64_t>(m.size() - 1)));
        std::swap(m[i], m[j]);
      }
      m.resize(size);
    }
    keep.insert(keep.end(), m.begin(), m.end());
  }
  if (counts_after) {
    counts_after->clear();
    for (const auto& m : members) counts_after->push_back(m.size());
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

PreparedData preprocess(const Dataset& d, const PreprocessOptions& o) {
  if (d.rows.empty()) throw DatasetError("dataset is empty");
  if (!(o.train_fraction > 0 && o.train_fraction < 1)) throw DatasetError("train fraction must lie in (0, 1)");
  PreparedData out;
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    if (d.rows[i].target_dc_us < o.target_limit_us && d.rows[i].target_dc_us >= 0) {
      usable.push_back(i);
    } else {
      ++out.dropped_over_limit;
    }
  }
  if (usable.size() < 2) throw DatasetError("fewer than two rows below the target limit");
  RandomStream rs = Rng(o.seed).derive("preprocess.split", 0);
  for (std::size_t i = usable.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rs.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(usable[i - 1], usable[j]);
  }
  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(o.train_fraction * static_cast<double>(usable.size()))), 1,
      usable.size() - 1);
  std::vector<std::size_t> train(usable.begin(), usable.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> valid(usable.begin() + static_cast<std::ptrdiff_t>(n_train), usable.end());
  std::sort(train.begin(), train.end());
  std::sort(valid.begin(), valid.end());

  std::vector<std::vector<double>> train_inputs;
  train_inputs.reserve(train.size());
  for (std::size_t i : train) train_inputs.push_back(d.rows[i].inputs());
  out.scaler = Scaler::fit(train_inputs, feature_names(d.k), &out.warnings);

  std::vector<std::size_t> chosen(train.size());
  std::iota(chosen.begin(), chosen.end(), 0);
  if (o.undersample) {
    std::vector<double> targets;
    targets.reserve(train.size());
    for (std::size_t i : train) targets.push_back(d.rows[i].target_dc_us);
    const auto bins = static_cast<std::size_t>(std::ceil(o.target_limit_us / o.bin_width_us));
    RandomStream us = Rng(o.seed).derive("preprocess.undersample", 0);
    chosen = undersample_bins(targets, o.bin_width_us, bins, o.min_bin_rows, us, &out.bin_counts_before,
                              &out.bin_counts_after);
  }
  for (std::size_t c : chosen) {
    out.train_x.push_back(out.scaler.scale(train_inputs[c]));
    out.train_y.push_back(d.rows[train[c]].target_dc_us);
    out.train_ac.push_back(d.rows[train[c]].ac);
  }
  for (std::size_t i : valid) {
    out.valid_x.push_back(out.scaler.scale(d.rows[i].inputs()));
    out.valid_y.push_back(d.rows[i].target_dc_us);
    out.valid_ac.push_back(d.rows[i].ac);
  }
  return out;
}

}  // namespace eaps
