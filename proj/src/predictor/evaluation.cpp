#include "eaps/predictor/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "eaps/core/stats.hpp"

namespace eaps {

double EvalReport::fraction_within(double bound_us) const {
  if (errors.empty()) return 0.0;
  const auto n = std::count_if(errors.begin(), errors.end(), [&](double e) { return std::abs(e) <= bound_us; });
  return static_cast<double>(n) / static_cast<double>(errors.size());
}

EvalReport evaluate(const Regressor& model, const Matrix& x, const std::vector<double>& y,
                    const std::vector<AccessCategory>& acs, bool clamp) {
  if (x.size() != y.size() || x.size() != acs.size()) throw ModelError("evaluation inputs differ in length");
  EvalReport r;
  r.count = x.size();
  r.errors.reserve(x.size());
  std::vector<double> ns;
  ns.reserve(x.size());
  std::array<std::vector<double>, kNumAcs> by_ac;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    double p = model.predict(x[i]);
    const auto t1 = std::chrono::steady_clock::now();
    if (clamp) p = clamp_dc_us(p);
    ns.push_back(static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
    const double e = p - y[i];
    r.errors.push_back(e);
    by_ac[priority_rank(acs[i])].push_back(e);
  }
  if (!x.empty()) {
    double abs_sum = 0.0;
    for (double e : r.errors) abs_sum += std::abs(e);
    r.mae_us = abs_sum / static_cast<double>(r.errors.size());
    const Quartiles q = quartiles(ns);
    r.timing = {q.q1, q.median, q.q3};
  }
  for (std::size_t a = 0; a < kNumAcs; ++a) {
    if (by_ac[a].empty()) {
      r.warnings.push_back("no evaluation rows for AC " + std::string(to_string(kAcsByPriority[a])));
      continue;
    }
    AcErrorStats s;
    s.count = by_ac[a].size();
    double abs_sum = 0.0;
    for (double e : by_ac[a]) abs_sum += std::abs(e);
    s.mae_us = abs_sum / static_cast<double>(s.count);
    s.sigma_us = stddev(by_ac[a]);
    r.per_ac[a] = s;
  }
  return r;
}

ResidualStats ResidualStats::from(const EvalReport& r) {
  ResidualStats s;
  s.per_ac = r.per_ac;
  return s;
}

double ResidualStats::sigma_us(AccessCategory ac, double fallback_us) const {
  const auto& s = per_ac[priority_rank(ac)];
  return s ? s->sigma_us : fallback_us;
}

void ResidualStats::write_csv(std::ostream& out) const {
  out << "ac,count,mae_us,sigma_us\n";
  for (std::size_t a = 0; a < kNumAcs; ++a) {
    if (!per_ac[a]) continue;
    std::ostringstream row;
    row.precision(17);
    row << to_string(kAcsByPriority[a]) << ',' << per_ac[a]->count << ',' << per_ac[a]->mae_us << ','
        << per_ac[a]->sigma_us;
    out << row.str() << '\n';
  }
}

ResidualStats ResidualStats::read_csv(std::istream& in) {
  ResidualStats s;
  std::string line;
  if (!std::getline(in, line) || line.rfind("ac,count,mae_us,sigma_us", 0) != 0) {
    throw ModelError("line 1: expected header ac,count,mae_us,sigma_us");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f[4];
    for (auto& x : f) std::getline(ls, x, ',');
    const auto ac = parse_access_category(f[0]);
    try {
      if (!ac) throw ModelError("bad AC");
      AcErrorStats a;
      a.count = std::stoul(f[1]);
      a.mae_us = std::stod(f[2]);
      a.sigma_us = std::stod(f[3]);
      if (a.sigma_us < 0) throw ModelError("negative sigma");
      s.per_ac[priority_rank(*ac)] = a;
    } catch (const std::exception&) {
      throw ModelError("line " + std::to_string(lineno) + ": malformed residual row");
    }
  }
  return s;
}

void write_ecdf_csv(std::ostream& out, const std::vector<double>& errors) {
  std::vector<double> e = errors;
  std::sort(e.begin(), e.end());
  out << "error_us,fraction\n";
  std::ostringstream row;
  row.precision(17);
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (i + 1 < e.size() && e[i + 1] == e[i]) continue;
    row.str("");
    row << e[i] << ',' << static_cast<double>(i + 1) / static_cast<double>(e.size());
    out << row.str() << '\n';
  }
}

ScaledRows scale_rows(const Dataset& test, const Scaler& scaler, double target_limit_us) {
  ScaledRows s;
  for (const DatasetRow& r : test.rows) {
    if (!(r.target_dc_us < target_limit_us) || r.target_dc_us < 0) continue;
    s.x.push_back(scaler.scale(r.inputs()));
    s.y.push_back(r.target_dc_us);
    s.ac.push_back(r.ac);
  }
  return s;
}

TrainedModel train_model(const Dataset& d, const PreprocessOptions& p, const EtrParams& etr) {
  PreparedData prep = preprocess(d, p);
  TrainedModel t;
  t.model = EtrModel(etr);
  t.model.fit(prep.train_x, prep.train_y);
  t.scaler = std::move(prep.scaler);
  t.validation = evaluate(t.model, prep.valid_x, prep.valid_y, prep.valid_ac);
  t.residuals = ResidualStats::from(t.validation);
  t.train_rows = prep.train_y.size();
  return t;
}

namespace {

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  RandomStream rs = Rng(seed).derive("sweep.subset", 0);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rs.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

}  // namespace

std::vector<SweepPoint> sweep_training_size(const Dataset& train, const Dataset& test,
                                            const std::vector<std::size_t>& sizes, const SweepOptions& o,
                                            std::vector<std::string>* warnings) {
  const auto perm = permutation(train.rows.size(), o.subset_seed);
  std::vector<SweepPoint> out;
  for (std::size_t n : sizes) {
    SweepPoint pt;
    pt.value = n;
    if (n > train.rows.size()) {
      pt.skipped = true;
      if (warnings) {
        warnings->push_back("training size " + std::to_string(n) + " exceeds the " +
                            std::to_string(train.rows.size()) + " available rows; skipped");
      }
      out.push_back(pt);
      continue;
    }
    Dataset sub;
    sub.k = train.k;
    std::vector<std::size_t> chosen(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n));
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t i : chosen) sub.rows.push_back(train.rows[i]);
    const TrainedModel m = train_model(sub, o.preprocess, o.etr);
    const ScaledRows t = scale_rows(test, m.scaler, o.preprocess.target_limit_us);
    pt.train_rows = m.train_rows;
    pt.mae_us = evaluate(m.model, t.x, t.y, t.ac).mae_us;
    out.push_back(pt);
  }
  return out;
}

std::vector<SweepPoint> sweep_history(const Dataset& train, const Dataset& test, const std::vector<std::size_t>& ks,
                                      const SweepOptions& o, std::vector<std::string>* warnings) {
  std::vector<SweepPoint> out;
  for (std::size_t k : ks) {
    SweepPoint pt;
    pt.value = k;
    if (k == 0 || k > train.k || k > test.k) {
      pt.skipped = true;
      if (warnings) warnings->push_back("history depth " + std::to_string(k) + " not available; skipped");
      out.push_back(pt);
      continue;
    }
    const TrainedModel m = train_model(with_history(train, k), o.preprocess, o.etr);
    const ScaledRows t = scale_rows(with_history(test, k), m.scaler, o.preprocess.target_limit_us);
    pt.train_rows = m.train_rows;
    pt.mae_us = evaluate(m.model, t.x, t.y, t.ac).mae_us;
    out.push_back(pt);
  }
  return out;
}

}  // namespace eaps
