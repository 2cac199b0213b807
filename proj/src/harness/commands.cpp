#include "eaps/harness/commands.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "eaps/predictor/evaluation.hpp"
#include "eaps/traffic/bursts.hpp"
#include "eaps/traffic/trace_io.hpp"

namespace eaps {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <class T>
std::string opt(const std::optional<T>& v) {
  if (!v) return {};
  if constexpr (std::is_floating_point_v<T>) {
    return num(*v);
  } else {
    return std::to_string(*v);
  }
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  fn(f);
  f.flush();
  if (!f) throw IoError("write failed for " + path.string());
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  return f;
}

void prepare_out(const fs::path& out, const ScenarioConfig& cfg) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  write_file(out / "config.txt", [&](std::ostream& o) { write_config(o, cfg); });
}

PreprocessOptions preprocess_options(const ScenarioConfig& cfg) {
  PreprocessOptions p = cfg.preprocess;
  p.seed = cfg.seed;
  return p;
}

EtrParams etr_params(const ScenarioConfig& cfg) {
  EtrParams e = cfg.etr;
  e.seed = cfg.seed;
  return e;
}

double pooled_sigma(const EvalReport& r) { return r.errors.empty() ? 1000.0 : std::max(1.0, stddev(r.errors)); }

void write_metric(std::ostream& o, const char* name, double v) { o << name << ',' << num(v) << '\n'; }

}  // namespace

void write_transactions_csv(std::ostream& out, const std::vector<TxnOutcome>& txns) {
  out << "txn_id,discipline,ac,t1_us,t2_us,t7_us,t8_us,duration_us,energy_uj,dc_actual_us,dc_pred_us,sleep_error_us,"
         "flags\n";
  for (const TxnOutcome& t : txns) {
    const TransactionRecord& r = t.record;
    out << r.txn_id << ',' << to_string(t.label) << ',' << to_string(r.ac) << ',' << r.t1 << ',' << opt(r.t2) << ','
        << opt(r.t7) << ',' << opt(r.t8) << ',';
    if (r.completed) out << r.duration_us;
    out << ',' << num(r.energy_uj) << ',' << opt(t.dc_actual_us) << ',' << opt(t.dc_pred_us) << ','
        << opt(t.sleep_error_us) << ',' << format_flags(r.flags) << '\n';
  }
}

ResultRow summarize(const std::vector<TxnOutcome>& txns, Discipline d, const ScenarioConfig& cfg) {
  ResultRow row;
  row.discipline = d;
  row.scenario = cfg.scenario;
  row.server = cfg.server;
  std::vector<double> energy, duration;
  for (const TxnOutcome& t : txns) {
    if (t.label != d) continue;
    if ((t.record.flags & txn_flags::degraded) != 0) row.degraded = true;
    if (!t.record.completed) continue;
    energy.push_back(t.record.energy_uj);
    duration.push_back(static_cast<double>(t.record.duration_us));
  }
  row.count = energy.size();
  if (!energy.empty()) {
    row.energy_uj = quartiles(energy);
    row.duration_us = quartiles(duration);
  }
  row.below_minimum = row.count < cfg.min_transactions;
  return row;
}

void write_result_table_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "discipline,scenario,server,count,energy_q1_uj,energy_median_uj,energy_q3_uj,duration_q1_us,"
         "duration_median_us,duration_q3_us,flags\n";
  for (const ResultRow& r : rows) {
    std::string flags;
    if (r.degraded) flags = "degraded";
    if (r.below_minimum) flags += flags.empty() ? "below_minimum" : "|below_minimum";
    out << to_string(r.discipline) << ',' << to_string(r.scenario) << ',' << to_string(r.server) << ',' << r.count;
    if (r.count > 0) {
      for (double v : {r.energy_uj.q1, r.energy_uj.median, r.energy_uj.q3, r.duration_us.q1, r.duration_us.median,
                       r.duration_us.q3}) {
        out << ',' << num(v);
      }
    } else {
      out << ",,,,,,";
    }
    out << ',' << flags << '\n';
  }
}

void save_model(const fs::path& dir, const ModelBundle& m) {
  write_file(dir / "model.csv", [&](std::ostream& o) { m.model.model.write(o); });
  write_file(dir / "scaler.csv", [&](std::ostream& o) { m.model.scaler.write_csv(o); });
  write_file(dir / "residuals.csv", [&](std::ostream& o) { m.model.residuals.write_csv(o); });
  write_file(dir / "model_info.csv", [&](std::ostream& o) {
    o << "key,value\n";
    o << "k," << m.model.k << '\n';
    o << "mean_target_us," << num(m.mean_target_us) << '\n';
    o << "fallback_sigma_us," << num(m.model.fallback_sigma_us) << '\n';
  });
}

ModelBundle load_model(const fs::path& dir) {
  ModelBundle b;
  {
    auto f = open_input(dir / "scaler.csv");
    b.model.scaler = Scaler::read_csv(f);
  }
  {
    auto f = open_input(dir / "model.csv");
    b.model.model = EtrModel::read(f, b.model.scaler.size());
  }
  {
    auto f = open_input(dir / "residuals.csv");
    b.model.residuals = ResidualStats::read_csv(f);
  }
  auto f = open_input(dir / "model_info.csv");
  std::string line;
  std::getline(f, line);
  while (std::getline(f, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ModelError("model_info.csv: malformed line '" + line + "'");
    const std::string key = line.substr(0, comma), value = line.substr(comma + 1);
    try {
      if (key == "k") {
        b.model.k = std::stoul(value);
      } else if (key == "mean_target_us") {
        b.mean_target_us = std::stod(value);
      } else if (key == "fallback_sigma_us") {
        b.model.fallback_sigma_us = std::stod(value);
      } else {
        throw ModelError("model_info.csv: unknown key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw ModelError("model_info.csv: bad value for '" + key + "'");
    }
  }
  b.model.validate();
  return b;
}

Dataset load_dataset(const fs::path& path) {
  auto f = open_input(path);
  return read_dataset_csv(f);
}

ExitCode cmd_generate(const ScenarioConfig& cfg, const fs::path& out, std::ostream& log) {
  cfg.validate();
  prepare_out(out, cfg);
  RunOptions o;
  o.discipline = Discipline::CAM;
  o.collect_dataset = true;
  o.record_trace = true;
  const RunResult r = run_scenario(cfg, o);

  Dataset d;
  d.k = cfg.history_k;
  d.rows = r.dataset;
  write_file(out / "dataset.csv", [&](std::ostream& f) { write_dataset_csv(f, d); });
  write_file(out / "delays.csv", [&](std::ostream& f) { write_delays_csv(f, d); });
  write_file(out / "trace.csv", [&](std::ostream& f) { write_trace_csv(f, r.trace, true); });
  write_file(out / "transactions.csv", [&](std::ostream& f) { write_transactions_csv(f, r.transactions); });

  std::array<std::size_t, kNumAcs> per_ac{};
  std::size_t completed = 0;
  for (const TxnOutcome& t : r.transactions) {
    ++per_ac[priority_rank(t.record.ac)];
    if (t.record.completed) ++completed;
  }
  write_file(out / "summary.csv", [&](std::ostream& f) {
    f << "key,value\n";
    f << "transactions," << r.transactions.size() << '\n';
    f << "completed," << completed << '\n';
    f << "dataset_rows," << d.rows.size() << '\n';
    f << "trace_records," << r.trace.size() << '\n';
    f << "samples," << r.stats.samples << '\n';
    f << "stale_samples," << r.stats.stale_samples << '\n';
    f << "simulated_us," << r.stats.end << '\n';
    for (AccessCategory ac : kAcsByPriority) f << "ac_" << to_string(ac) << ',' << per_ac[priority_rank(ac)] << '\n';
  });
  log << "generate: " << r.transactions.size() << " transactions, " << d.rows.size() << " dataset rows, "
      << r.trace.size() << " trace records -> " << out.string() << '\n';
  return ExitCode::ok;
}

ExitCode cmd_train(const ScenarioConfig& cfg, const fs::path& dataset, const fs::path& out, std::ostream& log) {
  cfg.validate();
  const Dataset d = load_dataset(dataset);
  if (d.k < cfg.history_k) {
    throw DatasetError("dataset holds " + std::to_string(d.k) + " samples per row, config asks for " +
                       std::to_string(cfg.history_k));
  }
  const Dataset data = d.k == cfg.history_k ? d : with_history(d, cfg.history_k);
  prepare_out(out, cfg);

  const PreparedData prep = preprocess(data, preprocess_options(cfg));

  std::vector<EtrParams> candidates;
  if (cfg.etr_grid) {
    for (std::size_t trees : {50, 100}) {
      for (std::size_t depth : {10, 20}) {
        for (std::size_t leaf : {1, 5}) {
          EtrParams e = etr_params(cfg);
          e.n_trees = trees;
          e.max_depth = depth;
          e.min_samples_leaf = leaf;
          candidates.push_back(e);
        }
      }
    }
  } else {
    candidates.push_back(etr_params(cfg));
  }

  struct Fitted {
    EtrParams params;
    EtrModel model;
    EvalReport report;
  };
  std::vector<Fitted> fitted;
  std::size_t best = 0;
  for (const EtrParams& e : candidates) {
    EtrModel m(e);
    m.fit(prep.train_x, prep.train_y);
    EvalReport rep = evaluate(m, prep.valid_x, prep.valid_y, prep.valid_ac);
    fitted.push_back({e, std::move(m), std::move(rep)});
    if (fitted.back().report.mae_us < fitted[best].report.mae_us) best = fitted.size() - 1;
  }
  const Fitted& chosen = fitted[best];

  MeanRegressor baseline;
  baseline.fit(prep.train_x, prep.train_y);
  const EvalReport base = evaluate(baseline, prep.valid_x, prep.valid_y, prep.valid_ac);

  ModelBundle b;
  b.model.model = chosen.model;
  b.model.scaler = prep.scaler;
  b.model.residuals = ResidualStats::from(chosen.report);
  b.model.k = cfg.history_k;
  b.model.fallback_sigma_us = pooled_sigma(chosen.report);
  b.mean_target_us = mean(prep.train_y);
  save_model(out, b);

  write_file(out / "validation.csv", [&](std::ostream& f) {
    f << "metric,value\n";
    write_metric(f, "train_rows", static_cast<double>(prep.train_y.size()));
    write_metric(f, "validation_rows", static_cast<double>(prep.valid_y.size()));
    write_metric(f, "dropped_over_limit", static_cast<double>(prep.dropped_over_limit));
    write_metric(f, "mae_us", chosen.report.mae_us);
    write_metric(f, "baseline_mae_us", base.mae_us);
    write_metric(f, "within_4300us", chosen.report.fraction_within(4300.0));
    write_metric(f, "within_12000us", chosen.report.fraction_within(12000.0));
  });
  write_file(out / "bins.csv", [&](std::ostream& f) {
    f << "bin_lo_us,bin_hi_us,rows_before,rows_after\n";
    const double w = cfg.preprocess.bin_width_us;
    for (std::size_t i = 0; i < prep.bin_counts_before.size(); ++i) {
      const std::size_t after = i < prep.bin_counts_after.size() ? prep.bin_counts_after[i] : 0;
      f << num(w * static_cast<double>(i)) << ',' << num(w * static_cast<double>(i + 1)) << ','
        << prep.bin_counts_before[i] << ',' << after << '\n';
    }
  });
  if (cfg.etr_grid) {
    write_file(out / "grid.csv", [&](std::ostream& f) {
      f << "trees,max_depth,min_leaf,validation_mae_us,chosen\n";
      for (std::size_t i = 0; i < fitted.size(); ++i) {
        const EtrParams& e = fitted[i].params;
        f << e.n_trees << ',' << e.max_depth << ',' << e.min_samples_leaf << ',' << num(fitted[i].report.mae_us) << ','
          << (i == best ? 1 : 0) << '\n';
      }
    });
  }
  for (const std::string& w : prep.warnings) log << "warning: " << w << '\n';
  log << "train: " << prep.train_y.size() << " training rows, validation MAE " << chosen.report.mae_us
      << " us (mean baseline " << base.mae_us << " us) -> " << out.string() << '\n';
  return ExitCode::ok;
}

ExitCode cmd_evaluate(const ScenarioConfig& cfg, const fs::path& model_dir, const fs::path& test, const fs::path& out,
                      std::ostream& log) {
  cfg.validate();
  const ModelBundle b = load_model(model_dir);
  Dataset d = load_dataset(test);
  if (d.k < b.model.k) {
    throw DatasetError("test set holds " + std::to_string(d.k) + " samples per row, model needs " +
                       std::to_string(b.model.k));
  }
  if (d.k > b.model.k) d = with_history(d, b.model.k);
  prepare_out(out, cfg);
  const ScaledRows s = scale_rows(d, b.model.scaler, cfg.preprocess.target_limit_us);
  const EvalReport rep = evaluate(b.model.model, s.x, s.y, s.ac);
  double base_mae = 0.0;
  for (double y : s.y) base_mae += std::abs(b.mean_target_us - y);
  if (!s.y.empty()) base_mae /= static_cast<double>(s.y.size());

  std::vector<double> abs_err;
  abs_err.reserve(rep.errors.size());
  for (double e : rep.errors) abs_err.push_back(std::abs(e));

  write_file(out / "evaluation.csv", [&](std::ostream& f) {
    f << "metric,value\n";
    write_metric(f, "rows", static_cast<double>(rep.count));
    write_metric(f, "mae_us", rep.mae_us);
    write_metric(f, "baseline_mae_us", base_mae);
    write_metric(f, "within_4300us", rep.fraction_within(4300.0));
    write_metric(f, "within_12000us", rep.fraction_within(12000.0));
    write_metric(f, "abs_error_p95_us", abs_err.empty() ? 0.0 : quantile(abs_err, 0.95));
  });
  write_file(out / "per_ac.csv", [&](std::ostream& f) { ResidualStats::from(rep).write_csv(f); });
  write_file(out / "ecdf.csv", [&](std::ostream& f) { write_ecdf_csv(f, rep.errors); });
  write_file(out / "predictions.csv", [&](std::ostream& f) {
    f << "ac,actual_us,predicted_us\n";
    for (std::size_t i = 0; i < rep.errors.size(); ++i) {
      f << to_string(s.ac[i]) << ',' << num(s.y[i]) << ',' << num(s.y[i] + rep.errors[i]) << '\n';
    }
  });
  for (const std::string& w : rep.warnings) log << "warning: " << w << '\n';
  log << "evaluate: " << rep.count << " rows, MAE " << rep.mae_us << " us (mean baseline " << base_mae
      << " us); prediction time median " << rep.timing.median_ns << " ns [" << rep.timing.q1_ns << ", "
      << rep.timing.q3_ns << "]\n";
  return ExitCode::ok;
}

ExitCode cmd_sweep(const ScenarioConfig& cfg, const fs::path& train, const fs::path& test, const SweepRequest& req,
                   const fs::path& out, std::ostream& log) {
  cfg.validate();
  const Dataset tr = load_dataset(train);
  const Dataset te = load_dataset(test);
  prepare_out(out, cfg);
  SweepOptions o;
  o.preprocess = preprocess_options(cfg);
  o.etr = etr_params(cfg);
  o.subset_seed = cfg.seed;
  std::vector<std::string> warnings;
  std::vector<SweepPoint> sizes, history;
  if (!req.sizes.empty()) {
    const std::size_t k = std::min({cfg.history_k, tr.k, te.k});
    sizes = sweep_training_size(with_history(tr, k), with_history(te, k), req.sizes, o, &warnings);
  }
  if (!req.history.empty()) history = sweep_history(tr, te, req.history, o, &warnings);
  write_file(out / "sweep.csv", [&](std::ostream& f) {
    f << "sweep,value,train_rows,mae_us,skipped\n";
    const auto rows = [&](const char* name, const std::vector<SweepPoint>& pts) {
      for (const SweepPoint& p : pts) {
        f << name << ',' << p.value << ',' << p.train_rows << ',';
        if (!p.skipped) f << num(p.mae_us);
        f << ',' << (p.skipped ? 1 : 0) << '\n';
      }
    };
    rows("training_rows", sizes);
    rows("history", history);
  });
  for (const std::string& w : warnings) log << "warning: " << w << '\n';
  log << "sweep: " << sizes.size() << " size points, " << history.size() << " history points -> " << out.string()
      << '\n';
  return ExitCode::ok;
}

ExitCode cmd_compare(const ScenarioConfig& cfg, const std::optional<fs::path>& model_dir, const fs::path& out,
                     std::ostream& log) {
  cfg.validate();
  std::optional<ModelBundle> bundle;
  if (model_dir) bundle = load_model(*model_dir);
  if (bundle && bundle->model.k != cfg.history_k) {
    throw ModelError("model uses " + std::to_string(bundle->model.k) + " samples, config history_k is " +
                     std::to_string(cfg.history_k));
  }
  prepare_out(out, cfg);
  std::vector<TxnOutcome> all;
  std::vector<ResultRow> rows;
  for (Discipline d : cfg.disciplines) {
    RunOptions o;
    o.discipline = d;
    o.model = bundle ? &bundle->model : nullptr;
    RunResult r = run_scenario(cfg, o);
    rows.push_back(summarize(r.transactions, d, cfg));
    if (r.stats.degraded) rows.back().degraded = true;
    all.insert(all.end(), std::make_move_iterator(r.transactions.begin()),
               std::make_move_iterator(r.transactions.end()));
  }
  write_file(out / "result_table.csv", [&](std::ostream& f) { write_result_table_csv(f, rows); });
  write_file(out / "transactions.csv", [&](std::ostream& f) { write_transactions_csv(f, all); });
  bool flagged = false;
  for (const ResultRow& r : rows) {
    log << "compare: " << to_string(r.discipline) << " n=" << r.count << " duration median " << r.duration_us.median
        << " us, energy median " << r.energy_uj.median << " uJ";
    if (r.degraded) log << " [degraded to PSM: no model]";
    if (r.below_minimum) log << " [below the " << cfg.min_transactions << "-transaction minimum]";
    log << '\n';
    flagged = flagged || r.degraded || r.below_minimum;
  }
  return flagged ? ExitCode::degraded : ExitCode::ok;
}

ExitCode cmd_metrics(const ScenarioConfig& cfg, const std::vector<fs::path>& traces, const fs::path& out,
                     std::ostream& log) {
  cfg.validate();
  if (traces.empty()) throw ConfigError("metrics needs at least one trace file");
  std::vector<TraceMetrics> results;
  for (const fs::path& p : traces) {
    auto f = open_input(p);
    try {
      results.push_back(trace_metrics(read_trace_csv(f), cfg.burst_threshold_us));
    } catch (const TraceParseError& e) {
      throw TraceParseError(p.string() + ": " + e.what(), e.lines());
    }
  }
  prepare_out(out, cfg);
  write_file(out / "metrics.csv", [&](std::ostream& f) {
    f << "trace,packets,groups,bursts,window_s,threshold_ms,bursts_per_second,burstiness,dynamicity,"
         "mean_burst_bytes,stddev_burst_bytes,stddev_gap_s\n";
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const TraceMetrics& m = results[i];
      f << traces[i].string() << ',' << m.packets << ',' << m.groups << ',' << m.bursts << ',' << num(m.window_s)
        << ',' << num(m.threshold_ms) << ',' << num(m.bursts_per_second) << ',' << num(m.burstiness) << ','
        << num(m.dynamicity) << ',' << num(m.mean_burst_bytes) << ',' << num(m.stddev_burst_bytes) << ','
        << num(m.stddev_gap_s) << '\n';
    }
  });
  log << "metrics: " << traces.size() << " trace(s) -> " << (out / "metrics.csv").string() << '\n';
  return ExitCode::ok;
}

ExitCode exit_code_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return ExitCode::config;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return ExitCode::io;
  } catch (const std::ios_base::failure& e) {
    err << "I/O error: " << e.what() << '\n';
    return ExitCode::io;
  } catch (const TraceParseError& e) {
    err << "trace error: " << e.what() << '\n';
    return ExitCode::data;
  } catch (const DatasetError& e) {
    err << "dataset error: " << e.what() << '\n';
    return ExitCode::data;
  } catch (const ModelError& e) {
    err << "model error: " << e.what() << '\n';
    return ExitCode::data;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return ExitCode::config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return ExitCode::failure;
  } catch (...) {
    err << "error: unknown exception\n";
    return ExitCode::failure;
  }
}

}  // namespace eaps
