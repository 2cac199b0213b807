#include "eaps/harness/world.hpp"

#include <functional>
#include <map>
#include <memory>

#include "eaps/medium/interferer.hpp"
#include "eaps/traffic/load_node.hpp"

namespace eaps {

namespace {

class World {
 public:
  World(const ScenarioConfig& cfg, const RunOptions& opt)
      : cfg_(cfg),
        opt_(opt),
        rng_(cfg.seed),
        channel_(sim_, rng_, cfg.channel),
        ap_(sim_, channel_, cfg.ap),
        collector_(sim_, channel_, ap_, rng_, cfg.collector),
        server_(sim_, ap_, rng_, cfg.server_profile(), cfg.reply_bytes) {
    degraded_ = is_eaps(opt.discipline) && opt.model == nullptr;
    const Discipline actual = degraded_ ? Discipline::PSM : opt.discipline;
    SchedulerConfig sc = cfg.scheduler;
    sc.k = cfg.history_k;
    scheduler_ = std::make_unique<Scheduler>(sim_, ap_, collector_, sc, is_eaps(actual) ? opt.model : nullptr);

    StationConfig st = cfg.station;
    st.discipline = actual;
    st.power = cfg.power_table();
    for (int i = 0; i < cfg.iot_stations; ++i) {
      const NodeId id = static_cast<NodeId>(i + 1);
      stations_.push_back(std::make_unique<Station>(sim_, channel_, ap_, id, st));
      stations_.back()->set_completion_handler([this, i](TransactionRecord&& r) { on_complete(i, std::move(r)); });
    }

    if (cfg.background) {
      const TrafficConfig tc = cfg.traffic_config();
      generator_ = std::make_unique<TrafficGenerator>(tc, cfg.seed);
      std::vector<LoadNode*> ptrs;
      for (int i = 0; i < tc.load_nodes; ++i) {
        nodes_.push_back(std::make_unique<LoadNode>(channel_, ap_, kFirstLoadNode + static_cast<NodeId>(i)));
        ptrs.push_back(nodes_.back().get());
      }
      driver_ = std::make_unique<TrafficDriver>(sim_, ap_, std::move(ptrs), *generator_, tc.flows_per_node,
                                                cfg.horizon_us, tc.tcp_window_packets);
      if (opt.record_trace) driver_->set_record_observer([this](const TraceRecord& r) { result_.trace.push_back(r); });
    }
    if (cfg.interferer.airtime_fraction > 0.0) {
      interferer_ = std::make_unique<Interferer>(sim_, channel_, rng_.derive("interferer", 0), cfg.interferer);
    }

    ap_.set_uplink_observer([this](const Packet& p, SimTime now) { scheduler_->on_uplink(p, now); });
    ap_.set_egress_observer([this](Packet&& p, SimTime t3) { server_.on_egress(std::move(p), t3); });
    server_.set_arrival_handler([this](const Packet& r, SimTime t3, SimTime t6) { scheduler_->on_reply_arrival(r, t3, t6); });
    ap_.set_downlink_ready_observer([this](const Packet& p, SimTime now) {
      if (p.txn && p.kind == PacketKind::data) ready_[*p.txn] = now;
    });
  }

  RunResult run() {
    if (cfg_.horizon_us <= 0) return std::move(result_);
    ap_.start();
    collector_.start();
    if (driver_) driver_->start();
    if (interferer_) interferer_->start();
    // Let the collector fill its history before the first request.
    const SimTime warmup = static_cast<SimTime>(cfg_.collector.history + 1) * cfg_.collector.interval_us;
    for (int i = 0; i < cfg_.iot_stations; ++i) schedule_next(i, warmup);
    sim_.schedule_at(cfg_.horizon_us, "harness.horizon", [this] { stop_ = true; });
    while (!stop_ && sim_.step()) {
    }
    result_.stats.end = sim_.now();
    result_.stats.events = sim_.dispatched();
    result_.stats.background_packets = driver_ ? driver_->injected() : 0;
    result_.stats.controls_sent = scheduler_->controls_sent();
    result_.stats.samples = collector_.samples_taken();
    result_.stats.stale_samples = collector_.stale_samples();
    result_.stats.degraded = degraded_;
    return std::move(result_);
  }

 private:
  std::uint64_t txn_id(int station, std::uint64_t index) const {
    return index * static_cast<std::uint64_t>(cfg_.iot_stations) + static_cast<std::uint64_t>(station);
  }

  /// Gap and AC of every transaction come from a stream keyed by its id, so
  /// runs of different disciplines request the same sequence.
  void schedule_next(int station, SimTime after) {
    const std::uint64_t txn = txn_id(station, next_index_[station]++);
    RandomStream rs = rng_.derive("iot.txn", txn);
    const Duration gap = rs.uniform_int(cfg_.gap_min_us, cfg_.gap_max_us);
    const AccessCategory ac = kAcsByPriority[static_cast<std::size_t>(rs.uniform_int(0, 3))];
    sim_.schedule_at(after + gap, "harness.request", [this, station, txn, ac] {
      stations_[static_cast<std::size_t>(station)]->start_transaction(txn, ac, cfg_.uplink_bytes);
      ++result_.stats.started;
    });
  }

  void on_complete(int station, TransactionRecord&& r) {
    TxnOutcome o;
    o.label = opt_.discipline;
    if (degraded_) r.flags |= txn_flags::degraded;
    if (auto pr = scheduler_->take(r.txn_id)) {
      o.t3 = pr->t3;
      o.t6 = pr->t6;
      o.dc_pred_us = pr->dc_pred_us;
      if (pr->clamped) r.flags |= txn_flags::schedule_clamped;
      if (opt_.collect_dataset && r.completed && pr->features && pr->t3 && pr->t6 && r.t8) {
        DatasetRow row;
        row.txn_id = r.txn_id;
        row.target_dc_us = static_cast<double>(*r.t8 - *pr->t6);
        row.ac = r.ac;
        row.da_plus_db_us = pr->features->da_plus_db_us;
        for (const FeatureSample& s : pr->features->samples) {
          const auto v = s.values();
          row.samples.insert(row.samples.end(), v.begin(), v.end());
        }
        row.da_us = pr->da_us;
        row.db_us = static_cast<double>(*pr->t6 - *pr->t3);
        result_.dataset.push_back(std::move(row));
      }
    }
    if (is_eaps(r.discipline) && !o.dc_pred_us) r.flags |= txn_flags::no_prediction;
    if (auto it = ready_.find(r.txn_id); it != ready_.end()) {
      o.ready = it->second;
      ready_.erase(it);
    }
    if (r.completed && r.t8 && o.t6) o.dc_actual_us = static_cast<double>(*r.t8 - *o.t6);
    if (r.scheduled_wake && o.ready) o.sleep_error_us = static_cast<double>(*r.scheduled_wake - *o.ready);
    o.record = std::move(r);
    const bool completed = o.record.completed;
    result_.transactions.push_back(std::move(o));
    if (completed) ++completed_;
    if (cfg_.transactions > 0 && completed_ >= cfg_.transactions) {
      stop_ = true;
      return;
    }
    schedule_next(station, sim_.now());
  }

  const ScenarioConfig& cfg_;
  const RunOptions& opt_;
  Simulator sim_;
  Rng rng_;
  Channel channel_;
  AccessPoint ap_;
  Collector collector_;
  Server server_;
  std::unique_ptr<Scheduler> scheduler_;
  std::vector<std::unique_ptr<Station>> stations_;
  std::unique_ptr<TrafficGenerator> generator_;
  std::vector<std::unique_ptr<LoadNode>> nodes_;
  std::unique_ptr<TrafficDriver> driver_;
  std::unique_ptr<Interferer> interferer_;
  std::map<std::uint64_t, SimTime> ready_;
  std::map<int, std::uint64_t> next_index_;
  RunResult result_;
  std::size_t completed_ = 0;
  bool degraded_ = false;
  bool stop_ = false;
};

}  // namespace

RunResult run_scenario(const ScenarioConfig& config, const RunOptions& options) {
  config.validate();
  World w(config, options);
  return w.run();
}

}  // namespace eaps
