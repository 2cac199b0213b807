#include "eaps/telemetry/collector.hpp"

#include <stdexcept>

namespace eaps {

const std::array<const char*, kFeaturesPerSample>& sample_feature_names() {
  static const std::array<const char*, kFeaturesPerSample> names = {
      "cu", "cn", "rin", "w", "qvo", "qvi", "qbe", "qbk", "qhvo", "qhvi", "qhbe", "qhbk"};
  return names;
}

std::array<double, kFeaturesPerSample> FeatureSample::values() const {
  return {cu, cn, rin, w, q[0], q[1], q[2], q[3], qhat[0], qhat[1], qhat[2], qhat[3]};
}

std::size_t feature_count(std::size_t k) { return 2 + k * kFeaturesPerSample; }

std::vector<double> FeatureVector::flatten() const {
  std::vector<double> out;
  out.reserve(feature_count(samples.size()));
  out.push_back(static_cast<double>(priority_rank(ac)));
  out.push_back(da_plus_db_us);
  for (const FeatureSample& s : samples) {
    const auto v = s.values();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

std::vector<std::string> feature_names(std::size_t k) {
  std::vector<std::string> out = {"ac", "da_plus_db_us"};
  for (std::size_t i = 0; i < k; ++i) {
    for (const char* n : sample_feature_names()) out.push_back(std::string(n) + "_" + std::to_string(i));
  }
  return out;
}

void CollectorConfig::validate() const {
  if (interval_us <= 0) throw std::invalid_argument("sampling interval must be positive");
  if (history == 0) throw std::invalid_argument("history depth must be positive");
  if (!(stall_probability >= 0 && stall_probability <= 1)) throw std::invalid_argument("stall probability outside [0, 1]");
  if (!(stall_min_fraction >= 0 && stall_max_fraction >= stall_min_fraction)) {
    throw std::invalid_argument("bad stall delay range");
  }
  if (!(stale_factor > 1)) throw std::invalid_argument("stale factor must exceed 1");
}

Collector::Collector(Simulator& sim, Channel& channel, AccessPoint& ap, const Rng& rng, CollectorConfig config)
    : sim_(sim), channel_(channel), ap_(ap), stalls_(rng.derive("telemetry.stall", 0)), config_(config) {
  config_.validate();
}

void Collector::start() {
  const Duration d = config_.interval_us;
  schedule_boundary((sim_.now() / d + 1) * d);
}

void Collector::schedule_boundary(SimTime nominal) {
  Duration delay = 0;
  if (config_.stall_probability > 0 && stalls_.bernoulli(config_.stall_probability)) {
    const double lo = config_.stall_min_fraction * static_cast<double>(config_.interval_us);
    const double hi = config_.stall_max_fraction * static_cast<double>(config_.interval_us);
    delay = static_cast<Duration>(hi > lo ? stalls_.uniform(lo, hi) : lo);
  }
  sim_.schedule_at(nominal + delay, "telemetry.sample", [this, nominal] {
    sample_tick(nominal);
    // Boundaries that passed during a long stall are skipped.
    SimTime next = nominal + config_.interval_us;
    while (next <= sim_.now()) next += config_.interval_us;
    schedule_boundary(next);
  });
}

const FeatureSample& Collector::sample_tick(SimTime nominal) {
  const SimTime now = sim_.now();
  const Duration window = config_.interval_us;
  FeatureSample s;
  s.time = nominal;
  s.spacing_us = last_taken_ ? now - *last_taken_ : 0;
  s.stale = last_taken_ && static_cast<double>(s.spacing_us) > config_.stale_factor * static_cast<double>(window);
  s.cu = channel_.sample_utilization(window);
  s.cn = channel_.noise_dbm();
  s.rin = static_cast<double>(ap_.wired_bytes_between(now - window, now)) * 1e6 / static_cast<double>(window);
  const std::uint64_t retx = ap_.retransmissions();
  s.w = static_cast<double>(retx - last_retx_);
  last_retx_ = retx;
  for (AccessCategory ac : kAcsByPriority) {
    s.q[priority_rank(ac)] = static_cast<double>(ap_.qdisc_occupancy(ac));
    s.qhat[priority_rank(ac)] = static_cast<double>(ap_.mac_occupancy(ac));
  }
  last_taken_ = now;
  ++taken_;
  if (s.stale) ++stale_;
  history_.push_back(s);
  while (history_.size() > config_.history) history_.pop_front();
  return history_.back();
}

std::optional<FeatureVector> Collector::assemble_vector(std::size_t k, AccessCategory ac, double da_plus_db_us) const {
  if (k == 0 || k > history_.size()) return std::nullopt;
  FeatureVector v;
  v.ac = ac;
  v.da_plus_db_us = da_plus_db_us;
  for (std::size_t i = history_.size() - k; i < history_.size(); ++i) {
    const FeatureSample& s = history_[i];
    if (s.stale) return std::nullopt;
    if (!v.samples.empty() && s.time - v.samples.back().time != config_.interval_us) return std::nullopt;
    v.samples.push_back(s);
  }
  return v;
}

}  // namespace eaps
