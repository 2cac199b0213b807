#include "eaps/traffic/bursts.hpp"

#include <cmath>
#include <map>

namespace eaps {

std::vector<Burst> segment_bursts(const std::vector<TraceRecord>& trace, Duration threshold_us) {
  if (threshold_us <= 0) throw MetricError("burst threshold must be positive");
  std::vector<Burst> out;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const TraceRecord& r = trace[i];
    if (i > 0 && r.timestamp_us < trace[i - 1].timestamp_us) throw MetricError("trace is not time-sorted");
    if (out.empty() || r.timestamp_us - out.back().end >= threshold_us) {
      if (!out.empty()) out.back().gap_s = to_seconds(r.timestamp_us - out.back().end);
      Burst b;
      b.index = out.size();
      b.start = r.timestamp_us;
      out.push_back(b);
    }
    Burst& b = out.back();
    b.end = r.timestamp_us;
    b.duration_s = to_seconds(b.end - b.start);
    b.size_bytes += static_cast<double>(r.size_bytes);
    b.packets += 1.0;
    b.per_ac[index_of(r.ac)] += 1.0;
  }
  return out;
}

BurstinessResult burstiness(const std::vector<Burst>& bursts, double window_s) {
  if (!(window_s > 0)) throw MetricError("burstiness needs a positive measurement window");
  if (bursts.empty()) throw MetricError("burstiness needs at least one burst");
  BurstinessResult r;
  const double n = static_cast<double>(bursts.size());
  r.bursts_per_second = n / window_s;
  double total = 0.0;
  for (const Burst& b : bursts) total += b.size_bytes;
  const double factor = std::max(0.0, 1.0 - 1.0 / r.bursts_per_second);
  r.value = factor * total / n;
  return r;
}

namespace {

double relative_change(double cur, double prev, double floor) {
  return std::abs(cur - prev) / (prev == 0.0 ? floor : prev);
}

}  // namespace

double dynamicity(const std::vector<Burst>& bursts) {
  if (bursts.size() < 2) return 0.0;
  constexpr double kMinGap = 1e-6;
  double dur = 0.0, size = 0.0, count = 0.0, mix = 0.0;
  for (std::size_t i = 1; i < bursts.size(); ++i) {
    const Burst& cur = bursts[i];
    const Burst& prev = bursts[i - 1];
    const double gap = std::max(prev.gap_s, kMinGap);
    dur += relative_change(cur.duration_s, prev.duration_s, 1e-3) / gap;
    size += relative_change(cur.size_bytes, prev.size_bytes, 1.0) / gap;
    count += relative_change(cur.packets, prev.packets, 1.0) / gap;
    double z = 0.0;
    for (std::size_t a = 0; a < kNumAcs; ++a) z += relative_change(cur.per_ac[a], prev.per_ac[a], 1.0);
    mix += z / gap;
  }
  const double n = static_cast<double>(bursts.size());
  return dur / n + size / n + count / n + mix / n;
}

namespace {

TraceMetrics group_metrics(const std::vector<TraceRecord>& trace, Duration threshold_us, double window_s) {
  TraceMetrics m;
  m.packets = trace.size();
  m.groups = 1;
  m.window_s = window_s;
  m.threshold_ms = to_ms(threshold_us);
  const std::vector<Burst> bursts = segment_bursts(trace, threshold_us);
  m.bursts = bursts.size();
  if (bursts.empty()) return m;
  double sum = 0.0, sum2 = 0.0;
  for (const Burst& b : bursts) {
    sum += b.size_bytes;
    sum2 += b.size_bytes * b.size_bytes;
  }
  const double n = static_cast<double>(bursts.size());
  m.mean_burst_bytes = sum / n;
  m.stddev_burst_bytes = std::sqrt(std::max(0.0, sum2 / n - m.mean_burst_bytes * m.mean_burst_bytes));
  if (bursts.size() > 1) {
    double g = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i + 1 < bursts.size(); ++i) {
      g += bursts[i].gap_s;
      g2 += bursts[i].gap_s * bursts[i].gap_s;
    }
    const double k = n - 1;
    m.stddev_gap_s = std::sqrt(std::max(0.0, g2 / k - (g / k) * (g / k)));
  }
  if (window_s > 0) {
    const BurstinessResult b = burstiness(bursts, window_s);
    m.burstiness = b.value;
    m.bursts_per_second = b.bursts_per_second;
  }
  m.dynamicity = dynamicity(bursts);
  return m;
}

}  // namespace

TraceMetrics trace_metrics(const std::vector<TraceRecord>& trace, Duration threshold_us, BurstScope scope) {
  if (threshold_us <= 0) throw MetricError("burst threshold must be positive");
  const double window = trace.empty() ? 0.0 : to_seconds(trace.back().timestamp_us - trace.front().timestamp_us);
  if (scope == BurstScope::aggregate) return group_metrics(trace, threshold_us, window);

  std::map<int, std::vector<TraceRecord>> groups;
  for (const TraceRecord& r : trace) groups[r.flow].push_back(r);
  TraceMetrics total;
  total.threshold_ms = to_ms(threshold_us);
  total.window_s = window;
  for (const auto& [flow, records] : groups) {
    const TraceMetrics g = group_metrics(records, threshold_us, window);
    total.packets += g.packets;
    total.bursts += g.bursts;
    total.bursts_per_second += g.bursts_per_second;
    total.burstiness += g.burstiness;
    total.dynamicity += g.dynamicity;
    total.mean_burst_bytes += g.mean_burst_bytes;
    total.stddev_burst_bytes += g.stddev_burst_bytes;
    total.stddev_gap_s += g.stddev_gap_s;
  }
  total.groups = groups.size();
  if (total.groups > 1) {
    const double n = static_cast<double>(total.groups);
    total.bursts_per_second /= n;
    total.burstiness /= n;
    total.dynamicity /= n;
    total.mean_burst_bytes /= n;
    total.stddev_burst_bytes /= n;
    total.stddev_gap_s /= n;
  }
  return total;
}

}  // namespace eaps
