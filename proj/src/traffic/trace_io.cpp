#include "eaps/traffic/trace_io.hpp"

#include <charconv>
#include <sstream>

namespace eaps {

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace, bool with_flow) {
  out << "timestamp_us,size_bytes,direction,ac" << (with_flow ? ",flow" : "") << '\n';
  for (const TraceRecord& r : trace) {
    out << r.timestamp_us << ',' << r.size_bytes << ',' << (r.direction == Direction::uplink ? "uplink" : "downlink")
        << ',' << to_string(r.ac);
    if (with_flow) out << ',' << r.flow;
    out << '\n';
  }
}

namespace {

bool parse_int(std::string_view s, std::int64_t& v) {
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && p == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view line) {
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

}  // namespace

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
  std::vector<TraceRecord> out;
  std::vector<std::size_t> bad;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  std::size_t columns = 4;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (line == "timestamp_us,size_bytes,direction,ac,flow") {
        columns = 5;
      } else if (line != "timestamp_us,size_bytes,direction,ac") {
        bad.push_back(lineno);
      }
      continue;
    }
    const auto f = split(line);
    TraceRecord r;
    std::int64_t ts = 0, size = 0, flow = -1;
    const auto ac = f.size() == columns ? parse_access_category(f[3]) : std::nullopt;
    const bool bad_flow = columns == 5 && (!parse_int(f[4], flow) || flow < -1 || flow > (1 << 30));
    if (f.size() != columns || bad_flow || !parse_int(f[0], ts) || !parse_int(f[1], size) || ts < 0 || size <= 0 ||
        !ac || (f[2] != "uplink" && f[2] != "downlink") || (!out.empty() && ts < out.back().timestamp_us)) {
      bad.push_back(lineno);
      continue;
    }
    r.timestamp_us = ts;
    r.size_bytes = size;
    r.direction = f[2] == "uplink" ? Direction::uplink : Direction::downlink;
    r.ac = *ac;
    r.flow = static_cast<int>(flow);
    out.push_back(r);
  }
  if (!header_seen) throw TraceParseError("trace is empty (missing header)", {});
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "malformed trace rows at line";
    if (bad.size() > 1) msg << 's';
    for (std::size_t i = 0; i < bad.size() && i < 20; ++i) msg << (i ? ", " : " ") << bad[i];
    if (bad.size() > 20) msg << " and " << bad.size() - 20 << " more";
    throw TraceParseError(msg.str(), std::move(bad));
  }
  return out;
}

}  // namespace eaps
