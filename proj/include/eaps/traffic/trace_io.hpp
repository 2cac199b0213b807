#pragma once

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eaps/traffic/flow.hpp"

namespace eaps {

/// Malformed trace CSV. what() lists every offending line number.
class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(const std::string& message, std::vector<std::size_t> lines)
      : std::runtime_error(message), lines_(std::move(lines)) {}
  const std::vector<std::size_t>& lines() const { return lines_; }

 private:
  std::vector<std::size_t> lines_;
};

/// Header `timestamp_us,size_bytes,direction,ac`; direction is uplink or
/// downlink, ac one of VO/VI/BE/BK. `with_flow` appends a `flow` column
/// holding the generator's flow index.
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace, bool with_flow = false);
/// Rows must be time-sorted. The optional trailing `flow` column is read
/// back; without it every record gets flow -1.
std::vector<TraceRecord> read_trace_csv(std::istream& in);

}  // namespace eaps
