#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ssdfi {

struct UsageSample {
  std::uint64_t hour = 0;
  double bits_read = 0;
  double bits_written = 0;
  double pe_cycles = 0;  // cumulative
};

// Per-device hourly usage. Replayed cyclically past its end, with P/E
// cycles carried over from one pass to the next.
struct UsageLog {
  std::uint64_t device_id = 0;
  std::vector<UsageSample> samples;

  void validate() const;
  bool empty() const { return samples.empty(); }
  // hours covered by one pass: first..last inclusive
  std::uint64_t period() const;
};

struct SynthWorkloadParams {
  double write_rate = 0;       // bytes/hour
  double read_rate = 0;        // bytes/hour
  double device_capacity = 0;  // bytes
  double write_amplification = 1;
  std::uint64_t duration = 1;  // hours
  double jitter = 0;           // fraction in [0,1)

  void validate() const;
};

std::vector<UsageLog> parse_usage_log(const std::string& path);
void write_usage_log(const std::vector<UsageLog>& logs, const std::string& path);

// Samples at hours 1..duration; pe at hour t counts writes through hour t.
UsageLog synthesize_usage_log(const SynthWorkloadParams& p, std::uint64_t device_id,
                              std::uint64_t seed);

// Hours count from 1 for synthesized logs; any hour is mapped into the log
// by cyclic replay.
double bits_accessed(const UsageLog& log, std::uint64_t hour);
double pe_cycles_at(const UsageLog& log, std::uint64_t hour);

}  // namespace ssdfi
