#include "ssdfi/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "csv.hpp"
#include "ssdfi/rng.hpp"

namespace ssdfi {

void UsageLog::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.bits_read < 0 || s.bits_written < 0 || s.pe_cycles < 0)
      throw ValidationError("usage log " + std::to_string(device_id) + ": negative count");
    if (i && s.hour <= samples[i - 1].hour)
      throw ValidationError("usage log " + std::to_string(device_id) +
                            ": hours must be strictly increasing");
    if (i && s.pe_cycles < samples[i - 1].pe_cycles)
      throw ValidationError("usage log " + std::to_string(device_id) +
                            ": pe_cycles decreasing at hour " + std::to_string(s.hour));
  }
}

std::uint64_t UsageLog::period() const {
  if (samples.empty()) return 0;
  return samples.back().hour - samples.front().hour + 1;
}

void SynthWorkloadParams::validate() const {
  if (!(device_capacity > 0)) throw ValidationError("device_capacity must be > 0");
  if (duration < 1) throw ValidationError("duration must be >= 1");
  if (!(write_amplification >= 1)) throw ValidationError("write_amplification must be >= 1");
  if (!(jitter >= 0 && jitter < 1)) throw ValidationError("jitter must be in [0,1)");
  if (write_rate < 0 || read_rate < 0) throw ValidationError("rates must be >= 0");
}

std::vector<UsageLog> parse_usage_log(const std::string& path) {
  csv::Table t = csv::read_file(path);
  if (t.header.empty()) return {};
  std::size_t idev = t.column("device_id"), ih = t.column("hour"), ir = t.column("bits_read"),
              iw = t.column("bits_written"), ipe = t.column("pe_cycles");
  std::map<std::uint64_t, UsageLog> by_dev;
  for (const auto& row : t.rows) {
    auto dev = static_cast<std::uint64_t>(csv::to_double(row, idev, path));
    UsageSample s;
    double h = csv::to_double(row, ih, path);
    if (h < 0) throw ParseError(path + ":" + std::to_string(row.line) + ": negative hour");
    s.hour = static_cast<std::uint64_t>(h);
    s.bits_read = csv::to_double(row, ir, path);
    s.bits_written = csv::to_double(row, iw, path);
    s.pe_cycles = csv::to_double(row, ipe, path);
    if (s.bits_read < 0 || s.bits_written < 0 || s.pe_cycles < 0)
      throw ParseError(path + ":" + std::to_string(row.line) + ": negative count");
    UsageLog& log = by_dev[dev];
    log.device_id = dev;
    if (!log.samples.empty()) {
      if (s.hour <= log.samples.back().hour)
        throw ParseError(path + ":" + std::to_string(row.line) +
                         ": hours not strictly increasing for device " + std::to_string(dev));
      if (s.pe_cycles < log.samples.back().pe_cycles)
        throw ParseError(path + ":" + std::to_string(row.line) +
                         ": pe_cycles decreasing for device " + std::to_string(dev));
    }
    log.samples.push_back(s);
  }
  std::vector<UsageLog> out;
  for (auto& [_, log] : by_dev) out.push_back(std::move(log));
  return out;
}

void write_usage_log(const std::vector<UsageLog>& logs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "device_id,hour,bits_read,bits_written,pe_cycles\n";
  out.precision(17);
  for (const auto& log : logs)
    for (const auto& s : log.samples)
      out << log.device_id << ',' << s.hour << ',' << s.bits_read << ',' << s.bits_written << ','
          << s.pe_cycles << '\n';
  if (!out) throw std::runtime_error(path + ": write failed");
}

UsageLog synthesize_usage_log(const SynthWorkloadParams& p, std::uint64_t device_id,
                              std::uint64_t seed) {
  p.validate();
  Rng rng(mix_seed(seed, device_id));
  UsageLog log;
  log.device_id = device_id;
  log.samples.reserve(p.duration);
  double written = 0;
  for (std::uint64_t t = 1; t <= p.duration; ++t) {
    double jw = p.jitter > 0 ? 1 + p.jitter * (2 * rng.uniform() - 1) : 1;
    double jr = p.jitter > 0 ? 1 + p.jitter * (2 * rng.uniform() - 1) : 1;
    double w = p.write_rate * jw;
    written += w;
    UsageSample s;
    s.hour = t;
    s.bits_written = 8 * w;
    s.bits_read = 8 * p.read_rate * jr;
    s.pe_cycles = std::floor(p.write_amplification * written / p.device_capacity);
    log.samples.push_back(s);
  }
  return log;
}

namespace {

struct Pos {
  std::uint64_t cycle;
  std::uint64_t hour;  // mapped into [first, last]
};

bool locate(const UsageLog& log, std::uint64_t hour, Pos& pos) {
  if (log.samples.empty()) return false;
  std::uint64_t first = log.samples.front().hour;
  if (hour < first) return false;
  std::uint64_t P = log.period();
  pos.cycle = (hour - first) / P;
  pos.hour = first + (hour - first) % P;
  return true;
}

}  // namespace

double bits_accessed(const UsageLog& log, std::uint64_t hour) {
  Pos pos;
  if (!locate(log, hour, pos)) return 0;
  auto it = std::lower_bound(log.samples.begin(), log.samples.end(), pos.hour,
                             [](const UsageSample& s, std::uint64_t h) { return s.hour < h; });
  if (it == log.samples.end() || it->hour != pos.hour) return 0;
  return it->bits_read + it->bits_written;
}

double pe_cycles_at(const UsageLog& log, std::uint64_t hour) {
  Pos pos;
  if (!locate(log, hour, pos)) return 0;
  // last sample at or before the mapped hour
  auto it = std::upper_bound(log.samples.begin(), log.samples.end(), pos.hour,
                             [](std::uint64_t h, const UsageSample& s) { return h < s.hour; });
  double within = it == log.samples.begin() ? 0 : (it - 1)->pe_cycles;
  return static_cast<double>(pos.cycle) * log.samples.back().pe_cycles + within;
}

}  // namespace ssdfi
