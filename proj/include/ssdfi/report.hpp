#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssdfi/sim.hpp"

namespace ssdfi {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kOtherLabel = "other (<1%)";

struct BreakdownRow {
  std::string label;
  std::uint64_t records = 0;
  std::uint64_t stripes = 0;
  double fraction = 0;  // of stripes lost
  bool operator==(const BreakdownRow&) const = default;
};

struct BreakdownTable {
  std::vector<BreakdownRow> rows;
  std::uint64_t total_stripes() const;
  const BreakdownRow* find(const std::string& label) const;
  double fraction(const std::string& label) const;
  bool operator==(const BreakdownTable&) const = default;
};

BreakdownTable loss_breakdown(const std::vector<DataLossRecord>& records);
// Rows under the threshold fraction are folded into one "other" row.
BreakdownTable collapse_minor(const BreakdownTable& t, double threshold = 0.01);

struct SeedTotal {
  std::uint64_t sim_index = 0;
  std::uint64_t seed = 0;
  std::uint64_t lost_stripes = 0;
  bool operator==(const SeedTotal&) const = default;
};

struct AggregateReport {
  int schema_version = kSchemaVersion;
  std::string experiment_id;
  nlohmann::json config;
  std::vector<SeedTotal> per_seed;  // ordered by sim_index
  double mean_lost = 0;
  double median_lost = 0;
  double stddev_lost = 0;
  std::uint64_t total_lost = 0;
  std::array<std::uint64_t, 4> scope_records{};  // indexed by LossScope
  std::array<std::uint64_t, 4> scope_stripes{};
  BreakdownTable breakdown;
  std::uint64_t ddf = 0;
  std::uint64_t tdf = 0;
  std::uint64_t bad_chips = 0;
  std::uint64_t bad_blocks = 0;
  std::uint64_t bad_symbols = 0;
  std::uint64_t reconstructions = 0;
  std::uint64_t wear_out_replacements = 0;
  nlohmann::json metadata;

  bool operator==(const AggregateReport&) const = default;
};

// A result tagged with its position in the experiment.
struct TaggedResult {
  std::uint64_t sim_index = 0;
  nlohmann::json config;
  SimResult result;
};

AggregateReport aggregate_results(const std::vector<TaggedResult>& results,
                                  const std::string& experiment_id = "");
AggregateReport merge_reports(const AggregateReport& a, const AggregateReport& b);

enum class ReportFormat { JSON, CSV };

nlohmann::json to_json(const AggregateReport& r);
AggregateReport report_from_json(const nlohmann::json& j);
std::string to_csv(const AggregateReport& r);
void emit_report(const AggregateReport& r, ReportFormat format, const std::string& path);
AggregateReport read_json_report(const std::string& path);

}  // namespace ssdfi
