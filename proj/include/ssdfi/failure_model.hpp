#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssdfi {

enum class Technology { SLC, MLC };

Technology parse_technology(const std::string& s);
const char* to_string(Technology t);

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RberPoint {
  double pe_cycles;
  double rber;
};

struct RberCurve {
  std::vector<RberPoint> points;

  void validate() const;
};

RberCurve load_rber_curve(const std::string& path);
double rber_at(const RberCurve& curve, double pe_cycles);
double bad_symbol_rate(double rber, double bits_accessed);

// Shape of the mission BB count model. Counts below the threshold are a
// rounded Normal; drives that reach it stall there or draw an excess from a
// geometric / log-normal mix, the log-normal centred on threshold * factor.
struct BbCountShape {
  double sigma = 1;        // pre-threshold spread
  double spread = 2;       // log-spread of the escalated excess
  double stall = 0;        // share of threshold drives that add nothing
  double share = 1;        // share of the excess drawn from the log-normal
  double tail_ratio = 0.5;  // ratio of the geometric part
  void validate() const;
  bool operator==(const BbCountShape&) const = default;
};

struct SsdModelProfile {
  std::string name;
  Technology technology = Technology::MLC;
  double pct_drives_bad_chip = 0;
  double pct_drives_bad_block = 0;
  double median_bb = 0;
  double mean_bb = 0;
  double factory_bb_mean = 0;
  double factory_bb_std = 0;
  RberCurve rber_curve;
  double wol = 3000;
  int bb_escalation_threshold = 2;
  double bb_escalation_factor = 1;
  double mission_hours_basis = 35040;
  BbCountShape bb_shape;

  void validate() const;
};

// Technology defaults for the count-model shape.
BbCountShape default_bb_shape(Technology t);
int default_escalation_threshold(Technology t);
double default_wol(Technology t);

// Curve paths in the file are resolved relative to the profile file.
std::vector<SsdModelProfile> load_profiles(const std::string& path);
const SsdModelProfile& find_profile(const std::vector<SsdModelProfile>& ps, const std::string& name);

struct PooledSsd {
  std::uint32_t factory_bb = 0;
  std::vector<double> mission_bb_times;
  std::optional<double> bad_chip_time;
  bool marked_bb_gt_5pct = false;
};

struct SsdPool {
  std::vector<PooledSsd> drives;
  SsdModelProfile profile;
  std::uint64_t seed = 0;
  std::uint64_t blocks_per_device = 0;
};

// Distribution of the per-drive mission BB count for drives that are
// neither marked nor bad-chip, i.e. counts in [1, cap].
struct BbCountModel {
  int threshold = 2;
  std::uint32_t cap = 1;
  double base_mu = 1;
  double factor = 1;
  BbCountShape shape;
  std::vector<double> cdf;  // cdf[c] = P(count <= c), c in [0, cap]

  double pmf(std::uint32_t c) const { return c == 0 ? cdf[0] : cdf[c] - cdf[c - 1]; }
  double mean() const;
  std::uint32_t quantile(double u) const;
};

BbCountModel build_count_model(int threshold, std::uint32_t cap, double base_mu, double factor,
                               const BbCountShape& shape);

// Solves base_mu so the pool-wide median (marked drives included) lands in
// the middle of the median_bb bin.
BbCountModel calibrate_count_model(const SsdModelProfile& p, std::uint64_t n_unmarked,
                                   std::uint64_t n_marked, std::uint32_t cap);

SsdPool generate_pool(const SsdModelProfile& profile, std::uint64_t pool_size,
                      std::uint64_t blocks_per_device, std::uint64_t seed);

struct PoolValidationReport {
  std::uint64_t drives = 0;
  std::uint64_t drives_with_bb = 0;
  std::uint64_t drives_with_bc = 0;
  std::uint64_t bc_with_gt_5pct = 0;
  std::uint64_t bc_without_bb = 0;
  double median_bb = 0;
  double mean_bb = 0;
  double bc_gt_5pct_ratio = 0;
  // k = 2,3,4,5
  std::vector<int> cond_k;
  std::vector<double> cond_median;
  std::vector<std::uint64_t> cond_n;
};

PoolValidationReport validate_pool(const SsdPool& pool);

// Exact quotas used by generate_pool.
std::uint64_t bb_quota(const SsdModelProfile& p, std::uint64_t pool_size);
std::uint64_t bc_quota(const SsdModelProfile& p, std::uint64_t pool_size);
std::uint64_t marked_quota(std::uint64_t n_bc);
std::uint32_t gt5pct_cap(std::uint64_t blocks_per_device);

double truncated_exponential(double rate, double horizon, double u);

}  // namespace ssdfi
