#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <queue>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ssdfi/erasure_codes.hpp"
#include "ssdfi/failure_model.hpp"
#include "ssdfi/rng.hpp"
#include "ssdfi/workload.hpp"

namespace ssdfi {

struct ArrayGeometry {
  int n_devices = 8;
  std::uint64_t page_size = 4096;
  int pages_per_block = 64;
  std::uint64_t blocks_per_device = 131072;
  std::uint64_t stripe_size = 128 * 1024;

  void validate() const;
  int chunk_pages() const {
    return static_cast<int>(stripe_size / (static_cast<std::uint64_t>(n_devices) * page_size));
  }
  int cpb() const { return pages_per_block / chunk_pages(); }
  std::uint64_t array_stripes() const { return blocks_per_device * cpb(); }
  std::uint64_t symbols_per_device() const { return blocks_per_device * pages_per_block; }
  bool operator==(const ArrayGeometry&) const = default;
};

// Ties at equal time resolve in enum order.
enum class EventKind : std::uint8_t {
  Scrub = 0,
  ReconstructComplete = 1,
  WearOutReplace = 2,
  BadChip = 3,
  BadBlock = 4,
  BadSymbol = 5,
};
const char* to_string(EventKind k);

struct SimEvent {
  double time = 0;
  EventKind kind = EventKind::Scrub;
  int device = -1;
  std::uint64_t location = 0;  // block for BadBlock, symbol for BadSymbol
};

struct StripeRange {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
  std::uint64_t size() const { return end - begin; }
};

StripeRange affected_stripe_range(const ArrayGeometry& g, const SimEvent& e);

// Inverse-CDF exponential offset; +inf when rate is 0.
double next_failure_offset(double rate, double u);
std::uint64_t next_failure_location(std::uint64_t n_units, double u);

inline constexpr double kNever = std::numeric_limits<double>::infinity();

// Multiset over {BC, BB, BS}: one entry per faulty chunk of the judged stripe.
struct Cause {
  std::uint8_t bc = 0, bb = 0, bs = 0;
  std::string label() const;
  bool operator==(const Cause&) const = default;
};

struct DataLossRecord {
  double time = 0;
  LossScope scope = LossScope::SDL;
  Cause cause;
  std::uint64_t stripes_lost = 0;
};

// Cumulative bad-symbol hazard per usage log, indexed by hours since the
// drive was installed. Rates are constant within each life-hour.
class BsHazard {
public:
  BsHazard(const RberCurve& curve, const std::vector<UsageLog>& logs, double horizon_hours);

  bool empty() const { return cum_.empty(); }
  std::size_t logs() const { return cum_.size(); }
  double rate(std::size_t log, double life) const;
  // hazard accumulated over [0, life)
  double cumulative(std::size_t log, double life) const;
  // smallest life with cumulative(log, life) >= target, or kNever
  double invert(std::size_t log, double target) const;

private:
  std::vector<std::vector<double>> rate_;  // rate_[l][h-1] for life-hour h
  std::vector<std::vector<double>> cum_;   // cum_[l][h] = sum of first h hours
};

struct SimParams {
  double tts = 10000;
  double ttr = 10;
  double mission = 35040;
  double mirror_copy_hours = 1;
};

struct SimResult {
  std::uint64_t seed = 0;
  std::vector<DataLossRecord> records;
  std::uint64_t lost_stripes = 0;
  std::array<std::uint64_t, 4> scope_records{};  // indexed by LossScope
  std::array<std::uint64_t, 4> scope_stripes{};
  std::uint64_t ddf = 0;
  std::uint64_t tdf = 0;
  std::uint64_t bad_chips = 0;
  std::uint64_t bad_blocks = 0;
  std::uint64_t bad_symbols = 0;
  std::uint64_t reconstructions = 0;
  std::uint64_t wear_out_replacements = 0;
};

// One array over one mission. Event handlers are public so scenarios can be
// driven by hand; run() drives them from the scheduled fault streams.
class ArraySim {
public:
  // hazard may be shared across simulations; built here when null
  ArraySim(const ArrayGeometry& geometry, CodeKind code, const SsdPool& pool,
           const std::vector<UsageLog>& logs, const SimParams& params, std::uint64_t seed,
           const BsHazard* hazard = nullptr);

  SimResult run();

  std::vector<DataLossRecord> handle_failure(const SimEvent& e);
  std::vector<DataLossRecord> apply_scrub(double t);
  std::vector<DataLossRecord> apply_reconstruct(int device, double t);
  void replace_worn_out(int device, double t);

  // direct state access for scenario tests
  void add_latent_symbol(int device, std::uint64_t symbol);
  void add_latent_block(int device, std::uint64_t block);
  bool failed(int device) const { return slots_[device].failed; }
  int failed_count() const { return failed_count_; }
  std::size_t latent_symbols(int device) const;
  std::size_t latent_blocks(int device) const { return slots_[device].bb.size(); }
  std::uint64_t ddf() const { return ddf_; }
  std::uint64_t tdf() const { return tdf_; }
  double pe_cycles(int device, double t) const;
  StripeFaultState stripe_state(std::uint64_t stripe) const;
  const ArrayGeometry& geometry() const { return geo_; }

private:
  struct Slot {
    const PooledSsd* drive = nullptr;
    const UsageLog* log = nullptr;
    std::size_t log_index = 0;
    double install = 0;
    std::uint32_t gen = 0;
    bool failed = false;
    std::size_t next_bb = 0;
    std::unordered_map<std::uint64_t, std::uint64_t> bs;  // stripe -> symbol mask
    std::unordered_set<std::uint64_t> bb;                 // block index
    Rng bs_time{0}, bs_loc{0}, bb_loc{0};
  };

  struct Queued {
    SimEvent ev;
    std::uint32_t gen;
    std::uint64_t seq;
  };
  struct Later {
    bool operator()(const Queued& a, const Queued& b) const {
      if (a.ev.time != b.ev.time) return a.ev.time > b.ev.time;
      if (a.ev.kind != b.ev.kind) return a.ev.kind > b.ev.kind;
      if (a.ev.device != b.ev.device) return a.ev.device > b.ev.device;
      return a.seq > b.seq;
    }
  };

  void push(const SimEvent& e, std::uint32_t gen);
  void install(int device, std::size_t pool_index, double t);
  void schedule_bb(int device);
  void schedule_bs(int device, double from);
  void schedule_wear_out(int device);

  Cause cause_of(const StripeFaultState& st) const;
  // judge stripes, skip already-recorded ones, group into records
  void judge(const std::vector<std::uint64_t>& stripes, double t, bool block_trigger,
             std::vector<DataLossRecord>& out);
  std::vector<std::uint64_t> latent_stripes(int skip_device) const;
  void note(std::vector<DataLossRecord>& recs);

  ArrayGeometry geo_;
  CodeKind code_;
  const SsdPool& pool_;
  const std::vector<UsageLog>& logs_;
  SimParams params_;
  std::uint64_t seed_;
  std::unique_ptr<BsHazard> own_hazard_;
  const BsHazard* hazard_ = nullptr;
  Rng pool_rng_;
  std::vector<Slot> slots_;
  std::priority_queue<Queued, std::vector<Queued>, Later> queue_;
  std::uint64_t seq_ = 0;
  int failed_count_ = 0;
  bool adl_active_ = false;
  std::unordered_set<std::uint64_t> recorded_;
  std::uint64_t ddf_ = 0, tdf_ = 0;
  SimResult result_;
};

SimResult run_simulation(const ArrayGeometry& geometry, CodeKind code, const SsdPool& pool,
                         const std::vector<UsageLog>& logs, const SimParams& params,
                         std::uint64_t seed, const BsHazard* hazard = nullptr);

}  // namespace ssdfi
