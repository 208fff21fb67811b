#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ssdfi/report.hpp"

namespace ssdfi {

// Light synthetic workload used when no usage log is given.
SynthWorkloadParams default_workload();

struct ExperimentConfig {
  std::vector<CodeKind> codes{CodeKind::RAID5, CodeKind::RAID6, CodeKind::PMDS11};
  std::vector<std::string> models{"MLC-A"};
  std::vector<double> tts{10000};
  std::vector<double> ttr{10};
  std::vector<int> stripe_kb{128};
  ArrayGeometry geometry;  // stripe_size overridden per grid point
  double mission_hours = 35040;
  std::uint64_t num_sims = 1000;
  std::uint64_t pool_size = 10000;
  // blocks the field 5% criterion refers to (one flash element)
  std::uint64_t pool_blocks = 16384;
  std::uint64_t master_seed = 1;
  std::string profiles_path;
  std::string usage_log_path;  // empty: synthesize
  SynthWorkloadParams synth = default_workload();
  std::uint64_t synth_seed = 7;
  std::string out_dir = "out";
  unsigned workers = 0;  // 0: hardware concurrency

  void validate() const;
};

struct GridPoint {
  CodeKind code = CodeKind::RAID5;
  std::string model;
  double tts = 10000;
  double ttr = 10;
  int stripe_kb = 128;
  std::string id() const;
};

std::vector<GridPoint> expand_grid(const ExperimentConfig& c);

// Codes, TTS, TTR and stripe size do not enter the seed, so those axes are
// compared on identical fault streams.
std::uint64_t pool_seed(std::uint64_t master, const std::string& model);
std::uint64_t sim_seed(std::uint64_t master, const GridPoint& g, std::uint64_t sim_index);

ArrayGeometry geometry_for(const ExperimentConfig& c, const GridPoint& g);
nlohmann::json config_echo(const ExperimentConfig& c, const GridPoint& g);

std::vector<UsageLog> make_logs(const ExperimentConfig& c, int n_devices);

// Runs fn(i) for i in [0, n) on `workers` threads; results land by index.
void parallel_for(std::uint64_t n, unsigned workers, const std::function<void(std::uint64_t)>& fn);

AggregateReport run_grid_point(const ExperimentConfig& c, const GridPoint& g, const SsdPool& pool,
                               const std::vector<UsageLog>& logs);

// Returns the process exit status.
int run_experiment(const ExperimentConfig& c, std::ostream& log);

}  // namespace ssdfi
