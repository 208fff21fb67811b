#include "ssdfi/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace ssdfi {

using nlohmann::json;

SynthWorkloadParams default_workload() {
  SynthWorkloadParams p;
  p.write_rate = 50e3;
  p.read_rate = 75e3;
  p.device_capacity = 512e9;
  p.write_amplification = 2;
  p.duration = 168;
  p.jitter = 0.25;
  return p;
}

void ExperimentConfig::validate() const {
  if (codes.empty() || models.empty() || tts.empty() || ttr.empty() || stripe_kb.empty())
    throw std::invalid_argument("every grid list must be non-empty");
  if (num_sims < 1) throw std::invalid_argument("num_sims must be >= 1");
  if (!(mission_hours > 0)) throw std::invalid_argument("mission_hours must be > 0");
  for (double x : tts)
    if (!(x > 0)) throw std::invalid_argument("tts must be > 0");
  for (double x : ttr)
    if (!(x > 0)) throw std::invalid_argument("ttr must be > 0");
  if (pool_size < static_cast<std::uint64_t>(geometry.n_devices))
    throw std::invalid_argument("pool_size smaller than the array");
}

namespace {

std::string num(double x) {
  std::ostringstream o;
  o << x;
  return o.str();
}

}  // namespace

std::string GridPoint::id() const {
  return std::string(to_string(code)) + "_" + model + "_tts" + num(tts) + "_ttr" + num(ttr) + "_s" +
         std::to_string(stripe_kb) + "k";
}

std::vector<GridPoint> expand_grid(const ExperimentConfig& c) {
  std::vector<GridPoint> out;
  for (const auto& m : c.models)
    for (int s : c.stripe_kb)
      for (double tts : c.tts)
        for (double ttr : c.ttr)
          for (CodeKind code : c.codes) out.push_back({code, m, tts, ttr, s});
  return out;
}

std::uint64_t pool_seed(std::uint64_t master, const std::string& model) {
  return mix_seed(master, hash_str("pool:" + model));
}

std::uint64_t sim_seed(std::uint64_t master, const GridPoint& g, std::uint64_t sim_index) {
  return mix_seed(mix_seed(master, hash_str("sim:" + g.model)), sim_index);
}

ArrayGeometry geometry_for(const ExperimentConfig& c, const GridPoint& g) {
  ArrayGeometry geo = c.geometry;
  geo.stripe_size = static_cast<std::uint64_t>(g.stripe_kb) * 1024;
  geo.validate();
  return geo;
}

json config_echo(const ExperimentConfig& c, const GridPoint& g) {
  ArrayGeometry geo = geometry_for(c, g);
  json j;
  j["code"] = to_string(g.code);
  j["model"] = g.model;
  j["tts_hours"] = g.tts;
  j["ttr_hours"] = g.ttr;
  j["mission_hours"] = c.mission_hours;
  j["geometry"] = {{"n_devices", geo.n_devices},
                   {"page_size", geo.page_size},
                   {"pages_per_block", geo.pages_per_block},
                   {"blocks_per_device", geo.blocks_per_device},
                   {"stripe_size", geo.stripe_size},
                   {"chunk_pages", geo.chunk_pages()},
                   {"cpb", geo.cpb()},
                   {"array_stripes", geo.array_stripes()}};
  j["pool"] = {{"size", c.pool_size}, {"blocks_basis", c.pool_blocks},
               {"seed", pool_seed(c.master_seed, g.model)}};
  j["master_seed"] = c.master_seed;
  if (c.usage_log_path.empty())
    j["workload"] = {{"synthetic", true},
                     {"write_rate", c.synth.write_rate},
                     {"read_rate", c.synth.read_rate},
                     {"device_capacity", c.synth.device_capacity},
                     {"write_amplification", c.synth.write_amplification},
                     {"duration", c.synth.duration},
                     {"jitter", c.synth.jitter},
                     {"seed", c.synth_seed}};
  else
    j["workload"] = {{"synthetic", false}, {"path", c.usage_log_path}};
  return j;
}

std::vector<UsageLog> make_logs(const ExperimentConfig& c, int n_devices) {
  if (!c.usage_log_path.empty()) return parse_usage_log(c.usage_log_path);
  std::vector<UsageLog> logs;
  for (int d = 0; d < n_devices; ++d)
    logs.push_back(synthesize_usage_log(c.synth, static_cast<std::uint64_t>(d), c.synth_seed));
  return logs;
}

void parallel_for(std::uint64_t n, unsigned workers,
                  const std::function<void(std::uint64_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, std::max<std::uint64_t>(n, 1)));
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto body = [&] {
    for (;;) {
      std::uint64_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
        next = n;
        return;
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> ts;
    for (unsigned w = 0; w < workers; ++w) ts.emplace_back(body);
    for (auto& t : ts) t.join();
  }
  if (err) std::rethrow_exception(err);
}

AggregateReport run_grid_point(const ExperimentConfig& c, const GridPoint& g, const SsdPool& pool,
                               const std::vector<UsageLog>& logs) {
  ArrayGeometry geo = geometry_for(c, g);
  SimParams params{g.tts, g.ttr, c.mission_hours, 1.0};
  json echo = config_echo(c, g);
  BsHazard hazard(pool.profile.rber_curve, logs, c.mission_hours);
  std::vector<TaggedResult> results(c.num_sims);
  parallel_for(c.num_sims, c.workers, [&](std::uint64_t i) {
    results[i].sim_index = i;
    results[i].config = echo;
    results[i].result = run_simulation(geo, g.code, pool, logs, params,
                                       sim_seed(c.master_seed, g, i), &hazard);
  });
  return aggregate_results(results, g.id());
}

int run_experiment(const ExperimentConfig& c, std::ostream& log) {
  c.validate();
  std::vector<SsdModelProfile> profiles = load_profiles(c.profiles_path);
  std::vector<UsageLog> logs = make_logs(c, c.geometry.n_devices);
  std::filesystem::create_directories(c.out_dir);

  std::map<std::string, SsdPool> pools;
  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["master_seed"] = c.master_seed;
  manifest["seed_derivation"] =
      "sim seed = mix(mix(master_seed, fnv1a('sim:' + model)), sim_index); "
      "pool seed = mix(master_seed, fnv1a('pool:' + model))";
  manifest["num_sims"] = c.num_sims;
  manifest["outputs"] = json::array();
  std::vector<std::string> failures;

  for (const GridPoint& g : expand_grid(c)) {
    auto t0 = std::chrono::steady_clock::now();
    try {
      auto it = pools.find(g.model);
      if (it == pools.end()) {
        const SsdModelProfile& p = find_profile(profiles, g.model);
        SsdModelProfile pm = p;
        pm.mission_hours_basis = c.mission_hours;
        it = pools.emplace(g.model, generate_pool(pm, c.pool_size, c.pool_blocks,
                                                  pool_seed(c.master_seed, g.model)))
                 .first;
      }
      AggregateReport r = run_grid_point(c, g, it->second, logs);
      std::string base = (std::filesystem::path(c.out_dir) / g.id()).string();
      emit_report(r, ReportFormat::JSON, base + ".json");
      emit_report(r, ReportFormat::CSV, base + ".csv");
      manifest["outputs"].push_back({{"grid_point", g.id()},
                                     {"json", g.id() + ".json"},
                                     {"csv", g.id() + ".csv"},
                                     {"pool_seed", pool_seed(c.master_seed, g.model)},
                                     {"first_sim_seed", sim_seed(c.master_seed, g, 0)}});
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log << g.id() << ": mean lost stripes " << r.mean_lost << " over " << c.num_sims
          << " sims (" << secs << " s)\n";
    } catch (const std::exception& e) {
      failures.push_back(g.id() + ": " + e.what());
      log << "error: " << g.id() << ": " << e.what() << '\n';
    }
  }
  manifest["failures"] = failures;
  std::ofstream(std::filesystem::path(c.out_dir) / "manifest.json") << manifest.dump(2) << '\n';
  if (!failures.empty()) {
    log << failures.size() << " grid point(s) failed\n";
    return 1;
  }
  return 0;
}

}  // namespace ssdfi
