// ssdfi: fault-injection runs, pool checks, cost tables and synthetic logs.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "ssdfi/experiment.hpp"

using namespace ssdfi;

namespace {

#ifndef SSDFI_DEFAULT_PROFILES
#define SSDFI_DEFAULT_PROFILES "data/profiles.csv"
#endif

int cmd_validate_pool(const std::string& profiles, const std::vector<std::string>& models,
                      std::uint64_t pool_size, std::uint64_t blocks, std::uint64_t seed) {
  auto ps = load_profiles(profiles);
  std::vector<std::string> names = models;
  if (names.empty())
    for (const auto& p : ps) names.push_back(p.name);
  std::printf("%-8s %7s %7s %7s %6s %8s %9s %8s | %7s %7s %7s %7s\n", "model", "BB", "BC",
              "BC>5%", "ratio", "medianBB", "meanBB", "BCnoBB", "k=2", "k=3", "k=4", "k=5");
  for (const auto& name : names) {
    const auto& p = find_profile(ps, name);
    SsdPool pool = generate_pool(p, pool_size, blocks, pool_seed(seed, name));
    PoolValidationReport r = validate_pool(pool);
    std::printf("%-8s %7llu %7llu %7llu %6.3f %8.1f %9.2f %8llu | %7.1f %7.1f %7.1f %7.1f\n",
                name.c_str(), static_cast<unsigned long long>(r.drives_with_bb),
                static_cast<unsigned long long>(r.drives_with_bc),
                static_cast<unsigned long long>(r.bc_with_gt_5pct), r.bc_gt_5pct_ratio,
                r.median_bb, r.mean_bb, static_cast<unsigned long long>(r.bc_without_bb),
                r.cond_median[0], r.cond_median[1], r.cond_median[2], r.cond_median[3]);
  }
  return 0;
}

int cmd_cost(const std::vector<std::string>& codes, int n, int r) {
  std::printf("n=%d r=%d\n", n, r);
  std::printf("%-7s %8s %6s | %-9s %-9s %-11s\n", "code", "ERF", "XORs", "sector W/R", "row W/R",
              "stripe W/R");
  for (const auto& name : codes) {
    CodeKind c = parse_code(name);
    auto s = update_penalty(c, n, r, Granularity::Sector);
    auto w = update_penalty(c, n, r, Granularity::Row);
    auto t = update_penalty(c, n, r, Granularity::Stripe);
    std::printf("%-7s %8.4f %6ld | %4ld/%-4ld %4ld/%-4ld %5ld/%-5ld\n", to_string(c), erf(c, n, r),
                encode_xor_count(c, n, r), s.writes, s.reads, w.writes, w.reads, t.writes, t.reads);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SSD array fault-injection simulator"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value configuration file");

  ExperimentConfig cfg;
  cfg.profiles_path = SSDFI_DEFAULT_PROFILES;
  std::vector<std::string> codes{"RAID5", "RAID6", "PMDS11"};
  std::vector<std::string> models{"MLC-A"};

  auto* run = app.add_subcommand("run", "run the simulation grid and write reports");
  run->add_option("--profiles", cfg.profiles_path, "profile CSV")->capture_default_str();
  run->add_option("--code", codes, "codes: RAID5, RAID6, PMDS11")->delimiter(',')->capture_default_str();
  run->add_option("--model", models, "profile names")->delimiter(',')->capture_default_str();
  run->add_option("--tts", cfg.tts, "time to scrub, hours")->delimiter(',')->capture_default_str();
  run->add_option("--ttr", cfg.ttr, "time to reconstruct, hours")->delimiter(',')->capture_default_str();
  run->add_option("--stripe-kb", cfg.stripe_kb, "stripe sizes in KB")->delimiter(',')->capture_default_str();
  run->add_option("--sims", cfg.num_sims, "simulations per grid point")->capture_default_str();
  run->add_option("--mission-hours", cfg.mission_hours)->capture_default_str();
  run->add_option("--seed", cfg.master_seed, "master seed")->capture_default_str();
  run->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
  run->add_option("--workers", cfg.workers, "worker threads (0 = all cores)")->capture_default_str();
  run->add_option("--pool-size", cfg.pool_size)->capture_default_str();
  run->add_option("--pool-blocks", cfg.pool_blocks, "blocks behind the 5% bad-block mark")->capture_default_str();
  run->add_option("--devices", cfg.geometry.n_devices)->capture_default_str();
  run->add_option("--blocks", cfg.geometry.blocks_per_device, "blocks per device")->capture_default_str();
  run->add_option("--usage-log", cfg.usage_log_path, "usage log CSV (default: synthesized)");
  run->add_option("--write-rate", cfg.synth.write_rate, "synthetic bytes written/hour")->capture_default_str();
  run->add_option("--read-rate", cfg.synth.read_rate, "synthetic bytes read/hour")->capture_default_str();

  std::string vp_profiles = SSDFI_DEFAULT_PROFILES;
  std::vector<std::string> vp_models;
  std::uint64_t vp_pool = 10000, vp_blocks = 16384, vp_seed = 1;
  auto* vp = app.add_subcommand("validate-pool", "generate pools and print their statistics");
  vp->add_option("--profiles", vp_profiles)->capture_default_str();
  vp->add_option("--model", vp_models, "profiles to check (default all)")->delimiter(',');
  vp->add_option("--pool-size", vp_pool)->capture_default_str();
  vp->add_option("--blocks", vp_blocks, "blocks behind the 5% bad-block mark")->capture_default_str();
  vp->add_option("--seed", vp_seed, "master seed, mixed with the model name as in run")->capture_default_str();

  std::vector<std::string> cost_codes{"RAID5", "RAID6", "PMDS11"};
  int cost_n = 8, cost_r = 4;
  auto* cost = app.add_subcommand("cost", "ERF, XOR count and update penalties");
  cost->add_option("--code", cost_codes)->delimiter(',')->capture_default_str();
  cost->add_option("-n,--devices", cost_n, "data chunks per row")->capture_default_str();
  cost->add_option("-r,--rows", cost_r, "rows per stripe")->capture_default_str();

  SynthWorkloadParams sp = default_workload();
  int sl_devices = 8;
  std::uint64_t sl_seed = 7;
  std::string sl_out = "usage.csv";
  auto* sl = app.add_subcommand("synth-log", "write a synthetic usage log");
  sl->add_option("--write-rate", sp.write_rate, "bytes/hour")->capture_default_str();
  sl->add_option("--read-rate", sp.read_rate, "bytes/hour")->capture_default_str();
  sl->add_option("--capacity", sp.device_capacity, "bytes")->capture_default_str();
  sl->add_option("--wa", sp.write_amplification, "write amplification")->capture_default_str();
  sl->add_option("--duration", sp.duration, "hours")->capture_default_str();
  sl->add_option("--jitter", sp.jitter)->capture_default_str();
  sl->add_option("--devices", sl_devices)->capture_default_str();
  sl->add_option("--seed", sl_seed)->capture_default_str();
  sl->add_option("--out", sl_out)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      cfg.codes.clear();
      for (const auto& c : codes) cfg.codes.push_back(parse_code(c));
      cfg.models = models;
      return run_experiment(cfg, std::cout);
    }
    if (*vp) return cmd_validate_pool(vp_profiles, vp_models, vp_pool, vp_blocks, vp_seed);
    if (*cost) return cmd_cost(cost_codes, cost_n, cost_r);
    if (*sl) {
      std::vector<UsageLog> logs;
      for (int d = 0; d < sl_devices; ++d)
        logs.push_back(synthesize_usage_log(sp, static_cast<std::uint64_t>(d), sl_seed));
      write_usage_log(logs, sl_out);
      std::cout << "wrote " << sl_out << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
