#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"

using namespace ssdfi;

namespace {

const std::vector<UsageLog> kNoLogs;

ArraySim quiet_sim(const SsdPool& pool, CodeKind code, SimParams params = {}) {
  return ArraySim(ArrayGeometry{}, code, pool, kNoLogs, params, 1);
}

SimEvent bc(double t, int d) { return {t, EventKind::BadChip, d, 0}; }
SimEvent bb(double t, int d, std::uint64_t block) { return {t, EventKind::BadBlock, d, block}; }
SimEvent bs(double t, int d, std::uint64_t sym) { return {t, EventKind::BadSymbol, d, sym}; }

}  // namespace

TEST_CASE("default geometry") {
  ArrayGeometry g;
  CHECK_NOTHROW(g.validate());
  CHECK(g.chunk_pages() == 4);
  CHECK(g.cpb() == 16);
  CHECK(g.array_stripes() == 2097152);
  CHECK(g.symbols_per_device() == 131072ull * 64);
  g.stripe_size = 32 * 1024;
  CHECK(g.chunk_pages() == 1);
  CHECK(g.array_stripes() == 131072ull * 64);
  g.stripe_size = 100 * 1024;
  CHECK_THROWS(g.validate());
}

TEST_CASE("affected stripe ranges") {
  ArrayGeometry g;
  auto r = affected_stripe_range(g, bb(0, 0, 0));
  CHECK(r.begin == 0);
  CHECK(r.end == 16);
  r = affected_stripe_range(g, bb(0, 0, 5));
  CHECK(r.begin == 80);
  CHECK(r.end == 96);
  r = affected_stripe_range(g, bs(0, 0, 100));
  CHECK(r.begin == 25);
  CHECK(r.size() == 1);
  CHECK(100 % g.chunk_pages() == 0);
  r = affected_stripe_range(g, bc(0, 0));
  CHECK(r.size() == 2097152);
  CHECK_THROWS_AS(affected_stripe_range(g, bb(0, 0, g.blocks_per_device)), std::out_of_range);
  CHECK_THROWS_AS(affected_stripe_range(g, bs(0, 0, g.symbols_per_device())), std::out_of_range);
}

TEST_CASE("samplers") {
  CHECK(next_failure_offset(1e-3, 0.5) == doctest::Approx(-std::log(0.5) / 1e-3));
  CHECK(next_failure_offset(1e-3, 0.5) == doctest::Approx(693.147).epsilon(1e-6));
  CHECK(next_failure_offset(2.0, 0.0) == 0);
  CHECK(std::isinf(next_failure_offset(0, 0.3)));
  CHECK(next_failure_location(32, 0.0) == 0);
  CHECK(next_failure_location(32, 0.999) == 31);
  CHECK(next_failure_location(16384, 0.5) == 8192);
  CHECK(next_failure_location(7, 0.9999999999999999) == 6);

  Rng rng(3);
  const double rate = 0.037;
  double sum = 0;
  for (int i = 0; i < 1000000; ++i) sum += next_failure_offset(rate, rng.uniform());
  CHECK(sum / 1e6 == doctest::Approx(1 / rate).epsilon(0.01));
}

TEST_CASE("event kinds tie in repair-first order") {
  CHECK(EventKind::Scrub < EventKind::ReconstructComplete);
  CHECK(EventKind::ReconstructComplete < EventKind::WearOutReplace);
  CHECK(EventKind::WearOutReplace < EventKind::BadChip);
  CHECK(EventKind::BadChip < EventKind::BadBlock);
  CHECK(EventKind::BadBlock < EventKind::BadSymbol);
}

TEST_CASE("cause labels are canonical") {
  CHECK(Cause{1, 1, 0}.label() == "BC+BB");
  CHECK(Cause{0, 0, 2}.label() == "BS+BS");
  CHECK(Cause{1, 1, 1}.label() == "BC+BB+BS");
  CHECK(Cause{2, 0, 0}.label() == "BC+BC");
}

TEST_CASE("two bad chips lose the RAID5 array") {
  SsdPool pool = testutil::quiet_pool();
  ArraySim sim = quiet_sim(pool, CodeKind::RAID5);
  CHECK(sim.handle_failure(bc(50, 0)).empty());
  auto recs = sim.handle_failure(bc(55, 3));
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].scope == LossScope::ADL);
  CHECK(recs[0].cause.label() == "BC+BC");
  CHECK(recs[0].stripes_lost == sim.geometry().array_stripes());
  CHECK(sim.ddf() == 1);
  CHECK(sim.tdf() == 0);
  // a third failure while the array is already lost adds no record
  CHECK(sim.handle_failure(bc(56, 5)).empty());
  CHECK(sim.tdf() == 1);
}

TEST_CASE("RAID6 survives two bad chips") {
  SsdPool pool = testutil::quiet_pool();
  ArraySim sim = quiet_sim(pool, CodeKind::RAID6);
  sim.handle_failure(bc(50, 0));
  CHECK(sim.handle_failure(bc(51, 1)).empty());
  CHECK(sim.ddf() == 1);
  auto recs = sim.handle_failure(bc(52, 2));
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].scope == LossScope::ADL);
}

TEST_CASE("bad chip then bad block is a block loss") {
  SsdPool pool = testutil::quiet_pool();
  for (CodeKind code : {CodeKind::RAID5, CodeKind::PMDS11}) {
    ArraySim sim = quiet_sim(pool, code);
    sim.handle_failure(bc(100, 0));
    auto recs = sim.handle_failure(bb(105, 1, 7));
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].scope == LossScope::BDL);
    CHECK(recs[0].cause.label() == "BC+BB");
    CHECK(recs[0].stripes_lost <= 16);
    CHECK(recs[0].stripes_lost == 16);
    CHECK(recs[0].time == 105);
  }
  ArraySim r6 = quiet_sim(pool, CodeKind::RAID6);
  r6.handle_failure(bc(100, 0));
  CHECK(r6.handle_failure(bb(105, 1, 7)).empty());
}

TEST_CASE("single bad symbol is always correctable") {
  SsdPool pool = testutil::quiet_pool();
  for (CodeKind code : {CodeKind::RAID5, CodeKind::RAID6, CodeKind::PMDS11}) {
    ArraySim sim = quiet_sim(pool, code);
    CHECK(sim.handle_failure(bs(3, 2, 12345)).empty());
    CHECK(sim.latent_symbols(2) == 1);
  }
}

TEST_CASE("scrub") {
  SsdPool pool = testutil::quiet_pool();
  SUBCASE("clears a lone latent symbol") {
    ArraySim sim = quiet_sim(pool, CodeKind::RAID5);
    sim.add_latent_symbol(1, 40);
    CHECK(sim.apply_scrub(10000).empty());
    CHECK(sim.latent_symbols(1) == 0);
  }
  SUBCASE("finds two symbols in one RAID5 stripe") {
    ArraySim sim = quiet_sim(pool, CodeKind::RAID5);
    sim.add_latent_symbol(1, 40);
    sim.add_latent_symbol(2, 41);
    auto recs = sim.apply_scrub(10000);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].scope == LossScope::SDL);
    CHECK(recs[0].cause.label() == "BS+BS");
    CHECK(recs[0].stripes_lost == 1);
    CHECK(sim.latent_symbols(1) == 0);
    CHECK(sim.latent_symbols(2) == 0);
  }
  SUBCASE("no latent faults") {
    ArraySim sim = quiet_sim(pool, CodeKind::PMDS11);
    CHECK(sim.apply_scrub(100).empty());
  }
  SUBCASE("latent blocks are reallocated") {
    ArraySim sim = quiet_sim(pool, CodeKind::RAID6);
    sim.add_latent_block(4, 9);
    CHECK(sim.apply_scrub(100).empty());
    CHECK(sim.latent_blocks(4) == 0);
  }
}

TEST_CASE("reconstruction window") {
  SsdPool pool = testutil::quiet_pool();
  SUBCASE("lone bad chip") {
    ArraySim sim = quiet_sim(pool, CodeKind::RAID5);
    sim.handle_failure(bc(10, 3));
    CHECK(sim.failed(3));
    CHECK(sim.apply_reconstruct(3, 20).empty());
    CHECK_FALSE(sim.failed(3));
    CHECK(sim.failed_count() == 0);
  }
  SUBCASE("bad symbol during rebuild, RAID5") {
    ArraySim sim = quiet_sim(pool, CodeKind::RAID5);
    sim.handle_failure(bc(10, 3));
    auto recs = sim.handle_failure(bs(14, 5, 999));
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].scope == LossScope::SDL);
    CHECK(recs[0].cause.label() == "BC+BS");
    CHECK(recs[0].time == 14);
  }
  SUBCASE("bad symbol during rebuild, RAID6 and PMDS") {
    for (CodeKind code : {CodeKind::RAID6, CodeKind::PMDS11}) {
      ArraySim sim = quiet_sim(pool, code);
      sim.handle_failure(bc(10, 3));
      CHECK(sim.handle_failure(bs(14, 5, 999)).empty());
      CHECK(sim.apply_reconstruct(3, 20).empty());
    }
  }
  SUBCASE("faults on a failed device are ignored") {
    ArraySim sim = quiet_sim(pool, CodeKind::RAID5);
    sim.handle_failure(bc(10, 3));
    CHECK(sim.handle_failure(bs(12, 3, 5)).empty());
    CHECK(sim.latent_symbols(3) == 0);
  }
  SUBCASE("latent symbol on another device meets a bad chip") {
    ArraySim sim = quiet_sim(pool, CodeKind::RAID5);
    sim.add_latent_symbol(6, 4000);
    auto recs = sim.handle_failure(bc(10, 2));
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].cause.label() == "BC+BS");
  }
}

TEST_CASE("PMDS needs more than one extra symbol to lose data") {
  SsdPool pool = testutil::quiet_pool();
  const int cp = ArrayGeometry{}.chunk_pages();
  auto sym = [&](std::uint64_t stripe, int i) { return stripe * cp + i; };

  ArraySim a = quiet_sim(pool, CodeKind::PMDS11);
  CHECK(a.handle_failure(bs(1, 0, sym(7, 0))).empty());
  CHECK(a.handle_failure(bs(2, 0, sym(7, 1))).empty());
  CHECK(a.handle_failure(bs(3, 1, sym(7, 2))).empty());  // two-in-one plus one
  auto recs = a.handle_failure(bs(4, 1, sym(7, 3)));      // two plus two
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].cause.label() == "BS+BS");

  ArraySim b = quiet_sim(pool, CodeKind::PMDS11);
  b.handle_failure(bs(1, 0, sym(9, 0)));
  b.handle_failure(bs(2, 1, sym(9, 0)));
  recs = b.handle_failure(bs(3, 2, sym(9, 0)));  // three distinct chunks
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].cause.label() == "BS+BS+BS");

  ArraySim c = quiet_sim(pool, CodeKind::RAID6);
  c.handle_failure(bs(1, 0, sym(7, 0)));
  c.handle_failure(bs(2, 0, sym(7, 1)));
  c.handle_failure(bs(3, 1, sym(7, 2)));
  CHECK(c.handle_failure(bs(4, 1, sym(7, 3))).empty());

  // symbols in different stripes never combine
  ArraySim d = quiet_sim(pool, CodeKind::PMDS11);
  d.handle_failure(bc(1, 4));
  CHECK(d.handle_failure(bs(2, 0, sym(11, 0))).empty());
  CHECK(d.handle_failure(bs(3, 1, sym(12, 0))).empty());
}

TEST_CASE("a lost stripe is recorded once until the next scrub") {
  SsdPool pool = testutil::quiet_pool();
  ArraySim sim = quiet_sim(pool, CodeKind::RAID5);
  sim.handle_failure(bs(1, 0, 0));
  CHECK(sim.handle_failure(bs(2, 1, 0)).size() == 1);
  CHECK(sim.handle_failure(bs(3, 2, 0)).empty());
  CHECK(sim.apply_scrub(10).empty());
  CHECK(sim.handle_failure(bs(11, 0, 0)).empty());
  CHECK(sim.handle_failure(bs(12, 1, 0)).size() == 1);
}

TEST_CASE("block records stay within one block's stripes") {
  SsdPool pool = testutil::quiet_pool();
  ArraySim sim = quiet_sim(pool, CodeKind::RAID5);
  // scattered symbols in block 3's stripes on other devices
  for (int d = 1; d < 8; ++d) sim.add_latent_symbol(d, (3 * 16 + d) * 4);
  auto recs = sim.handle_failure(bb(5, 0, 3));
  std::uint64_t total = 0;
  for (const auto& r : recs) {
    CHECK(r.scope == LossScope::BDL);
    total += r.stripes_lost;
  }
  CHECK(total == 7);
  CHECK(total <= 16);
}

TEST_CASE("wear-out replacement has no degraded window") {
  SsdPool pool = testutil::quiet_pool();
  pool.profile.rber_curve = testutil::flat_curve(1e-30);
  SynthWorkloadParams w;
  w.write_rate = w.device_capacity = 1e9;
  w.duration = 500;
  std::vector<UsageLog> logs;
  for (int d = 0; d < 8; ++d) logs.push_back(synthesize_usage_log(w, d, 1));
  SimParams params;
  params.mission = 8000;
  SimResult r = run_simulation(ArrayGeometry{}, CodeKind::RAID5, pool, logs, params, 5);
  CHECK(r.wear_out_replacements == 16);  // WOL 3000 reached at hours 3000 and 6000+1
  CHECK(r.records.empty());

  ArraySim sim(ArrayGeometry{}, CodeKind::RAID5, pool, logs, params, 5);
  sim.handle_failure(bc(10, 0));
  sim.replace_worn_out(1, 11);
  CHECK(sim.failed(0));
  CHECK_FALSE(sim.failed(1));
  CHECK(sim.failed_count() == 1);

  // never reached within the mission
  params.mission = 2000;
  r = run_simulation(ArrayGeometry{}, CodeKind::RAID5, pool, logs, params, 5);
  CHECK(r.wear_out_replacements == 0);
}

TEST_CASE("fault-free array loses nothing") {
  SsdPool pool = testutil::quiet_pool();
  SimResult r = run_simulation(ArrayGeometry{}, CodeKind::RAID5, pool, kNoLogs, SimParams{}, 1);
  CHECK(r.records.empty());
  CHECK(r.ddf == 0);
  CHECK(r.tdf == 0);
  CHECK(r.lost_stripes == 0);
}

TEST_CASE("simulation runs") {
  auto ps = load_profiles(testutil::data("profiles.csv"));
  SsdPool pool = generate_pool(find_profile(ps, "MLC-A"), 10000, 16384, 21);
  std::vector<UsageLog> logs;
  for (int d = 0; d < 8; ++d) logs.push_back(synthesize_usage_log(default_workload(), d, 7));
  SimParams params;
  params.tts = 1000;

  SUBCASE("deterministic") {
    SimResult a = run_simulation(ArrayGeometry{}, CodeKind::RAID5, pool, logs, params, 99);
    SimResult b = run_simulation(ArrayGeometry{}, CodeKind::RAID5, pool, logs, params, 99);
    CHECK(a.lost_stripes == b.lost_stripes);
    CHECK(a.records.size() == b.records.size());
    CHECK(a.bad_symbols == b.bad_symbols);
    CHECK(a.bad_symbols > 0);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].time == b.records[i].time);
      CHECK(a.records[i].cause == b.records[i].cause);
    }
  }

  SUBCASE("records are causal and totals add up") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      SimResult r = run_simulation(ArrayGeometry{}, CodeKind::RAID5, pool, logs, params, seed);
      double prev = 0;
      std::uint64_t sum = 0;
      std::array<std::uint64_t, 4> per{};
      for (const auto& rec : r.records) {
        CHECK(rec.time >= prev);
        CHECK(rec.time < params.mission);
        prev = rec.time;
        sum += rec.stripes_lost;
        per[static_cast<int>(rec.scope)] += rec.stripes_lost;
        if (rec.scope == LossScope::ADL) CHECK(rec.stripes_lost == 2097152);
        if (rec.scope == LossScope::BDL) CHECK(rec.stripes_lost <= 16);
        if (rec.scope == LossScope::SDL) CHECK(rec.stripes_lost == 1);
      }
      CHECK(sum == r.lost_stripes);
      CHECK(per == r.scope_stripes);
    }
  }

  SUBCASE("stronger codes never lose more on the same seed") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      auto l5 = run_simulation(ArrayGeometry{}, CodeKind::RAID5, pool, logs, params, seed).lost_stripes;
      auto lp = run_simulation(ArrayGeometry{}, CodeKind::PMDS11, pool, logs, params, seed).lost_stripes;
      auto l6 = run_simulation(ArrayGeometry{}, CodeKind::RAID6, pool, logs, params, seed).lost_stripes;
      CHECK(l6 <= lp);
      CHECK(lp <= l5);
    }
  }

  SUBCASE("bad inputs") {
    SsdPool tiny = testutil::quiet_pool(4);
    CHECK_THROWS(run_simulation(ArrayGeometry{}, CodeKind::RAID5, tiny, logs, params, 1));
    ArrayGeometry g;
    g.stripe_size = 12345;
    CHECK_THROWS(run_simulation(g, CodeKind::RAID5, pool, logs, params, 1));
  }
}

TEST_CASE("bad-symbol hazard table") {
  SynthWorkloadParams w = default_workload();
  w.duration = 100;
  std::vector<UsageLog> logs{synthesize_usage_log(w, 0, 1)};
  RberCurve curve{{{0, 1e-8}, {10, 1e-6}}};
  BsHazard hz(curve, logs, 1000);
  // hand sum over the first ten life-hours
  double hand = 0;
  for (std::uint64_t h = 1; h <= 10; ++h)
    hand += rber_at(curve, pe_cycles_at(logs[0], h)) * bits_accessed(logs[0], h);
  CHECK(hz.cumulative(0, 10) == doctest::Approx(hand));
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    double x = rng.uniform() * 999;
    CHECK(hz.invert(0, hz.cumulative(0, x)) == doctest::Approx(x).epsilon(1e-9));
  }
  CHECK(hz.invert(0, hz.cumulative(0, 2000) * 2) == kNever);

  // event counts over a flat rate are Poisson with the integrated mean
  SsdPool pool = testutil::quiet_pool();
  pool.profile.rber_curve = testutil::flat_curve(1e-8);
  std::vector<UsageLog> flat(8, logs[0]);
  for (auto& l : flat)
    for (auto& s : l.samples) {
      s.bits_read = 5e5;
      s.bits_written = 5e5;
      s.pe_cycles = 0;
    }
  SimParams params;
  params.mission = 20000;
  double events = 0;
  for (int seed = 0; seed < 20; ++seed)
    events += static_cast<double>(
        run_simulation(ArrayGeometry{}, CodeKind::RAID6, pool, flat, params, seed).bad_symbols);
  const double expect = 20 * 8 * 1e-8 * 1e6 * 20000;  // 32000
  CHECK(std::abs(events - expect) < 4 * std::sqrt(expect));
}
