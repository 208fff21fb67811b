#include <algorithm>
#include <cmath>
#include <sstream>
#include <random>

#include "doctest.h"
#include "helpers.hpp"

using namespace ssdfi;

namespace {

DataLossRecord rec(double t, LossScope s, Cause c, std::uint64_t n) { return {t, s, c, n}; }

TaggedResult tagged(std::uint64_t idx, std::vector<DataLossRecord> recs) {
  TaggedResult t;
  t.sim_index = idx;
  t.config = {{"code", "RAID5"}};
  t.result.seed = 1000 + idx;
  for (const auto& r : recs) {
    t.result.records.push_back(r);
    t.result.lost_stripes += r.stripes_lost;
    t.result.scope_records[static_cast<int>(r.scope)] += 1;
    t.result.scope_stripes[static_cast<int>(r.scope)] += r.stripes_lost;
  }
  t.result.ddf = idx % 3;
  t.result.bad_symbols = 10 * idx;
  return t;
}

std::vector<TaggedResult> random_results(std::uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<TaggedResult> out;
  for (int i = 0; i < n; ++i) {
    std::vector<DataLossRecord> recs;
    int k = static_cast<int>(rng.below(5));
    for (int j = 0; j < k; ++j) {
      Cause c{static_cast<std::uint8_t>(rng.below(2)), static_cast<std::uint8_t>(rng.below(2)),
              static_cast<std::uint8_t>(1 + rng.below(2))};
      bool block = c.bb > 0;
      recs.push_back(rec(j, block ? LossScope::BDL : LossScope::SDL, c, block ? 1 + rng.below(16) : 1));
    }
    out.push_back(tagged(static_cast<std::uint64_t>(i), recs));
  }
  return out;
}

}  // namespace

TEST_CASE("aggregate totals") {
  auto a = tagged(0, {rec(1, LossScope::SDL, {0, 0, 2}, 1), rec(2, LossScope::BDL, {1, 1, 0}, 2)});
  auto b = tagged(1, {rec(1, LossScope::BDL, {1, 1, 0}, 5)});
  AggregateReport r = aggregate_results({a, b}, "x");
  CHECK(r.total_lost == 8);
  CHECK(r.mean_lost == 4);
  CHECK(r.per_seed.size() == 2);
  CHECK(r.median_lost == 4);
  CHECK(r.stddev_lost == doctest::Approx(std::sqrt(2.0)));
  CHECK(r.breakdown.total_stripes() == r.total_lost);
  CHECK(r.breakdown.find("BC+BB")->records == 2);
  CHECK(r.breakdown.fraction("BC+BB") == doctest::Approx(7.0 / 8));
  CHECK(r.scope_stripes[static_cast<int>(LossScope::BDL)] == 7);

  AggregateReport swapped = aggregate_results({b, a}, "x");
  CHECK(swapped == r);

  AggregateReport empty = aggregate_results({tagged(0, {})});
  CHECK(empty.total_lost == 0);
  CHECK(empty.mean_lost == 0);
  CHECK(empty.breakdown.rows.empty());

  auto c = tagged(2, {});
  c.config = {{"code", "RAID6"}};
  CHECK_THROWS(aggregate_results({a, c}));
  CHECK_THROWS(aggregate_results({}));
}

TEST_CASE("breakdown") {
  auto t = loss_breakdown({rec(0, LossScope::BDL, {1, 1, 0}, 3), rec(1, LossScope::BDL, {1, 1, 0}, 4)});
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0].label == "BC+BB");
  CHECK(t.rows[0].fraction == 1.0);
  CHECK(loss_breakdown({}).rows.empty());

  // record counts from the field comparison: BC+BS 123, BS+BS 2, BC+BB 12,194,444
  std::vector<DataLossRecord> recs;
  for (int i = 0; i < 123; ++i) recs.push_back(rec(0, LossScope::SDL, {1, 0, 1}, 1));
  for (int i = 0; i < 2; ++i) recs.push_back(rec(0, LossScope::SDL, {0, 0, 2}, 1));
  recs.push_back(rec(0, LossScope::BDL, {1, 1, 0}, 12194444));
  auto big = loss_breakdown(recs);
  CHECK(big.fraction("BC+BB") > 0.99);
  CHECK(big.find("BS+BS")->records == 2);

  auto collapsed = collapse_minor(big);
  CHECK(collapsed.rows.size() == 2);
  CHECK(collapsed.find(kOtherLabel)->records == 125);
  CHECK(collapsed.total_stripes() == big.total_stripes());
}

TEST_CASE("fractions sum to one and stripes are conserved") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    AggregateReport r = aggregate_results(random_results(s, 30));
    if (r.total_lost == 0) continue;
    double f = 0;
    for (const auto& row : r.breakdown.rows) f += row.fraction;
    CHECK(f == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.breakdown.total_stripes() == r.total_lost);
    std::uint64_t scopes = 0;
    for (auto x : r.scope_stripes) scopes += x;
    CHECK(scopes == r.total_lost);
  }
}

TEST_CASE("merge is associative and order-free") {
  auto all = random_results(77, 30);
  std::vector<TaggedResult> a(all.begin(), all.begin() + 7), b(all.begin() + 7, all.begin() + 19),
      c(all.begin() + 19, all.end());
  auto A = aggregate_results(a), B = aggregate_results(b), C = aggregate_results(c);
  auto left = merge_reports(merge_reports(A, B), C);
  auto right = merge_reports(A, merge_reports(B, C));
  CHECK(left == right);
  CHECK(merge_reports(C, merge_reports(A, B)) == left);
  CHECK(left == aggregate_results(all));

  std::mt19937 g(5);
  auto shuffled = all;
  std::shuffle(shuffled.begin(), shuffled.end(), g);
  CHECK(aggregate_results(shuffled) == aggregate_results(all));
}

TEST_CASE("serialization") {
  AggregateReport r = aggregate_results(random_results(3, 12), "grid_a");
  REQUIRE(!r.breakdown.rows.empty());
  auto dir = testutil::temp_dir("report");

  SUBCASE("json round trip") {
    auto p = (dir / "r.json").string();
    emit_report(r, ReportFormat::JSON, p);
    AggregateReport back = read_json_report(p);
    CHECK(back == r);
    CHECK(to_json(back) == to_json(r));
    CHECK(nlohmann::json::parse(testutil::read_file(p))["schema_version"] == kSchemaVersion);
  }
  SUBCASE("csv layout") {
    auto p = (dir / "r.csv").string();
    emit_report(r, ReportFormat::CSV, p);
    std::string text = testutil::read_file(p);
    CHECK(text == to_csv(r));
    std::istringstream in(text);
    std::string header;
    std::getline(in, header);
    CHECK(header == "label,records,stripes,fraction");
    std::string line;
    std::getline(in, line);
    auto frac = line.substr(line.rfind(',') + 1);
    CHECK(frac.size() - frac.find('.') - 1 == 6);
    CHECK(text.find("# summary") != std::string::npos);
    CHECK(text.find("mean_lost_stripes,") != std::string::npos);
  }
  SUBCASE("unwritable path") {
    CHECK_THROWS_WITH(emit_report(r, ReportFormat::JSON, "/nonexistent/dir/r.json"),
                      doctest::Contains("/nonexistent/dir/r.json"));
  }
  SUBCASE("future schema rejected") {
    auto j = to_json(r);
    j["schema_version"] = kSchemaVersion + 1;
    CHECK_THROWS(report_from_json(j));
  }
}
