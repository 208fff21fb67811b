#include "ssdfi/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ssdfi {

using nlohmann::json;

std::uint64_t BreakdownTable::total_stripes() const {
  std::uint64_t t = 0;
  for (const auto& r : rows) t += r.stripes;
  return t;
}

const BreakdownRow* BreakdownTable::find(const std::string& label) const {
  for (const auto& r : rows)
    if (r.label == label) return &r;
  return nullptr;
}

double BreakdownTable::fraction(const std::string& label) const {
  const BreakdownRow* r = find(label);
  return r ? r->fraction : 0.0;
}

namespace {

void finish(BreakdownTable& t) {
  std::uint64_t total = t.total_stripes();
  for (auto& r : t.rows)
    r.fraction = total ? static_cast<double>(r.stripes) / static_cast<double>(total) : 0.0;
  std::sort(t.rows.begin(), t.rows.end(), [](const BreakdownRow& a, const BreakdownRow& b) {
    if (a.stripes != b.stripes) return a.stripes > b.stripes;
    return a.label < b.label;
  });
}

BreakdownTable from_map(const std::map<std::string, std::pair<std::uint64_t, std::uint64_t>>& m) {
  BreakdownTable t;
  for (const auto& [label, v] : m) t.rows.push_back({label, v.first, v.second, 0});
  finish(t);
  return t;
}

void recompute_stats(AggregateReport& r) {
  std::sort(r.per_seed.begin(), r.per_seed.end(), [](const SeedTotal& a, const SeedTotal& b) {
    return a.sim_index != b.sim_index ? a.sim_index < b.sim_index : a.seed < b.seed;
  });
  std::vector<std::uint64_t> v;
  std::uint64_t total = 0;
  for (const auto& s : r.per_seed) {
    v.push_back(s.lost_stripes);
    total += s.lost_stripes;
  }
  r.total_lost = total;
  const double n = static_cast<double>(v.size());
  r.mean_lost = v.empty() ? 0 : static_cast<double>(total) / n;
  std::sort(v.begin(), v.end());
  if (v.empty())
    r.median_lost = 0;
  else if (v.size() % 2)
    r.median_lost = static_cast<double>(v[v.size() / 2]);
  else
    r.median_lost = 0.5 * (static_cast<double>(v[v.size() / 2 - 1]) + static_cast<double>(v[v.size() / 2]));
  double ss = 0;
  for (auto x : v) ss += (static_cast<double>(x) - r.mean_lost) * (static_cast<double>(x) - r.mean_lost);
  r.stddev_lost = v.size() > 1 ? std::sqrt(ss / (n - 1)) : 0;
}

json default_metadata() {
  return {{"legend", "BC = bad chip (whole device, 'BD' in figure legends); BB = bad block; "
                     "BS = bad symbol (page)"},
          {"breakdown_weight", "stripes lost"},
          {"usage_logs", "replayed cyclically over the mission, P/E carried across passes"}};
}

}  // namespace

BreakdownTable loss_breakdown(const std::vector<DataLossRecord>& records) {
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> m;
  for (const auto& r : records) {
    auto& v = m[r.cause.label()];
    v.first += 1;
    v.second += r.stripes_lost;
  }
  return from_map(m);
}

BreakdownTable collapse_minor(const BreakdownTable& t, double threshold) {
  BreakdownTable out;
  BreakdownRow other{kOtherLabel, 0, 0, 0};
  for (const auto& r : t.rows) {
    if (r.fraction < threshold) {
      other.records += r.records;
      other.stripes += r.stripes;
    } else {
      out.rows.push_back(r);
    }
  }
  if (other.records) out.rows.push_back(other);
  std::uint64_t total = out.total_stripes();
  for (auto& r : out.rows)
    r.fraction = total ? static_cast<double>(r.stripes) / static_cast<double>(total) : 0.0;
  return out;
}

AggregateReport aggregate_results(const std::vector<TaggedResult>& results,
                                  const std::string& experiment_id) {
  if (results.empty()) throw std::invalid_argument("aggregate_results: no results");
  AggregateReport r;
  r.experiment_id = experiment_id;
  r.config = results.front().config;
  r.metadata = default_metadata();
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> m;
  for (const auto& t : results) {
    if (t.config != r.config) throw std::invalid_argument("aggregate_results: mixed configs");
    const SimResult& s = t.result;
    r.per_seed.push_back({t.sim_index, s.seed, s.lost_stripes});
    for (int i = 0; i < 4; ++i) {
      r.scope_records[i] += s.scope_records[i];
      r.scope_stripes[i] += s.scope_stripes[i];
    }
    for (const auto& rec : s.records) {
      auto& v = m[rec.cause.label()];
      v.first += 1;
      v.second += rec.stripes_lost;
    }
    r.ddf += s.ddf;
    r.tdf += s.tdf;
    r.bad_chips += s.bad_chips;
    r.bad_blocks += s.bad_blocks;
    r.bad_symbols += s.bad_symbols;
    r.reconstructions += s.reconstructions;
    r.wear_out_replacements += s.wear_out_replacements;
  }
  r.breakdown = from_map(m);
  recompute_stats(r);
  return r;
}

AggregateReport merge_reports(const AggregateReport& a, const AggregateReport& b) {
  if (a.config != b.config) throw std::invalid_argument("merge_reports: mixed configs");
  AggregateReport r = a;
  r.per_seed.insert(r.per_seed.end(), b.per_seed.begin(), b.per_seed.end());
  for (int i = 0; i < 4; ++i) {
    r.scope_records[i] += b.scope_records[i];
    r.scope_stripes[i] += b.scope_stripes[i];
  }
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> m;
  for (const auto* t : {&a.breakdown, &b.breakdown})
    for (const auto& row : t->rows) {
      m[row.label].first += row.records;
      m[row.label].second += row.stripes;
    }
  r.breakdown = from_map(m);
  r.ddf += b.ddf;
  r.tdf += b.tdf;
  r.bad_chips += b.bad_chips;
  r.bad_blocks += b.bad_blocks;
  r.bad_symbols += b.bad_symbols;
  r.reconstructions += b.reconstructions;
  r.wear_out_replacements += b.wear_out_replacements;
  recompute_stats(r);
  return r;
}

json to_json(const AggregateReport& r) {
  json j;
  j["schema_version"] = r.schema_version;
  j["experiment_id"] = r.experiment_id;
  j["config"] = r.config;
  j["simulations"] = r.per_seed.size();
  json seeds = json::array();
  for (const auto& s : r.per_seed)
    seeds.push_back({{"sim_index", s.sim_index}, {"seed", s.seed}, {"lost_stripes", s.lost_stripes}});
  j["per_seed"] = seeds;
  j["lost_stripes"] = {{"total", r.total_lost},
                       {"mean", r.mean_lost},
                       {"median", r.median_lost},
                       {"stddev", r.stddev_lost}};
  json scopes;
  for (LossScope s : {LossScope::SDL, LossScope::BDL, LossScope::ADL})
    scopes[to_string(s)] = {{"records", r.scope_records[static_cast<int>(s)]},
                            {"stripes", r.scope_stripes[static_cast<int>(s)]}};
  j["scopes"] = scopes;
  json rows = json::array();
  for (const auto& row : r.breakdown.rows)
    rows.push_back({{"label", row.label},
                    {"records", row.records},
                    {"stripes", row.stripes},
                    {"fraction", row.fraction}});
  j["breakdown"] = rows;
  j["counters"] = {{"ddf", r.ddf},
                   {"tdf", r.tdf},
                   {"bad_chips", r.bad_chips},
                   {"bad_blocks", r.bad_blocks},
                   {"bad_symbols", r.bad_symbols},
                   {"reconstructions", r.reconstructions},
                   {"wear_out_replacements", r.wear_out_replacements}};
  j["metadata"] = r.metadata;
  return j;
}

AggregateReport report_from_json(const json& j) {
  AggregateReport r;
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != kSchemaVersion)
    throw std::runtime_error("unsupported report schema_version " +
                             std::to_string(r.schema_version));
  r.experiment_id = j.at("experiment_id").get<std::string>();
  r.config = j.at("config");
  for (const auto& s : j.at("per_seed"))
    r.per_seed.push_back({s.at("sim_index").get<std::uint64_t>(), s.at("seed").get<std::uint64_t>(),
                          s.at("lost_stripes").get<std::uint64_t>()});
  const auto& ls = j.at("lost_stripes");
  r.total_lost = ls.at("total").get<std::uint64_t>();
  r.mean_lost = ls.at("mean").get<double>();
  r.median_lost = ls.at("median").get<double>();
  r.stddev_lost = ls.at("stddev").get<double>();
  for (LossScope s : {LossScope::SDL, LossScope::BDL, LossScope::ADL}) {
    const auto& o = j.at("scopes").at(to_string(s));
    r.scope_records[static_cast<int>(s)] = o.at("records").get<std::uint64_t>();
    r.scope_stripes[static_cast<int>(s)] = o.at("stripes").get<std::uint64_t>();
  }
  for (const auto& row : j.at("breakdown"))
    r.breakdown.rows.push_back({row.at("label").get<std::string>(),
                                row.at("records").get<std::uint64_t>(),
                                row.at("stripes").get<std::uint64_t>(),
                                row.at("fraction").get<double>()});
  const auto& c = j.at("counters");
  r.ddf = c.at("ddf").get<std::uint64_t>();
  r.tdf = c.at("tdf").get<std::uint64_t>();
  r.bad_chips = c.at("bad_chips").get<std::uint64_t>();
  r.bad_blocks = c.at("bad_blocks").get<std::uint64_t>();
  r.bad_symbols = c.at("bad_symbols").get<std::uint64_t>();
  r.reconstructions = c.at("reconstructions").get<std::uint64_t>();
  r.wear_out_replacements = c.at("wear_out_replacements").get<std::uint64_t>();
  r.metadata = j.at("metadata");
  return r;
}

std::string to_csv(const AggregateReport& r) {
  std::ostringstream o;
  char buf[64];
  auto f6 = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return std::string(buf);
  };
  o << "label,records,stripes,fraction\n";
  for (const auto& row : r.breakdown.rows)
    o << row.label << ',' << row.records << ',' << row.stripes << ',' << f6(row.fraction) << '\n';
  o << "\n# summary\nkey,value\n";
  o << "schema_version," << r.schema_version << '\n';
  o << "experiment_id," << r.experiment_id << '\n';
  o << "simulations," << r.per_seed.size() << '\n';
  o << "total_lost_stripes," << r.total_lost << '\n';
  o << "mean_lost_stripes," << f6(r.mean_lost) << '\n';
  o << "median_lost_stripes," << f6(r.median_lost) << '\n';
  o << "stddev_lost_stripes," << f6(r.stddev_lost) << '\n';
  for (LossScope s : {LossScope::SDL, LossScope::BDL, LossScope::ADL}) {
    o << to_string(s) << "_records," << r.scope_records[static_cast<int>(s)] << '\n';
    o << to_string(s) << "_stripes," << r.scope_stripes[static_cast<int>(s)] << '\n';
  }
  o << "ddf," << r.ddf << '\n';
  o << "tdf," << r.tdf << '\n';
  return o.str();
}

void emit_report(const AggregateReport& r, ReportFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  if (format == ReportFormat::JSON)
    out << to_json(r).dump(2) << '\n';
  else
    out << to_csv(r);
  out.flush();
  if (!out) throw std::runtime_error(path + ": write failed");
}

AggregateReport read_json_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  return report_from_json(json::parse(in));
}

}  // namespace ssdfi
