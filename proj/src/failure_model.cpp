#include "ssdfi/failure_model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>

#include "csv.hpp"
#include "ssdfi/rng.hpp"

namespace ssdfi {

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double median_of(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Technology parse_technology(const std::string& s) {
  if (s == "SLC") return Technology::SLC;
  if (s == "MLC") return Technology::MLC;
  throw ParseError("unknown technology '" + s + "'");
}

const char* to_string(Technology t) { return t == Technology::SLC ? "SLC" : "MLC"; }

BbCountShape default_bb_shape(Technology t) {
  // fitted against the conditional medians by tools/calibrate_bb.py
  if (t == Technology::SLC) return {3.3593, 3.4422, 0.15546, 0.58586, 0.97008};
  return {6.7231, 1.2378, 0.0030926, 0.73784, 0.79124};
}

void BbCountShape::validate() const {
  if (!(sigma > 0) || !(spread > 0))
    throw ValidationError("bb count shape: sigma and spread must be > 0");
  if (!(stall >= 0 && stall <= 1) || !(share >= 0 && share <= 1))
    throw ValidationError("bb count shape: stall and share must be in [0,1]");
  if (!(tail_ratio >= 0 && tail_ratio < 1))
    throw ValidationError("bb count shape: tail_ratio must be in [0,1)");
}
int default_escalation_threshold(Technology t) { return t == Technology::SLC ? 4 : 2; }
double default_wol(Technology t) { return t == Technology::SLC ? 100000 : 3000; }

void RberCurve::validate() const {
  if (points.size() < 2) throw ValidationError("RberCurve requires >=2 points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].rber > 0)) throw ValidationError("RberCurve rber must be > 0");
    if (i && !(points[i].pe_cycles > points[i - 1].pe_cycles))
      throw ValidationError("RberCurve pe_cycles must be strictly increasing");
  }
}

RberCurve load_rber_curve(const std::string& path) {
  csv::Table t = csv::read_file(path);
  std::size_t ipe = t.column("pe_cycles");
  std::size_t ir = t.column("rber");
  RberCurve c;
  for (const auto& row : t.rows)
    c.points.push_back({csv::to_double(row, ipe), csv::to_double(row, ir)});
  c.validate();
  return c;
}

double rber_at(const RberCurve& curve, double pe) {
  const auto& p = curve.points;
  if (pe <= p.front().pe_cycles) return p.front().rber;
  if (pe >= p.back().pe_cycles) return p.back().rber;
  auto it = std::upper_bound(p.begin(), p.end(), pe,
                             [](double x, const RberPoint& q) { return x < q.pe_cycles; });
  const RberPoint& b = *it;
  const RberPoint& a = *(it - 1);
  double f = (pe - a.pe_cycles) / (b.pe_cycles - a.pe_cycles);
  return a.rber + f * (b.rber - a.rber);
}

double bad_symbol_rate(double rber, double bits_accessed) { return rber * bits_accessed; }

void SsdModelProfile::validate() const {
  auto frac = [&](double v, const char* field) {
    if (!(v >= 0 && v <= 1))
      throw ValidationError(name + ": " + field + " must be in [0,1]");
  };
  frac(pct_drives_bad_chip, "pct_bad_chip");
  frac(pct_drives_bad_block, "pct_bad_block");
  if (median_bb < 0) throw ValidationError(name + ": median_bb must be >= 0");
  if (mean_bb < 0) throw ValidationError(name + ": mean_bb must be >= 0");
  if (factory_bb_mean < 0 || factory_bb_std < 0)
    throw ValidationError(name + ": factory_bb_mean/std must be >= 0");
  if (!(wol > 0)) throw ValidationError(name + ": wol must be > 0");
  if (bb_escalation_threshold < 1)
    throw ValidationError(name + ": bb_escalation_threshold must be >= 1");
  if (!(bb_escalation_factor >= 1))
    throw ValidationError(name + ": bb_escalation_factor must be >= 1");
  if (!(mission_hours_basis > 0)) throw ValidationError(name + ": mission_hours_basis must be > 0");
  try {
    bb_shape.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(name + ": " + e.what());
  }
  rber_curve.validate();
}

std::vector<SsdModelProfile> load_profiles(const std::string& path) {
  csv::Table t = csv::read_file(path);
  static const char* required[] = {"name",    "technology",    "pct_bad_chip",
                                   "pct_bad_block", "median_bb", "mean_bb",
                                   "factory_bb_mean", "factory_bb_std", "wol",
                                   "bb_escalation_threshold", "bb_escalation_factor",
                                   "rber_curve_path"};
  for (const char* c : required) t.column(c);
  auto opt = [&](const char* c) -> std::optional<std::size_t> {
    if (t.has(c)) return t.column(c);
    return std::nullopt;
  };
  const std::pair<const char*, double BbCountShape::*> shape_cols[] = {
      {"bb_count_sigma", &BbCountShape::sigma},
      {"bb_escalation_spread", &BbCountShape::spread},
      {"bb_stall_fraction", &BbCountShape::stall},
      {"bb_escalation_share", &BbCountShape::share},
      {"bb_tail_ratio", &BbCountShape::tail_ratio},
  };
  std::vector<std::pair<std::optional<std::size_t>, double BbCountShape::*>> shape_idx;
  for (auto [name, member] : shape_cols) shape_idx.emplace_back(opt(name), member);

  std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::map<std::string, RberCurve> curves;
  std::vector<SsdModelProfile> out;
  for (const auto& row : t.rows) {
    SsdModelProfile p;
    p.name = row.at(t.column("name"));
    try {
      p.technology = parse_technology(row.at(t.column("technology")));
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(row.line) + ": " + e.what());
    }
    p.pct_drives_bad_chip = csv::to_double(row, t.column("pct_bad_chip"));
    p.pct_drives_bad_block = csv::to_double(row, t.column("pct_bad_block"));
    p.median_bb = csv::to_double(row, t.column("median_bb"));
    p.mean_bb = csv::to_double(row, t.column("mean_bb"));
    p.factory_bb_mean = csv::to_double(row, t.column("factory_bb_mean"));
    p.factory_bb_std = csv::to_double(row, t.column("factory_bb_std"));
    p.wol = csv::to_double(row, t.column("wol"));
    p.bb_escalation_threshold =
        static_cast<int>(csv::to_double(row, t.column("bb_escalation_threshold")));
    p.bb_escalation_factor = csv::to_double(row, t.column("bb_escalation_factor"));
    p.bb_shape = default_bb_shape(p.technology);
    for (auto [col, member] : shape_idx)
      if (col && !row.at(*col).empty()) p.bb_shape.*member = csv::to_double(row, *col);

    std::filesystem::path cp = row.at(t.column("rber_curve_path"));
    if (cp.is_relative()) cp = base / cp;
    std::string key = cp.string();
    auto it = curves.find(key);
    if (it == curves.end()) {
      if (!std::filesystem::exists(cp))
        throw ParseError(path + ":" + std::to_string(row.line) + ": model " + p.name +
                         ": rber curve not found: " + key);
      it = curves.emplace(key, load_rber_curve(key)).first;
    }
    p.rber_curve = it->second;
    p.validate();
    out.push_back(std::move(p));
  }
  return out;
}

const SsdModelProfile& find_profile(const std::vector<SsdModelProfile>& ps,
                                    const std::string& name) {
  for (const auto& p : ps)
    if (p.name == name) return p;
  throw ValidationError("unknown model '" + name + "'");
}

double BbCountModel::mean() const {
  double m = 0;
  for (std::uint32_t c = 1; c < cdf.size(); ++c) m += c * pmf(c);
  return m;
}

std::uint32_t BbCountModel::quantile(double u) const {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) return cap;
  return static_cast<std::uint32_t>(it - cdf.begin());
}

BbCountModel build_count_model(int threshold, std::uint32_t cap, double base_mu, double factor,
                               const BbCountShape& shape) {
  BbCountModel m;
  m.threshold = std::max(1, std::min<int>(threshold, static_cast<int>(cap)));
  m.cap = std::max<std::uint32_t>(cap, 1);
  m.base_mu = base_mu;
  m.factor = factor;
  m.shape = shape;
  const int T = m.threshold;

  // pre-threshold count: rounded Normal folded onto [1, T]
  std::vector<double> w(T + 1, 0.0);
  double prev = 0;
  for (int j = 1; j < T; ++j) {
    double c = norm_cdf((j + 0.5 - base_mu) / shape.sigma);
    w[j] = c - prev;
    prev = c;
  }
  w[T] = 1 - prev;

  // excess beyond T: geometric / discretised log-normal mix, then the stall atom
  std::uint32_t emax = m.cap - T;
  std::vector<double> pe(emax + 1);
  double scale = std::log(T * factor);
  double lo = 0, geo = 1 - shape.tail_ratio, z = 0;
  for (std::uint32_t e = 0; e <= emax; ++e) {
    double hi = norm_cdf((std::log(e + 1.0) - scale) / shape.spread);
    pe[e] = shape.share * (hi - lo) + (1 - shape.share) * geo;
    z += pe[e];
    lo = hi;
    geo *= shape.tail_ratio;
  }
  for (double& x : pe) x = z > 0 ? (1 - shape.stall) * x / z : 0;
  pe[0] += z > 0 ? shape.stall : 1;

  m.cdf.assign(m.cap + 1, 0.0);
  double acc = 0;
  for (std::uint32_t c = 1; c <= m.cap; ++c) {
    if (c < static_cast<std::uint32_t>(T))
      acc += w[c];
    else
      acc += w[T] * pe[c - T];
    m.cdf[c] = acc;
  }
  for (double& x : m.cdf) x /= acc;
  return m;
}

BbCountModel calibrate_count_model(const SsdModelProfile& p, std::uint64_t n_unmarked,
                                   std::uint64_t n_marked, std::uint32_t cap) {
  const double nu = static_cast<double>(n_unmarked);
  const double nt = nu + static_cast<double>(n_marked);
  auto med = static_cast<std::uint32_t>(std::clamp(std::lround(p.median_bb), 1L,
                                                   static_cast<long>(cap)));
  auto build = [&](double mu) {
    return build_count_model(p.bb_escalation_threshold, cap, mu, p.bb_escalation_factor,
                             p.bb_shape);
  };
  // pool-wide CDF at the middle of the median bin; decreasing in mu
  auto mid = [&](const BbCountModel& m) {
    return nu / nt * 0.5 * (m.cdf[med - 1] + m.cdf[med]);
  };
  double a = -30, b = 30;
  for (int i = 0; i < 100; ++i) {
    double c = 0.5 * (a + b);
    if (mid(build(c)) > 0.5)
      a = c;
    else
      b = c;
  }
  return build(0.5 * (a + b));
}

std::uint64_t bb_quota(const SsdModelProfile& p, std::uint64_t n) {
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(n) * p.pct_drives_bad_block));
}
std::uint64_t bc_quota(const SsdModelProfile& p, std::uint64_t n) {
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(n) * p.pct_drives_bad_chip));
}
std::uint64_t marked_quota(std::uint64_t n_bc) {
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(n_bc) * 2.0 / 3.0));
}
std::uint32_t gt5pct_cap(std::uint64_t blocks) {
  // largest count that is still not above 5% of the blocks
  return static_cast<std::uint32_t>(std::floor(0.05 * static_cast<double>(blocks)));
}

double truncated_exponential(double rate, double horizon, double u) {
  if (rate <= 0) return u * horizon;
  return -std::log1p(-u * -std::expm1(-rate * horizon)) / rate;
}

namespace {

// Mean m of Normal(m, sd) so that E[X | X > a] equals target.
double truncated_normal_location(double target, double sd, double a) {
  auto tmean = [&](double m) {
    double al = (a - m) / sd;
    double tail = 0.5 * std::erfc(al / std::sqrt(2.0));
    if (tail < 1e-300) return a;
    double phi = std::exp(-0.5 * al * al) / std::sqrt(2 * M_PI);
    return m + sd * phi / tail;
  };
  double lo = a - 20 * sd, hi = std::max(target, a);
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (tmean(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void fill_schedule(PooledSsd& d, std::uint32_t count, int threshold, double factor, double mission,
                   Rng& rng) {
  d.mission_bb_times.resize(count);
  std::vector<double> cum(count + 1);
  double s = 0;
  for (std::uint32_t j = 0; j <= count; ++j) {
    double rate = static_cast<int>(j) < threshold ? 1.0 : factor;
    s += rng.exponential() / rate;
    cum[j] = s;
  }
  for (std::uint32_t j = 0; j < count; ++j) d.mission_bb_times[j] = mission * cum[j] / s;
}

}  // namespace

SsdPool generate_pool(const SsdModelProfile& profile, std::uint64_t pool_size,
                      std::uint64_t blocks_per_device, std::uint64_t seed) {
  if (pool_size < 1) throw ValidationError("pool_size must be >= 1");
  if (blocks_per_device < 1) throw ValidationError("blocks_per_device must be >= 1");
  profile.validate();

  SsdPool pool;
  pool.profile = profile;
  pool.seed = seed;
  pool.blocks_per_device = blocks_per_device;
  pool.drives.resize(pool_size);

  const double M = profile.mission_hours_basis;
  const std::uint32_t cap = gt5pct_cap(blocks_per_device);
  Rng pick(mix_seed(seed, 1)), counts(mix_seed(seed, 2)), times(mix_seed(seed, 3)),
      chip(mix_seed(seed, 4)), factory(mix_seed(seed, 5));

  std::vector<std::uint64_t> order(pool_size);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), pick.engine());

  const std::uint64_t n_bc = bc_quota(profile, pool_size);
  const std::uint64_t n_bb = bb_quota(profile, pool_size);
  // marked drives must exceed the cap; impossible when blocks are too few
  std::uint64_t n_marked =
      blocks_per_device > cap ? std::min(marked_quota(n_bc), n_bb) : 0;
  std::uint64_t n_unmarked = std::min(n_bb - n_marked, pool_size - n_bc);

  // bad chips: first n_bc of the permutation, the first n_marked of them marked
  const double lambda = -std::log1p(-std::min(profile.pct_drives_bad_chip, 1 - 1e-12)) / M;
  for (std::uint64_t i = 0; i < n_bc; ++i) {
    PooledSsd& d = pool.drives[order[i]];
    d.bad_chip_time = truncated_exponential(lambda, M, chip.uniform());
    d.marked_bb_gt_5pct = i < n_marked;
  }

  BbCountModel model;
  double unmarked_mean = 0;
  if (n_unmarked) {
    // only marked drives are held above the 5% mark; the rest may reach it too
    model = calibrate_count_model(profile, n_unmarked, n_marked,
                                  static_cast<std::uint32_t>(blocks_per_device));
    unmarked_mean = model.mean();
  }

  // marked counts carry whatever the unmarked drives leave of the total
  double marked_loc = 0, marked_sd = 0;
  if (n_marked) {
    double total = static_cast<double>(n_bb) * profile.mean_bb;
    double target = (total - static_cast<double>(n_unmarked) * unmarked_mean) /
                    static_cast<double>(n_marked);
    target = std::max(target, cap + 1.0);
    marked_sd = 0.3 * target;
    marked_loc = truncated_normal_location(target, marked_sd, cap + 0.5);
  }
  for (std::uint64_t i = 0; i < n_marked; ++i) {
    PooledSsd& d = pool.drives[order[i]];
    double x = 0;
    for (int tries = 0; tries < 1000; ++tries) {
      x = std::round(counts.normal(marked_loc, marked_sd));
      if (x > cap) break;
    }
    x = std::clamp(x, cap + 1.0, static_cast<double>(blocks_per_device));
    fill_schedule(d, static_cast<std::uint32_t>(x), profile.bb_escalation_threshold,
                  profile.bb_escalation_factor, M, times);
  }

  // unmarked BB drives come from the non-BC part; stratified draws keep the
  // sample quantiles within 1/n of the model
  std::vector<std::uint32_t> draws(n_unmarked);
  for (std::uint64_t i = 0; i < n_unmarked; ++i)
    draws[i] = model.quantile((static_cast<double>(i) + counts.uniform()) /
                              static_cast<double>(n_unmarked));
  std::shuffle(draws.begin(), draws.end(), counts.engine());
  for (std::uint64_t i = 0; i < n_unmarked; ++i) {
    PooledSsd& d = pool.drives[order[n_bc + i]];
    fill_schedule(d, draws[i], profile.bb_escalation_threshold, profile.bb_escalation_factor, M,
                  times);
  }

  for (auto& d : pool.drives) {
    double f = profile.factory_bb_std > 0
                   ? factory.normal(profile.factory_bb_mean, profile.factory_bb_std)
                   : profile.factory_bb_mean;
    d.factory_bb = static_cast<std::uint32_t>(std::max(0.0, std::round(f)));
  }
  return pool;
}

PoolValidationReport validate_pool(const SsdPool& pool) {
  PoolValidationReport r;
  r.drives = pool.drives.size();
  const double limit = 0.05 * static_cast<double>(pool.blocks_per_device);
  std::vector<double> counts;
  for (const auto& d : pool.drives) {
    std::size_t c = d.mission_bb_times.size();
    if (c) {
      ++r.drives_with_bb;
      counts.push_back(static_cast<double>(c));
    }
    if (d.bad_chip_time) {
      ++r.drives_with_bc;
      if (static_cast<double>(c) > limit) ++r.bc_with_gt_5pct;
      if (!c) ++r.bc_without_bb;
    }
  }
  r.median_bb = median_of(counts);
  r.mean_bb = counts.empty() ? 0
                             : std::accumulate(counts.begin(), counts.end(), 0.0) /
                                   static_cast<double>(counts.size());
  r.bc_gt_5pct_ratio =
      r.drives_with_bc ? static_cast<double>(r.bc_with_gt_5pct) / r.drives_with_bc : 0;
  for (int k = 2; k <= 5; ++k) {
    std::vector<double> sel;
    for (double c : counts)
      if (c >= k) sel.push_back(c);
    r.cond_k.push_back(k);
    r.cond_n.push_back(sel.size());
    r.cond_median.push_back(median_of(std::move(sel)));
  }
  return r;
}

}  // namespace ssdfi
