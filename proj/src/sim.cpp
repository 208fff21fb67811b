#include "ssdfi/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ssdfi {

void ArrayGeometry::validate() const {
  if (n_devices < 2) throw std::invalid_argument("geometry: need at least 2 devices");
  if (!page_size || pages_per_block < 1 || !blocks_per_device)
    throw std::invalid_argument("geometry: sizes must be positive");
  std::uint64_t row = static_cast<std::uint64_t>(n_devices) * page_size;
  if (!stripe_size || stripe_size % row)
    throw std::invalid_argument("geometry: stripe_size must be a multiple of n_devices*page_size");
  int cp = chunk_pages();
  if (cp > 64) throw std::invalid_argument("geometry: more than 64 pages per chunk");
  if (pages_per_block % cp)
    throw std::invalid_argument("geometry: pages_per_block must be a multiple of chunk_pages");
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Scrub: return "Scrub";
    case EventKind::ReconstructComplete: return "ReconstructComplete";
    case EventKind::WearOutReplace: return "WearOutReplace";
    case EventKind::BadChip: return "BadChip";
    case EventKind::BadBlock: return "BadBlock";
    case EventKind::BadSymbol: return "BadSymbol";
  }
  return "?";
}

StripeRange affected_stripe_range(const ArrayGeometry& g, const SimEvent& e) {
  switch (e.kind) {
    case EventKind::BadChip: return {0, g.array_stripes()};
    case EventKind::BadBlock: {
      if (e.location >= g.blocks_per_device) throw std::out_of_range("block index out of range");
      std::uint64_t b = e.location * g.cpb();
      return {b, b + g.cpb()};
    }
    case EventKind::BadSymbol: {
      if (e.location >= g.symbols_per_device())
        throw std::out_of_range("symbol index out of range");
      std::uint64_t s = e.location / g.chunk_pages();
      return {s, s + 1};
    }
    default: throw std::invalid_argument("event is not a failure");
  }
}

double next_failure_offset(double rate, double u) {
  if (rate <= 0) return kNever;
  return -std::log1p(-u) / rate;
}

std::uint64_t next_failure_location(std::uint64_t n_units, double u) {
  auto i = static_cast<std::uint64_t>(std::floor(u * static_cast<double>(n_units)));
  return std::min(i, n_units - 1);
}

std::string Cause::label() const {
  std::string s;
  auto add = [&](int k, const char* name) {
    for (int i = 0; i < k; ++i) {
      if (!s.empty()) s += '+';
      s += name;
    }
  };
  add(bc, "BC");
  add(bb, "BB");
  add(bs, "BS");
  return s.empty() ? "none" : s;
}

BsHazard::BsHazard(const RberCurve& curve, const std::vector<UsageLog>& logs,
                   double horizon_hours) {
  auto hours = static_cast<std::uint64_t>(std::ceil(std::max(0.0, horizon_hours))) + 1;
  for (const auto& log : logs) {
    std::vector<double> r(hours, 0.0), c(hours + 1, 0.0);
    if (!log.empty())
      for (std::uint64_t h = 1; h <= hours; ++h) {
        double bits = bits_accessed(log, h);
        if (bits > 0) r[h - 1] = bad_symbol_rate(rber_at(curve, pe_cycles_at(log, h)), bits);
        c[h] = c[h - 1] + r[h - 1];
      }
    rate_.push_back(std::move(r));
    cum_.push_back(std::move(c));
  }
}

double BsHazard::rate(std::size_t log, double life) const {
  const auto& r = rate_[log];
  auto h = static_cast<std::size_t>(std::max(0.0, std::floor(life)));
  return h < r.size() ? r[h] : 0.0;
}

double BsHazard::cumulative(std::size_t log, double life) const {
  const auto& c = cum_[log];
  if (life <= 0) return 0;
  auto h = static_cast<std::size_t>(std::floor(life));
  if (h >= c.size() - 1) return c.back();
  return c[h] + rate_[log][h] * (life - static_cast<double>(h));
}

double BsHazard::invert(std::size_t log, double target) const {
  const auto& c = cum_[log];
  if (target <= 0) return 0;
  if (!(target <= c.back())) return kNever;
  // first h with c[h] >= target; the event falls inside life-hour h
  auto it = std::lower_bound(c.begin(), c.end(), target);
  auto h = static_cast<std::size_t>(it - c.begin());
  double r = rate_[log][h - 1];
  double into = r > 0 ? (target - c[h - 1]) / r : 0.0;
  return static_cast<double>(h - 1) + std::min(into, 1.0);
}

ArraySim::ArraySim(const ArrayGeometry& geometry, CodeKind code, const SsdPool& pool,
                   const std::vector<UsageLog>& logs, const SimParams& params, std::uint64_t seed,
                   const BsHazard* hazard)
    : geo_(geometry),
      code_(code),
      pool_(pool),
      logs_(logs),
      params_(params),
      seed_(seed),
      hazard_(hazard),
      pool_rng_(mix_seed(seed, 7)),
      slots_(geometry.n_devices) {
  geo_.validate();
  if (!(params.tts > 0) || !(params.ttr > 0)) throw std::invalid_argument("tts and ttr must be > 0");
  if (pool.drives.size() < static_cast<std::size_t>(geo_.n_devices))
    throw std::invalid_argument("pool smaller than the array");
  if (!hazard_) {
    own_hazard_ = std::make_unique<BsHazard>(pool.profile.rber_curve, logs, params.mission);
    hazard_ = own_hazard_.get();
  } else if (hazard_->logs() != logs.size()) {
    throw std::invalid_argument("hazard table does not match the usage logs");
  }
  for (int d = 0; d < geo_.n_devices; ++d) {
    Slot& s = slots_[d];
    std::uint64_t base = mix_seed(seed, 1000 + d);
    s.bs_time = Rng(mix_seed(base, 1));
    s.bs_loc = Rng(mix_seed(base, 2));
    s.bb_loc = Rng(mix_seed(base, 3));
    if (!logs.empty()) {
      s.log_index = static_cast<std::size_t>(d) % logs.size();
      s.log = &logs[s.log_index];
    }
  }
  result_.seed = seed;
}

void ArraySim::push(const SimEvent& e, std::uint32_t gen) {
  if (!(e.time < params_.mission)) return;
  queue_.push({e, gen, seq_++});
}

double ArraySim::pe_cycles(int device, double t) const {
  const Slot& s = slots_[device];
  if (!s.log) return 0;
  auto h = static_cast<std::uint64_t>(std::floor(t - s.install)) + 1;
  return pe_cycles_at(*s.log, h);
}

void ArraySim::install(int device, std::size_t pool_index, double t) {
  Slot& s = slots_[device];
  s.drive = &pool_.drives[pool_index];
  s.install = t;
  ++s.gen;
  s.failed = false;
  s.next_bb = 0;
  if (s.drive->bad_chip_time)
    push({t + *s.drive->bad_chip_time, EventKind::BadChip, device, 0}, s.gen);
  schedule_bb(device);
  schedule_bs(device, t);
  schedule_wear_out(device);
}

void ArraySim::schedule_bb(int device) {
  Slot& s = slots_[device];
  const auto& times = s.drive->mission_bb_times;
  if (s.next_bb >= times.size()) return;
  double t = s.install + times[s.next_bb];
  if (!(t < params_.mission)) return;
  std::uint64_t block = next_failure_location(geo_.blocks_per_device, s.bb_loc.uniform());
  push({t, EventKind::BadBlock, device, block}, s.gen);
}

void ArraySim::schedule_bs(int device, double from) {
  Slot& s = slots_[device];
  if (!s.log || s.log->empty()) return;
  double target = hazard_->cumulative(s.log_index, from - s.install) + s.bs_time.exponential();
  double life = hazard_->invert(s.log_index, target);
  if (life == kNever) return;
  double t = std::max(from, s.install + life);
  if (!(t < params_.mission)) return;
  std::uint64_t sym = next_failure_location(geo_.symbols_per_device(), s.bs_loc.uniform());
  push({t, EventKind::BadSymbol, device, sym}, s.gen);
}

void ArraySim::schedule_wear_out(int device) {
  Slot& s = slots_[device];
  if (!s.log || s.log->empty() || s.log->samples.back().pe_cycles <= 0) return;
  const double wol = pool_.profile.wol;
  auto hmax = static_cast<std::uint64_t>(std::ceil(params_.mission - s.install)) + 1;
  if (pe_cycles_at(*s.log, hmax) < wol) return;
  std::uint64_t lo = 1, hi = hmax;
  while (lo < hi) {
    std::uint64_t mid = lo + (hi - lo) / 2;
    if (pe_cycles_at(*s.log, mid) >= wol)
      hi = mid;
    else
      lo = mid + 1;
  }
  double t = s.install + static_cast<double>(lo) + params_.mirror_copy_hours;
  push({t, EventKind::WearOutReplace, device, 0}, s.gen);
}

StripeFaultState ArraySim::stripe_state(std::uint64_t stripe) const {
  StripeFaultState st(geo_.n_devices, geo_.chunk_pages());
  std::uint64_t block = stripe / geo_.cpb();
  for (int d = 0; d < geo_.n_devices; ++d) {
    const Slot& s = slots_[d];
    ChunkFault& c = st.chunks[d];
    c.device_failed = s.failed;
    if (s.failed) continue;
    c.bad_block = s.bb.count(block) > 0;
    auto it = s.bs.find(stripe);
    if (it != s.bs.end()) c.bad_symbols = it->second;
  }
  return st;
}

Cause ArraySim::cause_of(const StripeFaultState& st) const {
  Cause c;
  for (const auto& ch : st.chunks) {
    if (ch.device_failed)
      ++c.bc;
    else if (ch.bad_block)
      ++c.bb;
    else if (ch.bad_symbols)
      ++c.bs;
  }
  return c;
}

std::vector<std::uint64_t> ArraySim::latent_stripes(int skip_device) const {
  std::vector<std::uint64_t> out;
  const std::uint64_t cpb = geo_.cpb();
  for (int d = 0; d < geo_.n_devices; ++d) {
    if (d == skip_device || slots_[d].failed) continue;
    for (const auto& [stripe, _] : slots_[d].bs) out.push_back(stripe);
    for (std::uint64_t b : slots_[d].bb)
      for (std::uint64_t i = 0; i < cpb; ++i) out.push_back(b * cpb + i);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void ArraySim::judge(const std::vector<std::uint64_t>& stripes, double t, bool block_trigger,
                     std::vector<DataLossRecord>& out) {
  if (adl_active_) return;
  const std::uint64_t cpb = geo_.cpb();
  // (block region, label) -> record
  std::map<std::pair<std::uint64_t, std::string>, DataLossRecord> blocks;
  for (std::uint64_t s : stripes) {
    if (recorded_.count(s)) continue;
    StripeFaultState st = stripe_state(s);
    if (check_stripe_dl(code_, st).correctable) continue;
    recorded_.insert(s);
    Cause c = cause_of(st);
    bool block_extent = block_trigger || c.bb > 0;
    if (!block_extent) {
      out.push_back({t, LossScope::SDL, c, 1});
      continue;
    }
    auto& r = blocks[{s / cpb, c.label()}];
    r.time = t;
    r.scope = LossScope::BDL;
    r.cause = c;
    ++r.stripes_lost;
  }
  for (auto& [_, r] : blocks) out.push_back(r);
}

void ArraySim::note(std::vector<DataLossRecord>& recs) {
  for (const auto& r : recs) {
    result_.records.push_back(r);
    result_.lost_stripes += r.stripes_lost;
    result_.scope_records[static_cast<int>(r.scope)] += 1;
    result_.scope_stripes[static_cast<int>(r.scope)] += r.stripes_lost;
  }
}

std::vector<DataLossRecord> ArraySim::handle_failure(const SimEvent& e) {
  std::vector<DataLossRecord> out;
  affected_stripe_range(geo_, e);  // range check
  Slot& s = slots_[e.device];
  if (s.failed) return out;

  switch (e.kind) {
    case EventKind::BadChip: {
      ++result_.bad_chips;
      s.failed = true;
      ++s.gen;  // drops this identity's pending faults
      s.bs.clear();
      s.bb.clear();
      ++failed_count_;
      if (failed_count_ > 1) ++ddf_;
      if (failed_count_ > 2) ++tdf_;
      push({e.time + params_.ttr, EventKind::ReconstructComplete, e.device, 0}, s.gen);
      if (failed_count_ > device_tolerance(code_)) {
        if (!adl_active_) {
          Cause c;
          c.bc = static_cast<std::uint8_t>(failed_count_);
          out.push_back({e.time, LossScope::ADL, c, geo_.array_stripes()});
          adl_active_ = true;
        }
        break;
      }
      judge(latent_stripes(e.device), e.time, false, out);
      break;
    }
    case EventKind::BadBlock: {
      ++result_.bad_blocks;
      if (!s.bb.insert(e.location).second) break;
      StripeRange r = affected_stripe_range(geo_, e);
      std::vector<std::uint64_t> stripes;
      for (std::uint64_t i = r.begin; i < r.end; ++i) stripes.push_back(i);
      judge(stripes, e.time, true, out);
      break;
    }
    case EventKind::BadSymbol: {
      ++result_.bad_symbols;
      std::uint64_t stripe = e.location / geo_.chunk_pages();
      s.bs[stripe] |= 1ULL << (e.location % geo_.chunk_pages());
      judge({stripe}, e.time, false, out);
      break;
    }
    default: throw std::invalid_argument("handle_failure: not a failure event");
  }
  note(out);
  return out;
}

std::vector<DataLossRecord> ArraySim::apply_scrub(double t) {
  std::vector<DataLossRecord> out;
  judge(latent_stripes(-1), t, false, out);
  for (auto& s : slots_) {
    if (s.failed) continue;
    s.bs.clear();
    s.bb.clear();
  }
  recorded_.clear();
  push({t + params_.tts, EventKind::Scrub, -1, 0}, 0);
  note(out);
  return out;
}

std::vector<DataLossRecord> ArraySim::apply_reconstruct(int device, double t) {
  std::vector<DataLossRecord> out;
  Slot& s = slots_[device];
  if (!s.failed) return out;
  s.failed = false;
  --failed_count_;
  if (failed_count_ <= device_tolerance(code_)) adl_active_ = false;
  ++result_.reconstructions;
  install(device, pool_rng_.below(pool_.drives.size()), t);
  judge(latent_stripes(device), t, false, out);
  note(out);
  return out;
}

void ArraySim::replace_worn_out(int device, double t) {
  Slot& s = slots_[device];
  if (s.failed) return;
  ++result_.wear_out_replacements;
  // mirror copy: no degraded window, latent faults travel with the data
  install(device, pool_rng_.below(pool_.drives.size()), t);
}

void ArraySim::add_latent_symbol(int device, std::uint64_t symbol) {
  slots_[device].bs[symbol / geo_.chunk_pages()] |= 1ULL << (symbol % geo_.chunk_pages());
}

void ArraySim::add_latent_block(int device, std::uint64_t block) { slots_[device].bb.insert(block); }

std::size_t ArraySim::latent_symbols(int device) const {
  std::size_t k = 0;
  for (const auto& [_, m] : slots_[device].bs) k += __builtin_popcountll(m);
  return k;
}

SimResult ArraySim::run() {
  // initial array: distinct pool members
  std::vector<std::size_t> chosen;
  while (chosen.size() < slots_.size()) {
    std::size_t i = pool_rng_.below(pool_.drives.size());
    if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) chosen.push_back(i);
  }
  for (int d = 0; d < geo_.n_devices; ++d) install(d, chosen[d], 0.0);
  push({params_.tts, EventKind::Scrub, -1, 0}, 0);

  while (!queue_.empty()) {
    Queued q = queue_.top();
    queue_.pop();
    const SimEvent& e = q.ev;
    if (!(e.time < params_.mission)) break;
    if (e.device >= 0 && q.gen != slots_[e.device].gen) continue;
    switch (e.kind) {
      case EventKind::Scrub: apply_scrub(e.time); break;
      case EventKind::ReconstructComplete: apply_reconstruct(e.device, e.time); break;
      case EventKind::WearOutReplace: replace_worn_out(e.device, e.time); break;
      case EventKind::BadChip: handle_failure(e); break;
      case EventKind::BadBlock:
        handle_failure(e);
        ++slots_[e.device].next_bb;
        schedule_bb(e.device);
        break;
      case EventKind::BadSymbol:
        handle_failure(e);
        schedule_bs(e.device, e.time);
        break;
    }
  }
  result_.ddf = ddf_;
  result_.tdf = tdf_;
  return result_;
}

SimResult run_simulation(const ArrayGeometry& geometry, CodeKind code, const SsdPool& pool,
                         const std::vector<UsageLog>& logs, const SimParams& params,
                         std::uint64_t seed, const BsHazard* hazard) {
  ArraySim sim(geometry, code, pool, logs, params, seed, hazard);
  return sim.run();
}

}  // namespace ssdfi
