#include "ssdfi/erasure_codes.hpp"

#include <stdexcept>

namespace ssdfi {

CodeKind parse_code(const std::string& s) {
  if (s == "RAID5") return CodeKind::RAID5;
  if (s == "RAID6") return CodeKind::RAID6;
  if (s == "PMDS11" || s == "PMDS" || s == "SD11" || s == "STAIR11") return CodeKind::PMDS11;
  throw std::invalid_argument("unknown code '" + s + "'");
}

const char* to_string(CodeKind c) {
  switch (c) {
    case CodeKind::RAID5: return "RAID5";
    case CodeKind::RAID6: return "RAID6";
    case CodeKind::PMDS11: return "PMDS11";
  }
  return "?";
}

const char* to_string(LossScope s) {
  switch (s) {
    case LossScope::NONE: return "NONE";
    case LossScope::SDL: return "SDL";
    case LossScope::BDL: return "BDL";
    case LossScope::ADL: return "ADL";
  }
  return "?";
}

const char* to_string(Granularity g) {
  switch (g) {
    case Granularity::Sector: return "sector";
    case Granularity::Row: return "row";
    case Granularity::Stripe: return "stripe";
  }
  return "?";
}

int device_tolerance(CodeKind c) { return c == CodeKind::RAID6 ? 2 : 1; }

void StripeFaultState::validate() const {
  if (n != static_cast<int>(chunks.size())) throw std::invalid_argument("chunk count != n");
  if (chunk_pages < 1 || chunk_pages > 64) throw std::invalid_argument("chunk_pages out of range");
  std::uint64_t allowed = chunk_pages == 64 ? ~0ULL : ((1ULL << chunk_pages) - 1);
  for (const auto& c : chunks)
    if (c.bad_symbols & ~allowed) throw std::invalid_argument("symbol index out of range");
}

int faulty_chunk_count(const StripeFaultState& s) {
  int k = 0;
  for (const auto& c : s.chunks) k += c.faulty();
  return k;
}

int multi_symbol_faulty_chunk_count(const StripeFaultState& s) {
  int k = 0;
  for (const auto& c : s.chunks) k += c.fully_faulty() || c.symbol_count() > 1;
  return k;
}

CorrectionOutcome check_stripe_dl(CodeKind code, const StripeFaultState& s) {
  int faulty = faulty_chunk_count(s);
  bool lost = false;
  switch (code) {
    case CodeKind::RAID5: lost = faulty > 1; break;
    case CodeKind::RAID6: lost = faulty > 2; break;
    case CodeKind::PMDS11:
      lost = faulty > 2 || multi_symbol_faulty_chunk_count(s) > 1;
      break;
  }
  return {!lost, lost ? LossScope::SDL : LossScope::NONE};
}

double erf(CodeKind code, int n, int r) {
  if (n < 2 || r < 1) throw std::invalid_argument("erf: need n >= 2, r >= 1");
  switch (code) {
    case CodeKind::RAID5: return (n + 1.0) / n;
    case CodeKind::RAID6: return (n + 2.0) / n;
    case CodeKind::PMDS11: return (n + 1.0) * r / (static_cast<double>(n) * r - 1.0);
  }
  return 0;
}

long encode_xor_count(CodeKind code, int n, int r) {
  if (n < 2 || r < 1) throw std::invalid_argument("xor count: need n >= 2, r >= 1");
  long base = static_cast<long>(n - 1) * r;
  switch (code) {
    case CodeKind::RAID5: return base;
    case CodeKind::RAID6: return 2 * base;
    case CodeKind::PMDS11: return 2 * base + (r - 1);
  }
  return 0;
}

UpdatePenalty update_penalty(CodeKind code, int n, int r, Granularity g) {
  if (n < 2 || r < 1) throw std::invalid_argument("update penalty: need n >= 2, r >= 1");
  const long N = n, R = r;
  switch (g) {
    case Granularity::Sector:
      switch (code) {
        case CodeKind::RAID5: return {2, 2};
        case CodeKind::RAID6: return {3, 3};
        case CodeKind::PMDS11: return {4, 4};
      }
      break;
    case Granularity::Row:
      switch (code) {
        case CodeKind::RAID5: return {N + 1, 0};
        case CodeKind::RAID6: return {N + 2, 0};
        case CodeKind::PMDS11: return {N + 3, N + 2};
      }
      break;
    case Granularity::Stripe:
      switch (code) {
        case CodeKind::RAID5: return {(N + 1) * R, 0};
        case CodeKind::RAID6: return {(N + 2) * R, 0};
        case CodeKind::PMDS11: return {(N + 1) * R, 0};
      }
      break;
  }
  return {};
}

}  // namespace ssdfi
