#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ssdfi {

// PMDS11 covers PMDS(1,1), SD(1,1) and STAIR(1,1): same correction capability.
enum class CodeKind { RAID5, RAID6, PMDS11 };

CodeKind parse_code(const std::string& s);
const char* to_string(CodeKind c);

// Devices a code survives losing entirely.
int device_tolerance(CodeKind c);

struct ChunkFault {
  bool device_failed = false;
  bool bad_block = false;
  std::uint64_t bad_symbols = 0;  // bit i set = symbol i bad

  bool faulty() const { return device_failed || bad_block || bad_symbols; }
  bool fully_faulty() const { return device_failed || bad_block; }
  int symbol_count() const { return __builtin_popcountll(bad_symbols); }
};

struct StripeFaultState {
  int n = 0;
  int chunk_pages = 0;
  std::vector<ChunkFault> chunks;

  StripeFaultState() = default;
  StripeFaultState(int n_chunks, int pages) : n(n_chunks), chunk_pages(pages), chunks(n_chunks) {}

  void validate() const;
};

enum class LossScope { NONE, SDL, BDL, ADL };
const char* to_string(LossScope s);

struct CorrectionOutcome {
  bool correctable = true;
  LossScope loss_scope_if_triggered = LossScope::NONE;
};

int faulty_chunk_count(const StripeFaultState& s);
int multi_symbol_faulty_chunk_count(const StripeFaultState& s);
CorrectionOutcome check_stripe_dl(CodeKind code, const StripeFaultState& s);

// Cost model. n data chunks, r rows per stripe.
double erf(CodeKind code, int n, int r);
long encode_xor_count(CodeKind code, int n, int r);

enum class Granularity { Sector, Row, Stripe };
const char* to_string(Granularity g);

struct UpdatePenalty {
  long writes = 0;
  long reads = 0;
  bool operator==(const UpdatePenalty&) const = default;
};

UpdatePenalty update_penalty(CodeKind code, int n, int r, Granularity g);

}  // namespace ssdfi
