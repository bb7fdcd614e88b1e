#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "words.hpp"

namespace settled {

// Stability of one cycle at a fixed level.  A cycle is stable when every lift
// to a deeper level forms a single doubled cycle; that holds at all depths
// below level + j exactly when the first j signs of the cycle's section
// product are all -1.
struct StabilityStatus {
  enum class Kind {
    Certified,      // exact: the section product is an odometer (all signs -1)
    StableToDepth,  // doubling verified through `level`, no deeper data
    Splits,         // doubling first fails at absolute level `level`
  };
  Kind kind;
  int level = 0;

  bool stable_through(int target) const {
    switch (kind) {
      case Kind::Certified: return true;
      case Kind::StableToDepth: return level >= target;
      case Kind::Splits: return target < level;
    }
    return false;
  }
};

// One cycle of a word's action at a level, with the first-return word along
// the orbit and its exact stability verdict.
struct CycleRecord {
  int level = 0;
  std::uint64_t representative = 0;
  std::uint64_t length = 0;
  std::vector<std::uint64_t> members;  // orbit order, starting at representative
  Word section_product;                // normalized first-return word at the representative
  StabilityStatus status;
};

// Portrait analogue: the section product is itself a portrait (one level
// shallower per tree level), so the verdict is depth-limited.
struct PortraitCycleRecord {
  int level = 0;
  std::uint64_t representative = 0;
  std::uint64_t length = 0;
  std::vector<std::uint64_t> members;
  Portrait section_product;
  StabilityStatus status;
};

// Per-level stable-vertex table: row n says how many of the 2^n vertices at
// level n lie on a stable cycle.
struct SettleRow {
  int level = 0;
  std::uint64_t total = 0;   // 2^level
  std::uint64_t stable = 0;  // s_level
};
struct SettleProfileResult {
  std::uint64_t s0 = 0;              // stable count at the root (0 or 1)
  std::vector<SettleRow> rows;       // levels 1..N
  int fully_stable_from = -1;        // first level n >= 1 with s_n = 2^n, if any
};

// One element of a descendant level together with its membership verdict in
// the settled normalizer family {g^m z_k : k unit, k != +-1} and the
// three-valued "block" verdict: a word is a block when its top level acts
// nontrivially, or when at least one of its two sections is in that family.
struct BlockEntry {
  Word word;
  Membership in_family;
  Membership::Verdict is_block = Membership::Verdict::Unknown;
  std::string block_reason;
};

struct BlockReport {
  enum class ChainState {
    Intact,         // exactly one non-family descendant at every examined level
    Empty,          // no non-family descendant from `chain_event_level` on
    Ambiguous,      // two or more exact non-family descendants at one level
    Indeterminate,  // an unresolved membership verdict blocks the chain
  };

  int depth = 0;
  std::vector<std::vector<BlockEntry>> levels;  // index 0 = the word itself
  Membership::Verdict stable_block = Membership::Verdict::Unknown;
  int first_failure = -1;  // shallowest level whose verdict spoiled a Yes

  ChainState chain_state = ChainState::Intact;
  int chain_event_level = -1;
  std::vector<Word> chain;   // chain[0] = input; chain[i] = the unique level-i
                             // descendant outside the family, while unique
  std::vector<int> d_signs;  // d_i = top-level sign of chain[i], +1 or -1
};

// d-sequence with its run-length decomposition: runs[t] = (length of the
// t-th consecutive run of +1, length of the -1 run following it).
struct DSequence {
  std::vector<int> signs;
  std::vector<std::pair<int, int>> runs;
  int terminated_at = -1;    // level from which no non-family descendant exists
  int indeterminate_at = -1; // level at which membership became unresolved
  int ambiguous_at = -1;     // level with two or more non-family descendants
  bool intact() const {
    return indeterminate_at < 0 && ambiguous_at < 0;
  }
};

// Chain lower bound on s_n: with the first t descendant steps confined to the
// same normalizer coset (top-level signs +1), s_n(w) is at least
// s_{n-t}(chain[t]) + 2^n - 2^{n-t} - t * 2^{nu+1}.
struct EstimateResult {
  bool emitted = false;
  std::string reason;        // why the bound was not emitted
  long long bound = 0;
  std::uint64_t actual = 0;  // s_n computed independently
  long nu = 0;
  int t = 0;
  int level = 0;
};

// Stable-cycle machinery on top of a System: exact s_n counts by the
// section-product criterion, per-cycle certificates, descendant trees, block
// analysis, and the chain estimate.  Holds a memo of stable-count vectors
// keyed by reduced word, so reuse one instance across related queries.
class Dynamics {
 public:
  static constexpr int kMaxLevel = Portrait::kMaxDepth;

  explicit Dynamics(const System& sys) : sys_(sys) {}

  const System& system() const { return sys_; }

  // s_0..s_max_level via the section recursion (exact, memoized):
  //   s_0 = 1 iff the word is an odometer;
  //   trivial top: s_n = s_{n-1}(w_0) + s_{n-1}(w_1);
  //   swapped top: s_n = 2 * s_{n-1}(w_0 w_1).
  std::vector<std::uint64_t> stable_counts(const Word& w, int max_level);

  // Same values by walking every cycle at every level and testing each
  // first-return word directly.  Exponentially slower; used as an oracle.
  std::vector<std::uint64_t> stable_counts_direct(const Word& w, int max_level);

  // Depth-limited analogue for explicit portraits: counts vertices on cycles
  // whose section products keep sign -1 through the available depth.  These
  // are counts "to the portrait's depth", not certificates.
  std::vector<std::uint64_t> stable_counts_to_depth(const Portrait& p, int max_level);

  // All cycles of the word's action at one level, with exact verdicts.
  std::vector<CycleRecord> cycle_table(const Word& w, int level);

  // Portrait mode: verdicts limited by the portrait's depth.
  std::vector<PortraitCycleRecord> cycle_table(const Portrait& p, int level);

  SettleProfileResult settle_profile(const Word& w, int max_level);

  // First descendants: the two sections for a trivial top level, the single
  // product w_0 w_1 for a swapped one.
  std::vector<Word> first_descendants(const Word& w) const;

  // Descendant levels 1..depth.  Within each level, elements are merged when
  // their normalized keys coincide, or failing that when their portraits
  // agree through dedup_depth levels.
  std::vector<std::vector<Word>> descendants(const Word& w, int depth,
                                             int dedup_depth = 10) const;

  // Per-level block verdicts through `depth`, the non-family descendant
  // chain, and its top-sign sequence.  Unresolved membership verdicts
  // propagate as Unknown, never as silent blocks.
  BlockReport analyze_blocks(const Word& w, int depth, int probe_depth = 8) const;

  DSequence d_sequence(const Word& w, int depth, int probe_depth = 8) const;

  // The chain bound at level n with chain length t; validates every
  // precondition and reports instead of emitting when one fails.
  EstimateResult estimate_chain_bound(const Word& w, int t, int n,
                                      int probe_depth = 8);

  // Replaces scalar letter values by residues just wide enough for every
  // section, sign, and odometer test down `budget` further levels; counting
  // through those levels is unchanged while keys stay small.
  Word reduced(const Word& w, int budget) const;

  // Canonical form with every odometer/normalizer run collected to g^m z[k]
  // via z_k g^t = g^{kt} z_k; generator letters split runs and pass through.
  Word collect(const Word& w) const;

 private:
  const std::vector<std::uint64_t>& counts(const Word& w, int budget);
  Word section_at(const Word& w, std::uint64_t vertex, int level) const;
  StabilityStatus word_status(const Word& product, int level) const;

  const System& sys_;
  std::map<std::string, std::vector<std::uint64_t>> memo_;
};

}  // namespace settled
