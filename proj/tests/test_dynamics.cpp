#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gmpxx.h>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dynamics.hpp"

using namespace settled;

namespace {

Word random_word(const System& sys, std::mt19937_64& rng, int max_letters) {
  static const long kLabels[] = {3, 5, 7, 9, 11, 13, 15, -3};
  std::uniform_int_distribution<int> len_dist(1, max_letters);
  std::uniform_int_distribution<int> base_dist(0, 2);
  std::uniform_int_distribution<int> idx_dist(1, sys.rank());
  std::uniform_int_distribution<int> exp_dist(-3, 3);
  std::uniform_int_distribution<int> lab_dist(0, 7);
  Word w;
  int len = len_dist(rng);
  for (int i = 0; i < len; ++i) {
    switch (base_dist(rng)) {
      case 0: {
        int e = exp_dist(rng);
        if (e != 0) w *= Word::a(idx_dist(rng), e);
        break;
      }
      case 1: {
        int e = exp_dist(rng);
        if (e != 0) w *= Word::g(e);
        break;
      }
      default:
        w *= Word::z(Dyadic::exact_int(kLabels[lab_dist(rng)]));
        break;
    }
  }
  return w.normalized();
}

std::uint64_t cycle_len(const std::vector<std::uint64_t>& perm, std::uint64_t v) {
  std::uint64_t len = 0;
  std::uint64_t u = v;
  do {
    u = perm[u];
    ++len;
  } while (u != v);
  return len;
}

// First absolute level within `extra` levels below `level` at which the cycle
// through `rep` fails to double, or 0 if it doubles through the whole window.
int literal_first_split(const std::vector<std::vector<std::uint64_t>>& perms,
                        std::uint64_t rep, int level, int extra) {
  std::uint64_t len = cycle_len(perms[level], rep);
  for (int j = 1; j <= extra; ++j) {
    std::uint64_t lifted = cycle_len(perms[level + j], rep << j);
    if (lifted != 2 * len) return level + j;
    len = lifted;
  }
  return 0;
}

}  // namespace

TEST_CASE("stable counts for the generator words") {
  System sys(2, 64);
  Dynamics dyn(sys);

  // The odometer keeps every vertex on a (single, stable) cycle.
  std::vector<std::uint64_t> g = dyn.stable_counts(sys.parse("g"), 10);
  for (int n = 0; n <= 10; ++n) CHECK(g[n] == (std::uint64_t{1} << n));

  // The identity stabilizes nothing: every cycle is a fixed point with
  // identity return word, which is not an odometer.
  std::vector<std::uint64_t> id = dyn.stable_counts(sys.parse("1"), 10);
  for (int n = 0; n <= 10; ++n) CHECK(id[n] == 0);

  // a1 alone never stabilizes a vertex: its return words are conjugates of
  // generator letters, never odometers.
  std::vector<std::uint64_t> a1 = dyn.stable_counts(sys.parse("a1"), 12);
  for (int n = 0; n <= 12; ++n) CHECK(a1[n] == 0);

  // a1*a2 is an odometer, so every level is fully stable.
  std::vector<std::uint64_t> prod = dyn.stable_counts(sys.parse("a1*a2"), 10);
  for (int n = 0; n <= 10; ++n) CHECK(prod[n] == (std::uint64_t{1} << n));

  CHECK(dyn.stable_counts_direct(sys.parse("g"), 6) == dyn.stable_counts(sys.parse("g"), 6));
  CHECK(dyn.stable_counts_direct(sys.parse("a1"), 6) == dyn.stable_counts(sys.parse("a1"), 6));
}

TEST_CASE("trivial-top base example via portraits") {
  // alpha = (odometer, identity): the root cycle is not stable, but the
  // level-1 fixed vertex over the odometer side is.
  Portrait alpha = Portrait::assemble(Portrait::odometer(7), Portrait::identity(7), false);

  Dynamics dyn(System(2, 64));
  std::vector<std::uint64_t> s = dyn.stable_counts_to_depth(alpha, 4);
  CHECK(s[0] == 0);
  CHECK(s[1] == 1);
  CHECK(s[2] == 2);
  CHECK(s[3] == 4);
  CHECK(s[4] == 8);

  Portrait alpha2 = alpha.compose(alpha);
  std::vector<std::uint64_t> s2 = dyn.stable_counts_to_depth(alpha2, 2);
  CHECK(s2[1] == 0);  // s_1(alpha^2) = 0 < s_1(alpha) = 1
  CHECK(s2[2] == 2);  // 2*s_1(alpha) <= s_2(alpha^2)

  std::vector<PortraitCycleRecord> root = dyn.cycle_table(alpha, 0);
  REQUIRE(root.size() == 1);
  CHECK(root[0].status.kind == StabilityStatus::Kind::Splits);
  CHECK(root[0].status.level == 1);

  // Assembling two depth-7 subtrees gives a depth-8 portrait, so the stable
  // side is verified through absolute level 1 + 7.
  std::vector<PortraitCycleRecord> level1 = dyn.cycle_table(alpha, 1);
  REQUIRE(level1.size() == 2);
  CHECK(level1[0].representative == 0);
  CHECK(level1[0].status.kind == StabilityStatus::Kind::StableToDepth);
  CHECK(level1[0].status.level == 8);
  CHECK(level1[1].status.kind == StabilityStatus::Kind::Splits);
  CHECK(level1[1].status.level == 2);
}

TEST_CASE("exact counts for odometer-power times normalizer words") {
  System sys(2, 64);
  Dynamics dyn(sys);

  auto counts = [&](const std::string& expr, int top) {
    return dyn.stable_counts(sys.parse(expr), top);
  };
  std::uint64_t one = 1;

  // Labels congruent to 1 mod 4, odometer valuation at most the label
  // half-valuation: fully stable from level v2(m) on.
  {
    std::vector<std::uint64_t> s = counts("g*z[5]", 12);
    for (int n = 0; n <= 12; ++n) CHECK(s[n] == (one << n));
  }
  {
    std::vector<std::uint64_t> s = counts("g^2*z[5]", 12);
    CHECK(s[0] == 0);
    for (int n = 1; n <= 12; ++n) CHECK(s[n] == (one << n));
  }
  {
    std::vector<std::uint64_t> s = counts("g^6*z[5]", 12);
    for (int n = 1; n <= 12; ++n) CHECK(s[n] == (one << n));
  }
  {
    std::vector<std::uint64_t> s = counts("g^4*z[9]", 12);
    for (int n = 2; n <= 12; ++n) CHECK(s[n] == (one << n));
  }
  {
    std::vector<std::uint64_t> s = counts("g^2*z[9]", 12);
    for (int n = 1; n <= 12; ++n) CHECK(s[n] == (one << n));
  }
  {
    std::vector<std::uint64_t> s = counts("g^8*z[17]", 12);
    for (int n = 3; n <= 12; ++n) CHECK(s[n] == (one << n));
  }

  // Same labels with too-even odometer part: a constant deficit of
  // 2^{v2((label-1)/2)} from that level on.
  for (const char* expr : {"z[5]", "g^4*z[5]", "g^8*z[5]", "g^12*z[5]"}) {
    std::vector<std::uint64_t> s = counts(expr, 12);
    for (int n = 1; n <= 12; ++n) CHECK(s[n] == (one << n) - 2);
  }
  for (const char* expr : {"z[9]", "g^8*z[9]"}) {
    std::vector<std::uint64_t> s = counts(expr, 12);
    for (int n = 2; n <= 12; ++n) CHECK(s[n] == (one << n) - 4);
  }

  // Labels congruent to 3 mod 4 with odd odometer part: fully stable from
  // v2(label+1) on.
  {
    std::vector<std::uint64_t> s = counts("g*z[3]", 12);
    for (int n = 2; n <= 12; ++n) CHECK(s[n] == (one << n));
  }
  {
    std::vector<std::uint64_t> s = counts("g^3*z[3]", 12);
    for (int n = 2; n <= 12; ++n) CHECK(s[n] == (one << n));
  }
  {
    std::vector<std::uint64_t> s = counts("g*z[7]", 12);
    for (int n = 3; n <= 12; ++n) CHECK(s[n] == (one << n));
  }
  {
    std::vector<std::uint64_t> s = counts("g*z[11]", 12);
    for (int n = 2; n <= 12; ++n) CHECK(s[n] == (one << n));
  }

  // The even case for label 3: deficit exactly 4 from level 2 on (the lower
  // bound 2^n - 2^{v2(label+1)} meets the deficit bound 2^{nu+1} = 4).
  {
    std::vector<std::uint64_t> s = counts("z[3]", 14);
    CHECK(s[0] == 0);
    CHECK(s[1] == 0);
    for (int n = 2; n <= 14; ++n) CHECK(s[n] == (one << n) - 4);
  }

  // Lower bounds and the uniform deficit bound 2^{nu+1} for a grid.
  struct GridCase { const char* expr; long nu; };
  const GridCase grid[] = {
      {"z[3]", 1},      {"g^2*z[3]", 1},  {"z[7]", 2},      {"g^2*z[7]", 2},
      {"g^4*z[7]", 2},  {"z[11]", 1},     {"g^2*z[11]", 1}, {"z[5]", 1},
      {"g^3*z[9]", 2},  {"g^2*z[17]", 3},
  };
  for (const GridCase& c : grid) {
    Dyadic label = sys.coset_label(sys.parse(c.expr));
    CHECK(label.nu() == c.nu);
    std::vector<std::uint64_t> s = counts(c.expr, 12);
    for (int n = static_cast<int>(c.nu) + 1; n <= 12; ++n) {
      CHECK((one << n) - s[n] <= (one << (c.nu + 1)));
    }
  }

  // Independent slow path agrees.
  for (const char* expr :
       {"z[5]", "g*z[5]", "g^4*z[9]", "g*z[3]", "z[3]", "g^2*z[7]"}) {
    CHECK(dyn.stable_counts_direct(sys.parse(expr), 8) == counts(expr, 8));
  }
}

TEST_CASE("cycle tables carry per-cycle certificates") {
  System sys(2, 64);
  Dynamics dyn(sys);

  // The odometer: one certified cycle per level.
  for (int level = 1; level <= 5; ++level) {
    std::vector<CycleRecord> table = dyn.cycle_table(sys.parse("g"), level);
    REQUIRE(table.size() == 1);
    CHECK(table[0].length == (std::uint64_t{1} << level));
    CHECK(table[0].status.kind == StabilityStatus::Kind::Certified);
    CHECK(table[0].members.size() == table[0].length);
  }

  // z[5] fixes all four level-2 vertices; exactly the two with odd odometer
  // part in the return word are stable, the others split immediately.
  {
    std::vector<CycleRecord> table = dyn.cycle_table(sys.parse("z[5]"), 2);
    REQUIRE(table.size() == 4);
    CHECK(table[0].section_product.key() == "z[5]");
    CHECK(table[0].status.kind == StabilityStatus::Kind::Splits);
    CHECK(table[0].status.level == 3);
    CHECK(table[1].section_product.key() == "g^2*z[5]");
    CHECK(table[1].status.kind == StabilityStatus::Kind::Splits);
    CHECK(table[1].status.level == 3);
    CHECK(table[2].section_product.key() == "g*z[5]");
    CHECK(table[2].status.kind == StabilityStatus::Kind::Certified);
    CHECK(table[3].section_product.key() == "g^3*z[5]");
    CHECK(table[3].status.kind == StabilityStatus::Kind::Certified);

    std::uint64_t stable = 0;
    for (const CycleRecord& rec : table)
      if (rec.status.kind == StabilityStatus::Kind::Certified) stable += rec.length;
    CHECK(stable == dyn.stable_counts(sys.parse("z[5]"), 2)[2]);
  }

  // a1 at level 2: the orbit of 00 returns with word a1 (splits two levels
  // down, where the -1 in its sign pattern runs out), the other with the
  // identity (splits immediately).
  {
    std::vector<CycleRecord> table = dyn.cycle_table(sys.parse("a1"), 2);
    REQUIRE(table.size() == 2);
    CHECK(table[0].length == 2);
    CHECK(table[0].section_product.key() == "a1");
    CHECK(table[0].status.kind == StabilityStatus::Kind::Splits);
    CHECK(table[0].status.level == 4);
    CHECK(table[1].section_product.key() == "1");
    CHECK(table[1].status.kind == StabilityStatus::Kind::Splits);
    CHECK(table[1].status.level == 3);
  }
}

TEST_CASE("descendant levels reproduce the closed forms") {
  System sys(2, 64);
  Dynamics dyn(sys);

  // Worked chain: a1*z[3] -> a2*g*z[9] -> a1*g^5*z[81] -> two descendants.
  std::vector<std::vector<Word>> levels = dyn.descendants(sys.parse("a1*z[3]"), 3);
  REQUIRE(levels.size() == 3);
  REQUIRE(levels[0].size() == 1);
  CHECK(levels[0][0].key() == (Word::a(2) * Word::g(1) * Word::z(Dyadic::exact_int(9))).key());
  REQUIRE(levels[1].size() == 1);
  CHECK(levels[1][0].key() == (Word::a(1) * Word::g(5) * Word::z(Dyadic::exact_int(81))).key());
  REQUIRE(levels[2].size() == 2);
  CHECK(levels[2][0].key() == (Word::a(2) * Word::g(2) * Word::z(Dyadic::exact_int(81))).key());
  CHECK(levels[2][1].key() == (Word::g(43) * Word::z(Dyadic::exact_int(81))).key());

  // First letter with even odometer part: single descendant with squared
  // label and odometer exponent (1+k)m/2 + (k-1)/2.
  for (long k : {3L, 5L, 7L}) {
    std::vector<Word> kids = dyn.first_descendants(sys.parse("a1*z[" + std::to_string(k) + "]"));
    REQUIRE(kids.size() == 1);
    Word expected = Word::a(2) * Word::g(Dyadic::exact_int((k - 1) / 2)) *
                    Word::z(Dyadic::exact_int(k * k));
    CHECK(kids[0].key() == expected.key());
  }
  {
    std::vector<Word> kids = dyn.first_descendants(sys.parse("a1*g^2*z[3]"));
    REQUIRE(kids.size() == 1);
    CHECK(kids[0].key() == (Word::a(2) * Word::g(5) * Word::z(Dyadic::exact_int(9))).key());
  }

  // First letter with odd odometer part: two descendants in the same coset.
  {
    std::vector<Word> kids = dyn.first_descendants(sys.parse("a1*g*z[3]"));
    REQUIRE(kids.size() == 2);
    CHECK(kids[0].key() == (Word::a(2) * Word::z(Dyadic::exact_int(3))).key());
    CHECK(kids[1].key() == (Word::g(2) * Word::z(Dyadic::exact_int(3))).key());
  }

  // Higher letters swap the parity roles.
  {
    std::vector<Word> kids = dyn.first_descendants(sys.parse("a2*g^2*z[5]"));
    REQUIRE(kids.size() == 2);
    CHECK(kids[0].key() == (Word::a(1) * Word::g(1) * Word::z(Dyadic::exact_int(5))).key());
    CHECK(kids[1].key() == (Word::g(3) * Word::z(Dyadic::exact_int(5))).key());
  }
  {
    // Sections multiply to a1*g^{(m+1)/2 + (k-1)/2}*z[k^2] for odd m = 1.
    std::vector<Word> kids = dyn.first_descendants(sys.parse("a2*g*z[5]"));
    REQUIRE(kids.size() == 1);
    CHECK(kids[0].key() == (Word::a(1) * Word::g(3) * Word::z(Dyadic::exact_int(25))).key());
  }

  // Rank 3: the first-letter descent lands on the top letter a3.
  {
    System sys3(3, 64);
    Dynamics dyn3(sys3);
    std::vector<Word> kids = dyn3.first_descendants(sys3.parse("a1*z[3]"));
    REQUIRE(kids.size() == 1);
    CHECK(kids[0].key() == (Word::a(3) * Word::g(1) * Word::z(Dyadic::exact_int(9))).key());
  }

  // Descendants of normalizer-family words stay in the family.
  for (const char* expr : {"z[3]", "g^3*z[5]"}) {
    std::vector<std::vector<Word>> tree = dyn.descendants(sys.parse(expr), 6);
    for (const std::vector<Word>& level : tree) {
      for (const Word& member : level) {
        CHECK(sys.membership(member, 4).verdict == Membership::Verdict::Yes);
      }
    }
  }
}

TEST_CASE("block analysis and chains") {
  System sys(2, 64);
  Dynamics dyn(sys);

  // Normalizer-family words: stable blocks whose descendant chain empties
  // immediately (every first descendant is back in the family).
  for (const char* expr : {"z[3]", "g*z[5]", "g^2*z[7]"}) {
    BlockReport report = dyn.analyze_blocks(sys.parse(expr), 8);
    CHECK(report.stable_block == Membership::Verdict::Yes);
    CHECK(report.first_failure == -1);
    CHECK(report.chain_state == BlockReport::ChainState::Empty);
    CHECK(report.chain_event_level == 1);
  }

  // The odometer is a stable block (every level swaps), chain all -1.
  {
    BlockReport report = dyn.analyze_blocks(sys.parse("g"), 8);
    CHECK(report.stable_block == Membership::Verdict::Yes);
    CHECK(report.chain_state == BlockReport::ChainState::Intact);
    for (int d : report.d_signs) CHECK(d == -1);
  }

  // Mixed words from the settled family: stable blocks with intact singleton
  // chains (the non-family descendant is unique at every level).
  for (const char* expr : {"a1*z[3]", "a2*z[5]", "a1*g*z[7]", "a2*g^2*z[9]"}) {
    BlockReport report = dyn.analyze_blocks(sys.parse(expr), 8);
    CHECK(report.stable_block == Membership::Verdict::Yes);
    CHECK(report.chain_state == BlockReport::ChainState::Intact);
    CHECK(report.chain.size() == 9);
  }

  // The worked chain again, now with top-level signs.
  {
    BlockReport report = dyn.analyze_blocks(sys.parse("a1*z[3]"), 6);
    CHECK(report.chain[1].key() == (Word::a(2) * Word::g(1) * Word::z(Dyadic::exact_int(9))).key());
    REQUIRE(report.d_signs.size() == 7);
    CHECK(report.d_signs[0] == -1);
    CHECK(report.d_signs[1] == -1);
    CHECK(report.d_signs[2] == 1);
    CHECK(report.d_signs[3] == 1);
  }

  // Bare generator letters are rejected within two steps.
  {
    BlockReport report = dyn.analyze_blocks(sys.parse("a1"), 4);
    CHECK(report.stable_block == Membership::Verdict::No);
    CHECK(report.first_failure == 1);
  }
  {
    BlockReport report = dyn.analyze_blocks(sys.parse("a2"), 4);
    CHECK(report.stable_block == Membership::Verdict::No);
    CHECK(report.first_failure == 0);
  }
  {
    BlockReport report = dyn.analyze_blocks(sys.parse("1"), 2);
    CHECK(report.stable_block == Membership::Verdict::No);
    CHECK(report.first_failure == 0);
  }

  // Unresolved membership must surface as Unknown, never as a silent block.
  {
    BlockReport report = dyn.analyze_blocks(sys.parse("z[3]*z[3]^-1"), 2);
    CHECK(report.stable_block == Membership::Verdict::Unknown);
  }

  // Top-level sign table for the family words.
  for (int i : {1, 2}) {
    for (int m = 0; m <= 3; ++m) {
      Word w = sys.parse("a" + std::to_string(i) + "*g^" + std::to_string(m) + "*z[3]");
      BlockReport report = dyn.analyze_blocks(w, 0);
      bool plus = (i > 1 && m % 2 == 0) || (i == 1 && m % 2 == 1);
      CHECK(report.d_signs[0] == (plus ? 1 : -1));
    }
  }
}

TEST_CASE("d-sequences with runs and termination") {
  System sys(2, 64);
  Dynamics dyn(sys);

  {
    DSequence seq = dyn.d_sequence(sys.parse("z[5]"), 6);
    CHECK(seq.terminated_at == 1);
    REQUIRE(seq.signs.size() == 1);
    CHECK(seq.signs[0] == 1);
    REQUIRE(seq.runs.size() == 1);
    CHECK(seq.runs[0] == std::pair<int, int>(1, 0));
  }
  {
    DSequence seq = dyn.d_sequence(sys.parse("a1*z[3]"), 6);
    CHECK(seq.terminated_at == -1);
    CHECK(seq.intact());
    std::vector<int> expected = {-1, -1, 1, 1, 1, 1, -1};
    CHECK(seq.signs == expected);
    REQUIRE(seq.runs.size() == 2);
    CHECK(seq.runs[0] == std::pair<int, int>(0, 2));
    CHECK(seq.runs[1] == std::pair<int, int>(4, 1));
  }
  {
    DSequence seq = dyn.d_sequence(sys.parse("a2*z[5]"), 4);
    REQUIRE(seq.signs.size() >= 2);
    CHECK(seq.signs[0] == 1);
    CHECK(seq.signs[1] == -1);
    CHECK(seq.runs[0].first == 1);
  }
}

TEST_CASE("chain estimate: soundness and degenerate forms") {
  System sys(2, 64);
  Dynamics dyn(sys);

  // t = 0 degenerates to the computed value itself.
  for (int n : {2, 5, 8}) {
    EstimateResult res = dyn.estimate_chain_bound(sys.parse("z[3]"), 0, n);
    REQUIRE(res.emitted);
    CHECK(res.nu == 1);
    CHECK(res.bound == static_cast<long long>(res.actual));
  }

  // One chain step with the top sign +1.
  for (int n = 3; n <= 10; ++n) {
    EstimateResult res = dyn.estimate_chain_bound(sys.parse("a2*z[5]"), 1, n);
    REQUIRE(res.emitted);
    CHECK(res.nu == 1);
    CHECK(res.bound <= static_cast<long long>(res.actual));
  }

  // Rank 3 gives a run of three +1 signs.
  {
    System sys3(3, 64);
    Dynamics dyn3(sys3);
    for (int n = 5; n <= 9; ++n) {
      EstimateResult res = dyn3.estimate_chain_bound(sys3.parse("a3*g^4*z[3]"), 3, n);
      REQUIRE(res.emitted);
      CHECK(res.bound <= static_cast<long long>(res.actual));
    }
  }

  // Precondition failures are reported, not emitted.
  {
    EstimateResult res = dyn.estimate_chain_bound(sys.parse("a1*z[3]"), 1, 8);
    CHECK_FALSE(res.emitted);
    CHECK(res.reason.find("sign") != std::string::npos);
  }
  {
    EstimateResult res = dyn.estimate_chain_bound(sys.parse("a1*a2"), 0, 4);
    CHECK_FALSE(res.emitted);
    CHECK(res.reason.find("+-1") != std::string::npos);
  }
  {
    EstimateResult res = dyn.estimate_chain_bound(sys.parse("z[5]"), 1, 8);
    CHECK_FALSE(res.emitted);
    CHECK(res.reason.find("no descendant") != std::string::npos);
  }
  {
    EstimateResult res = dyn.estimate_chain_bound(sys.parse("z[3]"), 0, 1);
    CHECK_FALSE(res.emitted);
    CHECK(res.reason.find("below") != std::string::npos);
  }

  // The all-ones bound for the settled family.
  for (long k : {3L, 5L}) {
    long nu = Dyadic::exact_int(k).nu();
    for (int i : {1, 2}) {
      for (int m : {0, 1}) {
        Word w = sys.parse("a" + std::to_string(i) + "*g^" + std::to_string(m) +
                           "*z[" + std::to_string(k) + "]");
        std::vector<std::uint64_t> s = dyn.stable_counts(w, 12);
        for (int n = 1; n <= 12; ++n) {
          long long floor_bound =
              (1LL << n) - static_cast<long long>(n) * (1LL << (nu + 1));
          CHECK(static_cast<long long>(s[n]) >= floor_bound);
        }
      }
    }
  }
}

TEST_CASE("settle profiles") {
  System sys(2, 64);
  Dynamics dyn(sys);

  {
    SettleProfileResult profile = dyn.settle_profile(sys.parse("g"), 8);
    CHECK(profile.s0 == 1);
    CHECK(profile.fully_stable_from == 1);
    for (const SettleRow& row : profile.rows) CHECK(row.stable == row.total);
  }
  {
    SettleProfileResult profile = dyn.settle_profile(sys.parse("z[3]"), 14);
    CHECK(profile.s0 == 0);
    CHECK(profile.fully_stable_from == -1);
    for (const SettleRow& row : profile.rows) {
      if (row.level >= 2) CHECK(row.total - row.stable == 4);
    }
  }
  {
    SettleProfileResult profile = dyn.settle_profile(sys.parse("a1"), 12);
    for (const SettleRow& row : profile.rows) CHECK(row.stable == 0);
  }
  {
    SettleProfileResult profile = dyn.settle_profile(sys.parse("g^2*z[5]"), 10);
    CHECK(profile.fully_stable_from == 1);
  }

  // The flagship settled product: ratio at least 0.9 by level 14.
  {
    std::vector<std::uint64_t> s = dyn.stable_counts(sys.parse("a1*z[3]"), 14);
    CHECK(10 * s[14] >= 9 * (std::uint64_t{1} << 14));
  }
}

TEST_CASE("structural properties on random words") {
  System sys(2, 64);
  Dynamics dyn(sys);
  std::mt19937_64 rng(20260822);

  for (int trial = 0; trial < 40; ++trial) {
    Word w = random_word(sys, rng, 8);
    std::vector<std::uint64_t> s = dyn.stable_counts(w, 9);

    // Monotone doubling of stable vertex counts.
    for (int n = 0; n < 9; ++n) CHECK(s[n + 1] >= 2 * s[n]);

    // The recursion seen as a black-box identity on sections.
    if (sys.root_swapped(w)) {
      Word child = sys.section(w, 0) * sys.section(w, 1);
      std::vector<std::uint64_t> c = dyn.stable_counts(child, 8);
      for (int n = 1; n <= 9; ++n) CHECK(s[n] == 2 * c[n - 1]);
    } else {
      std::vector<std::uint64_t> c0 = dyn.stable_counts(sys.section(w, 0), 8);
      std::vector<std::uint64_t> c1 = dyn.stable_counts(sys.section(w, 1), 8);
      for (int n = 1; n <= 9; ++n) CHECK(s[n] == c0[n - 1] + c1[n - 1]);
      // Full stability at a level is exactly full stability of both sections
      // one level up.
      for (int n = 1; n <= 9; ++n) {
        bool full = s[n] == (std::uint64_t{1} << n);
        bool kids = c0[n - 1] == (std::uint64_t{1} << (n - 1)) &&
                    c1[n - 1] == (std::uint64_t{1} << (n - 1));
        CHECK(full == kids);
      }
    }

    // Square laws.
    std::vector<std::uint64_t> sq = dyn.stable_counts(w * w, 9);
    for (int n = 0; n < 9; ++n) {
      CHECK(2 * s[n] <= sq[n + 1]);
      CHECK(sq[n + 1] <= s[n + 1]);
    }
  }

  // Conjugation preserves every count.
  for (int trial = 0; trial < 34; ++trial) {
    Word w = random_word(sys, rng, 6);
    for (int c = 0; c < 3; ++c) {
      Word g = random_word(sys, rng, 4);
      Word conj = (g * w * sys.inverse(g)).normalized();
      CHECK(dyn.stable_counts(w, 8) == dyn.stable_counts(conj, 8));
    }
  }
  {
    Word w = sys.parse("a1*z[3]");
    Word g = sys.parse("a2*g^3*z[5]");
    Word conj = (g * w * sys.inverse(g)).normalized();
    CHECK(dyn.stable_counts(w, 10) == dyn.stable_counts(conj, 10));
  }

  // Squaring a normalizer letter is the same word as the squared label.
  for (long k : {3L, 5L, 7L}) {
    Word square = sys.parse("z[" + std::to_string(k) + "]^2");
    Word direct = sys.parse("z[" + std::to_string(k * k) + "]");
    CHECK(square.key() == direct.key());
    CHECK(dyn.stable_counts(square, 8) == dyn.stable_counts(direct, 8));
  }
}

TEST_CASE("per-cycle verdicts match literal lift doubling") {
  System sys(2, 64);
  Dynamics dyn(sys);
  std::mt19937_64 rng(424242);

  const int kMaxBase = 8;
  const int kExtra = 6;

  for (int trial = 0; trial < 200; ++trial) {
    Word w = dyn.reduced(random_word(sys, rng, 10), kMaxBase + kExtra);
    Portrait deep = sys.portrait(w, kMaxBase + kExtra);
    std::vector<std::vector<std::uint64_t>> perms;
    for (int level = 0; level <= kMaxBase + kExtra; ++level)
      perms.push_back(deep.permutation(level));

    int base = trial % (kMaxBase + 1);
    std::vector<CycleRecord> table = dyn.cycle_table(w, base);
    std::uint64_t covered = 0;
    for (const CycleRecord& rec : table) {
      covered += rec.length;
      int literal = literal_first_split(perms, rec.representative, base, kExtra);
      if (rec.status.kind == StabilityStatus::Kind::Certified) {
        CHECK(literal == 0);
      } else {
        REQUIRE(rec.status.kind == StabilityStatus::Kind::Splits);
        if (rec.status.level <= base + kExtra)
          CHECK(literal == rec.status.level);
        else
          CHECK(literal == 0);
      }
    }
    CHECK(covered == (std::uint64_t{1} << base));

    // Table totals tie back to the recursive counts.
    std::uint64_t stable = 0;
    for (const CycleRecord& rec : table)
      if (rec.status.kind == StabilityStatus::Kind::Certified) stable += rec.length;
    CHECK(stable == dyn.stable_counts(w, base)[base]);

    // Slow path agrees with the recursion on a sample.
    if (trial % 8 == 0)
      CHECK(dyn.stable_counts_direct(w, 6) == dyn.stable_counts(w, 6));
  }

  // Mode agreement at a deeper level for a structured sample.
  for (const char* expr : {"z[5]", "a1*z[3]", "g*z[3]"}) {
    Word w = sys.parse(expr);
    CHECK(dyn.stable_counts_direct(w, 12) == dyn.stable_counts(w, 12));
  }
}

TEST_CASE("argument guards") {
  System sys(2, 64);
  Dynamics dyn(sys);
  Word g = sys.parse("g");

  CHECK_THROWS_AS(dyn.stable_counts(g, 27), Error);
  CHECK_THROWS_AS(dyn.stable_counts(g, -1), Error);
  CHECK_THROWS_AS(dyn.cycle_table(g, 27), Error);
  CHECK_THROWS_AS(dyn.cycle_table(Portrait::odometer(5), 5), Error);
  CHECK_THROWS_AS(dyn.stable_counts_to_depth(Portrait::odometer(5), 5), Error);
  CHECK_THROWS_AS(dyn.descendants(g, -1), Error);
  CHECK_THROWS_AS(dyn.estimate_chain_bound(g, -1, 4), Error);
  CHECK_THROWS_AS(dyn.estimate_chain_bound(g, 0, 27), Error);
}
