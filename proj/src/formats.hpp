#pragma once

#include <string>
#include <vector>

#include "dense.hpp"
#include "dynamics.hpp"

namespace settled {

// Deterministic text renderings of the library's result types: identical
// inputs serialize byte-identically.  JSON payloads are pretty-printed with a
// trailing newline; CSV uses '\n' row endings and no quoting (no emitted
// field ever contains a comma).

std::string verdict_name(Membership::Verdict verdict);  // yes / no / unknown

// --- settle profiles --------------------------------------------------------
// Schema: header "level,total,stable,ratio", one row per level 1..N; ratio is
// the exact fraction stable/total in lowest terms ("0", "1", or "p/q").
std::string profile_csv(const SettleProfileResult& profile);
std::string profile_json(const SettleProfileResult& profile);

// Strict re-parser for profile_csv output: validates the header, consecutive
// levels from 1, total = 2^level, stable <= total, and that the ratio column
// is exactly the reduced fraction of the integer columns.
std::vector<SettleRow> parse_profile_csv(const std::string& text);

// --- portraits --------------------------------------------------------------
std::string portrait_json(const Portrait& portrait);
std::string portrait_csv(const Portrait& portrait);  // level,sign rows

// --- cycle tables -----------------------------------------------------------
// One entry per level, carrying that level's full cycle decomposition with
// stability statuses rendered as {"kind": "certified"} or
// {"kind": "to_depth"|"splits_at", "level": n}.
std::string cycles_json(const std::vector<std::vector<CycleRecord>>& tables);
std::string cycles_csv(const std::vector<std::vector<CycleRecord>>& tables);

// --- descendant listings and block reports ----------------------------------
// The descendant view lists every element per level with its settled-family
// verdict and coset label; the block view adds per-element block verdicts,
// the non-family chain, its top signs, and the overall verdict.
std::string descendants_json(const System& sys, const BlockReport& report);
std::string descendants_csv(const System& sys, const BlockReport& report);
std::string blocks_json(const System& sys, const BlockReport& report);
std::string blocks_csv(const System& sys, const BlockReport& report);

// --- finite-family approximation --------------------------------------------
std::string approx_json(const Word& input, const ApproxResult& result,
                        bool agrees);
std::string approx_csv(const Word& input, const ApproxResult& result,
                       bool agrees);

}  // namespace settled
