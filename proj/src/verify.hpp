#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "words.hpp"

namespace settled {

// One checked case inside a suite.  `name` carries the minimal reproducing
// parameters; on failure `detail` holds the counterexample payload.
struct CaseResult {
  std::string name;
  bool pass = true;
  std::string detail;
};

// Outcome of one suite run: the canonical grid text (covered by the report's
// grid hash), the seed the suite drew from, wall time, and per-case verdicts.
struct SuiteResult {
  std::string suite;
  std::string grid;
  std::uint64_t seed = 0;
  double seconds = 0.0;
  std::vector<CaseResult> cases;

  int failures() const;
  bool passed() const { return failures() == 0; }
};

struct HarnessOptions {
  int rank = 2;
  // Caps every level/depth grid parameter at this value; 0 keeps the grid's
  // own caps.
  int max_level = 0;
  std::uint64_t seed = 20260822;
  int precision = 64;
  // JSON overriding the built-in grid; empty keeps the default.  Unknown keys
  // are rejected so a typo cannot silently shrink a suite.
  std::string grid_json;
};

// The checking harness: eight independent, deterministic suites, each
// verifying one family of computable statements end to end:
//   conjugation     z_k g z_k^-1 = g^k as portraits
//   signs           symbolic sign profiles vs portrait signs, both label cases
//   triviality      shallow triviality of z_k and g^m z_k, with strictness,
//                   and the square law z_k^2 = z_{k^2} on portraits
//   classification  exact stable-vertex counts vs the label/exponent case split
//   conjugacy       conjugacy classes of g^m z_k within finite levels
//   generators      the odometer lies in the closure of the finite family:
//                   conjugacy at finite levels, diagonal witnesses, and the
//                   recursively constructed conjugator
//   blocks          stable-block verdicts, descendant closed forms, chain
//                   estimates, and the settle-profile ratio
//   density         finite-family approximation of arbitrary words at level n
// Case bodies never throw: an error is converted into a failing case whose
// payload is the error text.
class Harness {
 public:
  explicit Harness(HarnessOptions options = {});

  static const std::vector<std::string>& suite_names();

  const HarnessOptions& options() const { return options_; }

  // Canonical one-line grid description for one suite (as hashed).
  std::string grid_text(const std::string& suite) const;
  // FNV-1a hash over all grid lines; embedded in the report.
  std::uint64_t grid_hash() const;

  SuiteResult run(const std::string& suite) const;
  std::vector<SuiteResult> run_all() const;

 private:
  int cap(const std::string& suite, const std::string& knob) const;
  std::vector<long> knob_list(const std::string& suite,
                              const std::string& knob) const;
  long knob(const std::string& suite, const std::string& knob_name) const;
  std::uint64_t suite_seed(const std::string& suite) const;

  SuiteResult suite_conjugation() const;
  SuiteResult suite_signs() const;
  SuiteResult suite_triviality() const;
  SuiteResult suite_classification() const;
  SuiteResult suite_conjugacy() const;
  SuiteResult suite_generators() const;
  SuiteResult suite_blocks() const;
  SuiteResult suite_density() const;

  HarnessOptions options_;
  // suite -> knob -> integer list, merged from the default grid and any
  // override; flat integers are stored as one-element lists.
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::vector<long>>>>>
      grid_;
};

// Machine-readable report: seed, grid hash, per-suite cases and verdicts,
// and totals.  Deliberately omits wall times so identical runs emit
// byte-identical reports.
std::string report_json(const Harness& harness,
                        const std::vector<SuiteResult>& results);

}  // namespace settled
