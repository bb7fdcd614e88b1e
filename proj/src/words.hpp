#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dyadic.hpp"
#include "portrait.hpp"

namespace settled {

// Letters of the working alphabet:
//   A: the finite-state generators a_1..a_r, with an exact integer exponent;
//   G: a power of the odometer, with an arbitrary 2-adic exponent;
//   Z: a normalizer element labelled by an odd 2-adic unit.
struct Letter {
  enum class Base { A, G, Z };
  Base base;
  int index;      // only meaningful for A
  Dyadic value;   // A: exponent, G: exponent, Z: label

  std::string str() const;
};

// A word is a finite product of letters, acting on the right (apply the first
// letter first).  Words are plain containers; every operation that depends on
// the rank r or on a working precision lives on System.
class Word {
 public:
  Word() = default;

  static Word one() { return Word(); }
  static Word a(int index, long exponent = 1);
  static Word a(int index, const Dyadic& exponent);
  static Word g(long exponent = 1);
  static Word g(const Dyadic& exponent);
  static Word z(const Dyadic& label);

  const std::vector<Letter>& letters() const { return letters_; }
  bool trivial() const { return letters_.empty(); }
  std::size_t size() const { return letters_.size(); }

  Word operator*(const Word& other) const;
  Word& operator*=(const Word& other);

  // Merges adjacent letters with the same base (and index), dropping letters
  // that are exactly the identity.
  Word normalized() const;

  std::string str() const;
  // Canonical key of the normalized word; equal keys mean equal words.
  std::string key() const { return normalized().str(); }

 private:
  std::vector<Letter> letters_;
};

// Eventually periodic sign sequence of a word: sign_at(n) for levels n >= 1 is
// head[n-1] while n <= head.size(), then repeats cycle.  Exact at every level.
struct SignProfile {
  std::vector<int> head;
  std::vector<int> cycle;  // never empty

  static SignProfile constant(int sign) { return SignProfile{{}, {sign}}; }
  int at(int level) const;
  SignProfile times(const SignProfile& other) const;
  bool all_minus() const;
  // True when sign_at is the same at every level strictly above `level`.
  bool constant_after(int level) const;
};

// Verdict of the normalized-odometer-family membership test.  "Yes" is exact
// and only reachable symbolically; "No" always carries an exact obstruction;
// "Unknown" means consistent with membership to the probed depth.
struct Membership {
  enum class Verdict { Yes, No, Unknown };
  Verdict verdict;
  std::optional<Dyadic> exponent;  // m with w = g^m z_k, when determined
  std::optional<Dyadic> label;     // k, when determined
  int depth_checked = 0;
  std::string reason;
};

// Fixes the rank r of the finite generator family and the working precision
// used whenever an exact label must be inverted or powered into a residue.
class System {
 public:
  static constexpr int kMinRank = 2;
  static constexpr int kMaxRank = 8;

  explicit System(int rank, int precision = 64);

  int rank() const { return rank_; }
  int precision() const { return precision_; }

  Word parse(const std::string& text) const;
  // Same grammar evaluated over portraits at a fixed depth; this is the only
  // context admitting the root swap atom `s`.
  Portrait parse_portrait(const std::string& text, int depth) const;

  Word inverse(const Word& word) const;
  Word pow(const Word& word, long exponent) const;

  bool root_swapped(const Word& word) const;
  // Level-1 section on the given side, threading sides through the letters.
  Word section(const Word& word, int side) const;

  Portrait portrait(const Word& word, int depth) const;
  Portrait portrait(const Letter& letter, int depth) const;

  SignProfile sign_profile(const Word& word) const;
  // Exact: a word is conjugate to the odometer in the full group iff its sign
  // is -1 at every level.
  bool is_odometer(const Word& word) const;

  // For words in the odometer and normalizer letters only: the exact normal
  // form g^m z_k, as (m, k).  nullopt when the word contains an A letter.
  std::optional<std::pair<Dyadic, Dyadic>> normal_form_ngamma(const Word& word) const;

  // Product of the normalizer labels of the word.
  Dyadic coset_label(const Word& word) const;

  // Sum of |exponent| over the finite-family letters of the normalized word:
  // an upper bound for the generator length that is subadditive under
  // sections.  Requires every generator exponent to be an exact integer.
  std::uint64_t a_length_upper(const Word& word) const;

  Membership membership(const Word& word, int probe_depth) const;

 private:
  bool letter_swapped(const Letter& letter) const;
  Word letter_section(const Letter& letter, int side) const;
  SignProfile letter_profile(const Letter& letter) const;

  int rank_;
  int precision_;
  mutable std::map<std::string, Portrait> portrait_cache_;
};

}  // namespace settled
