#pragma once

#include <gmpxx.h>

#include <climits>
#include <string>

#include "errors.hpp"

namespace settled {

// A 2-adic integer carried either exactly (an arbitrary-size signed integer,
// behaving as if the precision were infinite) or as a residue mod 2^P with an
// explicit bit count P >= 1.  Operations propagate the minimum precision of
// their inputs; facts that the carried bits cannot decide surface as tagged
// precision errors or interval answers instead of guesses.
class Dyadic {
public:
  static constexpr int kInfinitePrecision = INT_MAX;
  static constexpr int kMaxPrecision = 1 << 20;

  Dyadic() : value_(0), precision_(kInfinitePrecision), exact_(true) {}

  static Dyadic exact_int(long v) { return Dyadic(mpz_class(v), kInfinitePrecision, true); }
  static Dyadic exact_int(mpz_class v) { return Dyadic(std::move(v), kInfinitePrecision, true); }

  // Residue mod 2^precision; any integer input is reduced into [0, 2^P).
  static Dyadic residue(mpz_class v, int precision);

  // "123" / "-7" (exact)  or  "5%16" (residue 5 mod 2^16).
  static Dyadic parse(const std::string& text);

  bool exact() const { return exact_; }
  int precision() const { return precision_; }
  const mpz_class& value() const { return value_; }

  // Bit i (two's complement for negative exact values); requires i < precision.
  int bit(unsigned long i) const;
  bool is_unit() const { return bit(0) == 1; }
  bool is_zero_exact() const { return exact_ && value_ == 0; }

  // What is known about v2 of this number.  An exact 0 has infinite valuation;
  // a residue of 0 mod 2^P only supports "at least P".
  struct Valuation {
    enum class Kind { Finite, AtLeast, Infinite };
    Kind kind;
    long v;  // the valuation (Finite) or the lower bound (AtLeast)

    bool known_at_least(long bound) const {
      return kind == Kind::Infinite || v >= bound;
    }
    bool known_equal(long x) const { return kind == Kind::Finite && v == x; }
  };
  Valuation valuation() const;

  // (k-1)/2 for odd k; the result carries one bit less.
  Dyadic ell() const;

  // v2((k^2-1)/4) for an odd k, finite only when k != ±1.  Raises a precision
  // error when the carried bits cannot distinguish k from ±1, and a domain
  // error for exact k = ±1.
  long nu() const;

  // sum_{i<n} a_i 2^i as an exact nonnegative integer; requires n <= precision.
  mpz_class truncate(int n) const;

  Dyadic operator+(const Dyadic& o) const;
  Dyadic operator-(const Dyadic& o) const { return *this + (-o); }
  Dyadic operator*(const Dyadic& o) const;
  Dyadic operator-() const;

  // Divide by 2.  Only defined for even values (v2 >= 1); rejects odd input.
  Dyadic halve() const;

  // 2-adic inverse of a unit.  Exact ±1 stays exact; any other value becomes a
  // residue at min(own precision, precision_hint).
  Dyadic inverse(int precision_hint) const;

  // unit^e.  An exact nonnegative integer exponent of an exact base stays
  // exact; otherwise the result is a residue (the exponent only matters mod
  // 2^(P-2) because the unit group mod 2^P has exponent 2^(P-2)).
  Dyadic pow(const Dyadic& e, int precision_hint) const;

  // Congruence mod 2^n (n <= both precisions).
  bool congruent(const Dyadic& o, int n) const;

  // Exact representational equality (same exactness, value, precision).
  bool operator==(const Dyadic& o) const {
    return exact_ == o.exact_ && value_ == o.value_ &&
           (exact_ || precision_ == o.precision_);
  }

  // "123" for exact values, "v%P" for residues; parse() round-trips this.
  std::string str() const;

private:
  Dyadic(mpz_class v, int precision, bool exact)
      : value_(std::move(v)), precision_(precision), exact_(exact) {}

  static mpz_class reduce(const mpz_class& v, int precision);

  mpz_class value_;
  int precision_;
  bool exact_;
};

// min of the two effective precisions (exact = infinite).
int combine_precision(const Dyadic& a, const Dyadic& b);

}  // namespace settled
