#include "dyadic.hpp"

#include <utility>

namespace settled {

namespace {

// v2 of a nonzero integer.
long scan_v2(const mpz_class& v) {
  mpz_class a = abs(v);
  return static_cast<long>(mpz_scan1(a.get_mpz_t(), 0));
}

}  // namespace

mpz_class Dyadic::reduce(const mpz_class& v, int precision) {
  mpz_class m;
  mpz_fdiv_r_2exp(m.get_mpz_t(), v.get_mpz_t(), precision);  // floor division: result in [0, 2^P)
  return m;
}

Dyadic Dyadic::residue(mpz_class v, int precision) {
  if (precision < 1 || precision > kMaxPrecision)
    throw Error::domain("residue precision must be in [1, 2^20], got " + std::to_string(precision));
  mpz_class r = reduce(v, precision);
  return Dyadic(std::move(r), precision, false);
}

Dyadic Dyadic::parse(const std::string& text) {
  auto pct = text.find('%');
  try {
    if (pct == std::string::npos) {
      mpz_class v(text);  // throws std::invalid_argument on junk
      return exact_int(std::move(v));
    }
    mpz_class v(text.substr(0, pct));
    int p = std::stoi(text.substr(pct + 1));
    return residue(std::move(v), p);
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw Error::parse("bad 2-adic literal: '" + text + "' (want INT or INT%PRECISION)");
  }
}

int Dyadic::bit(unsigned long i) const {
  if (!exact_ && i >= static_cast<unsigned long>(precision_))
    throw Error::precision("bit " + std::to_string(i) + " beyond precision " +
                           std::to_string(precision_));
  return mpz_tstbit(value_.get_mpz_t(), i);  // two's complement for negatives
}

Dyadic::Valuation Dyadic::valuation() const {
  if (value_ == 0) {
    if (exact_) return {Valuation::Kind::Infinite, 0};
    return {Valuation::Kind::AtLeast, precision_};
  }
  return {Valuation::Kind::Finite, scan_v2(value_)};
}

Dyadic Dyadic::ell() const {
  if (!is_unit()) throw Error::domain("ell is defined for odd values only");
  if (exact_) {
    mpz_class l = (value_ - 1) / 2;
    return exact_int(std::move(l));
  }
  if (precision_ < 2) throw Error::precision("ell needs precision >= 2");
  mpz_class l = (value_ - 1) / 2;  // residue is odd and in [1, 2^P), so this is clean
  return Dyadic(std::move(l), precision_ - 1, false);
}

long Dyadic::nu() const {
  if (!is_unit()) throw Error::domain("nu is defined for odd values only");
  if (exact_) {
    if (value_ == 1 || value_ == -1)
      throw Error::domain("nu is infinite at k = ±1");
    mpz_class t = (value_ * value_ - 1) / 4;
    return scan_v2(t);
  }
  if (precision_ < 4) throw Error::precision("nu needs precision >= 4");
  // k^2-1 mod 2^P determines (k^2-1)/4 mod 2^(P-2).
  mpz_class t = reduce(value_ * value_ - 1, precision_) / 4;
  if (t == 0)
    throw Error::precision("cannot separate k from ±1 at precision " +
                           std::to_string(precision_));
  return scan_v2(t);
}

mpz_class Dyadic::truncate(int n) const {
  if (n < 0) throw Error::domain("truncate needs n >= 0");
  if (!exact_ && n > precision_)
    throw Error::precision("truncate to " + std::to_string(n) + " bits exceeds precision " +
                           std::to_string(precision_));
  return reduce(value_, n);
}

int combine_precision(const Dyadic& a, const Dyadic& b) {
  return std::min(a.precision(), b.precision());
}

Dyadic Dyadic::operator+(const Dyadic& o) const {
  int p = combine_precision(*this, o);
  if (p == kInfinitePrecision) return exact_int(value_ + o.value_);
  return residue(value_ + o.value_, p);
}

Dyadic Dyadic::operator*(const Dyadic& o) const {
  int p = combine_precision(*this, o);
  if (p == kInfinitePrecision) return exact_int(value_ * o.value_);
  return residue(value_ * o.value_, p);
}

Dyadic Dyadic::operator-() const {
  if (exact_) return exact_int(-value_);
  return residue(-value_, precision_);
}

Dyadic Dyadic::halve() const {
  if (bit(0) != 0) throw Error::domain("halve rejects odd values");
  if (exact_) return exact_int(value_ / 2);
  if (precision_ < 2) throw Error::precision("halving a 1-bit residue leaves nothing");
  return Dyadic(value_ / 2, precision_ - 1, false);
}

Dyadic Dyadic::inverse(int precision_hint) const {
  if (!is_unit()) throw Error::domain("only units are invertible in Z_2");
  if (exact_ && (value_ == 1 || value_ == -1)) return *this;
  int p = std::min(precision_, precision_hint);
  if (p < 1 || p == kInfinitePrecision)
    throw Error::precision("inverse of a generic unit needs a finite precision hint");
  mpz_class mod;
  mpz_ui_pow_ui(mod.get_mpz_t(), 2, p);
  mpz_class inv;
  if (!mpz_invert(inv.get_mpz_t(), value_.get_mpz_t(), mod.get_mpz_t()))
    throw Error::internal("odd value not invertible mod 2^P");
  return Dyadic(std::move(inv), p, false);
}

Dyadic Dyadic::pow(const Dyadic& e, int precision_hint) const {
  if (!is_unit()) throw Error::domain("pow is defined for units only");
  if (e.exact()) {
    if (e.value() >= 0) {
      if (exact_) {
        if (!e.value().fits_ulong_p())
          throw Error::domain("exact exponent too large");
        mpz_class r;
        mpz_pow_ui(r.get_mpz_t(), value_.get_mpz_t(), e.value().get_ui());
        return exact_int(std::move(r));
      }
      mpz_class mod;
      mpz_ui_pow_ui(mod.get_mpz_t(), 2, precision_);
      mpz_class r;
      mpz_class base = reduce(value_, precision_);
      mpz_powm(r.get_mpz_t(), base.get_mpz_t(), e.value().get_mpz_t(), mod.get_mpz_t());
      return Dyadic(std::move(r), precision_, false);
    }
    Dyadic inv = inverse(precision_hint);
    return inv.pow(exact_int(-e.value()), precision_hint);
  }
  // 2-adic exponent: units mod 2^P form a group of exponent 2^(P-2) (P >= 3),
  // so only e mod 2^(P-2) matters.  With the exponent known to q bits the
  // result is determined mod 2^(q+2) (k^(2^q) = 1 + O(2^(q+2))).
  int p = std::min(precision_, precision_hint);
  int q = e.precision();  // finite here: the exact case was handled above
  if (q < p - 2) p = q + 2;
  if (p < 3) throw Error::precision("2-adic exponentiation needs precision >= 3");
  mpz_class emod = e.truncate(std::min(p - 2, q));
  mpz_class mod;
  mpz_ui_pow_ui(mod.get_mpz_t(), 2, p);
  mpz_class base = reduce(value_, p);
  mpz_class r;
  mpz_powm(r.get_mpz_t(), base.get_mpz_t(), emod.get_mpz_t(), mod.get_mpz_t());
  return Dyadic(std::move(r), p, false);
}

bool Dyadic::congruent(const Dyadic& o, int n) const {
  return truncate(n) == o.truncate(n);
}

std::string Dyadic::str() const {
  if (exact_) return value_.get_str();
  return value_.get_str() + "%" + std::to_string(precision_);
}

}  // namespace settled
