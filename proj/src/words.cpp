#include "words.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "errors.hpp"

namespace settled {

namespace {

constexpr std::size_t kMaxWordLetters = std::size_t{1} << 20;

bool is_exact_value(const Letter& letter, long v) {
  return letter.value.exact() && letter.value.value() == v;
}

bool letter_is_identity(const Letter& letter) {
  switch (letter.base) {
    case Letter::Base::A:
      return letter.value.value() == 0;
    case Letter::Base::G:
      return is_exact_value(letter, 0);
    case Letter::Base::Z:
      return is_exact_value(letter, 1);
  }
  return false;
}

}  // namespace

std::string Letter::str() const {
  switch (base) {
    case Base::A: {
      std::string out = "a" + std::to_string(index);
      if (!(value.exact() && value.value() == 1))
        out += "^" + value.value().get_str();
      return out;
    }
    case Base::G: {
      if (value.exact()) {
        if (value.value() == 1) return "g";
        return "g^" + value.value().get_str();
      }
      return "g^[" + value.str() + "]";
    }
    case Base::Z:
      return "z[" + value.str() + "]";
  }
  return "";
}

Word Word::a(int index, long exponent) {
  return a(index, Dyadic::exact_int(exponent));
}

Word Word::a(int index, const Dyadic& exponent) {
  if (index < 1) throw Error::domain("generator index must be at least 1");
  if (!exponent.exact())
    throw Error::domain("exponents of finite-state generators must be exact integers");
  Word w;
  w.letters_.push_back({Letter::Base::A, index, exponent});
  return w;
}

Word Word::g(long exponent) { return g(Dyadic::exact_int(exponent)); }

Word Word::g(const Dyadic& exponent) {
  Word w;
  w.letters_.push_back({Letter::Base::G, 0, exponent});
  return w;
}

Word Word::z(const Dyadic& label) {
  if (!label.bit(0))
    throw Error::domain("normalizer labels must be odd 2-adic units");
  Word w;
  w.letters_.push_back({Letter::Base::Z, 0, label});
  return w;
}

Word Word::operator*(const Word& other) const {
  Word out = *this;
  out *= other;
  return out;
}

Word& Word::operator*=(const Word& other) {
  if (letters_.size() + other.letters_.size() > kMaxWordLetters)
    throw Error::domain("word exceeds the supported length");
  letters_.insert(letters_.end(), other.letters_.begin(), other.letters_.end());
  return *this;
}

Word Word::normalized() const {
  Word out;
  for (const Letter& next : letters_) {
    Letter current = next;
    while (true) {
      if (out.letters_.empty()) break;
      Letter& top = out.letters_.back();
      if (top.base != current.base) break;
      if (top.base == Letter::Base::A && top.index != current.index) break;
      if (top.base == Letter::Base::Z)
        current.value = top.value * current.value;
      else
        current.value = top.value + current.value;
      out.letters_.pop_back();
    }
    if (!letter_is_identity(current)) out.letters_.push_back(current);
  }
  return out;
}

std::string Word::str() const {
  if (letters_.empty()) return "1";
  std::string out;
  for (std::size_t i = 0; i < letters_.size(); ++i) {
    if (i) out += "*";
    out += letters_[i].str();
  }
  return out;
}

int SignProfile::at(int level) const {
  if (level < 1) throw Error::domain("sign levels start at 1");
  std::size_t n = static_cast<std::size_t>(level);
  if (n <= head.size()) return head[n - 1];
  return cycle[(n - head.size() - 1) % cycle.size()];
}

SignProfile SignProfile::times(const SignProfile& other) const {
  std::size_t h = std::max(head.size(), other.head.size());
  std::size_t l = std::lcm(cycle.size(), other.cycle.size());
  SignProfile out;
  out.head.reserve(h);
  out.cycle.reserve(l);
  for (std::size_t n = 1; n <= h; ++n)
    out.head.push_back(at(static_cast<int>(n)) * other.at(static_cast<int>(n)));
  for (std::size_t j = 0; j < l; ++j) {
    int n = static_cast<int>(h + 1 + j);
    out.cycle.push_back(at(n) * other.at(n));
  }
  return out;
}

bool SignProfile::all_minus() const {
  for (int s : head)
    if (s != -1) return false;
  for (int s : cycle)
    if (s != -1) return false;
  return true;
}

bool SignProfile::constant_after(int level) const {
  int horizon = static_cast<int>(head.size() + cycle.size());
  horizon = std::max(horizon, level + 1 + static_cast<int>(cycle.size()));
  int reference = at(level + 1);
  for (int n = level + 2; n <= horizon; ++n)
    if (at(n) != reference) return false;
  return true;
}

System::System(int rank, int precision) : rank_(rank), precision_(precision) {
  if (rank < kMinRank || rank > kMaxRank)
    throw Error::domain("rank must be between " + std::to_string(kMinRank) +
                        " and " + std::to_string(kMaxRank));
  if (precision < 8 || precision > Dyadic::kMaxPrecision)
    throw Error::precision("working precision must be between 8 and " +
                           std::to_string(Dyadic::kMaxPrecision));
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

// Token-level machinery shared by the word and portrait expression grammars.
class TokenStream {
 protected:
  explicit TokenStream(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& message) const {
    throw Error::parse(message + " (at position " + std::to_string(pos_ + 1) + ")");
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  // Consumes the keyword when it is next and not glued to more letters or
  // digits; otherwise leaves the stream untouched.
  bool keyword(const char* word) {
    skip_ws();
    std::size_t len = std::char_traits<char>::length(word);
    if (text_.compare(pos_, len, word) != 0) return false;
    std::size_t after = pos_ + len;
    if (after < text_.size() &&
        std::isalnum(static_cast<unsigned char>(text_[after])))
      return false;
    pos_ = after;
    return true;
  }

  mpz_class integer() {
    skip_ws();
    std::size_t start = pos_;
    if (pos_ < text_.size() && text_[pos_] == '-') ++pos_;
    std::size_t digits = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    if (pos_ == digits) {
      pos_ = start;
      fail("expected an integer");
    }
    return mpz_class(text_.substr(start, pos_ - start), 10);
  }

  Dyadic bracketed_dyadic() {
    expect('[');
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ']' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    std::string token = text_.substr(start, pos_ - start);
    Dyadic value = Dyadic::exact_int(0);
    try {
      value = Dyadic::parse(token);
    } catch (const Error& e) {
      pos_ = start;
      fail(e.what());
    }
    expect(']');
    return value;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

class Parser : TokenStream {
 public:
  Parser(const std::string& text, int rank, int precision)
      : TokenStream(text), rank_(rank), precision_(precision) {}

  Word run() {
    Word w = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return w;
  }

 private:
  Word atom() {
    char c = peek();
    if (c == '1') {
      ++pos_;
      return Word::one();
    }
    if (c == 'i' && keyword("id")) return Word::one();
    if (c == 's') {
      fail("the root swap letter appears only in portrait expressions");
    }
    if (c == '(') {
      ++pos_;
      Word w = expr();
      expect(')');
      return w;
    }
    if (c == 'a') {
      ++pos_;
      std::size_t at = pos_;
      mpz_class idx = integer();
      if (idx < 1 || idx > rank_) {
        pos_ = at;
        fail("generator index out of range 1.." + std::to_string(rank_));
      }
      return Word::a(static_cast<int>(idx.get_si()));
    }
    if (c == 'g') {
      ++pos_;
      return Word::g(1);
    }
    if (c == 'z') {
      ++pos_;
      std::size_t at = pos_;
      Dyadic label = bracketed_dyadic();
      if (!label.bit(0)) {
        pos_ = at;
        fail("normalizer label must be odd");
      }
      return Word::z(label);
    }
    fail("expected a letter, '1', 'id', or '('");
  }

  Word term() {
    Word base = atom();
    if (peek() != '^') return base;
    ++pos_;
    if (peek() == '[') {
      std::size_t at = pos_;
      Dyadic e = bracketed_dyadic();
      const auto& ls = base.letters();
      if (ls.size() != 1 || ls[0].base != Letter::Base::G) {
        pos_ = at;
        fail("2-adic exponents apply only to the odometer letter");
      }
      return Word::g(ls[0].value * e);
    }
    std::size_t at = pos_;
    mpz_class e = integer();
    return apply_exponent(base, e, at);
  }

  Word apply_exponent(const Word& base, const mpz_class& e, std::size_t at) {
    const auto& ls = base.letters();
    if (ls.size() == 1) {
      const Letter& l = ls[0];
      Dyadic de = Dyadic::exact_int(e);
      switch (l.base) {
        case Letter::Base::A:
          return Word::a(l.index, l.value * de);
        case Letter::Base::G:
          return Word::g(l.value * de);
        case Letter::Base::Z: {
          // Large exponents are powered as residues at the working precision;
          // small ones keep the label exact when possible.
          Dyadic k = l.value;
          if (k.exact() && mpz_cmpabs_ui(e.get_mpz_t(), 1 << 16) > 0)
            k = Dyadic::residue(k.value(), precision_);
          return Word::z(k.pow(de, precision_));
        }
      }
    }
    if (!e.fits_slong_p() || mpz_cmpabs_ui(e.get_mpz_t(), 1 << 20) > 0) {
      pos_ = at;
      fail("exponent too large for a compound word");
    }
    long n = e.get_si();
    Word factor = base;
    if (n < 0) {
      System sys(rank_, precision_);
      factor = sys.inverse(base);
      n = -n;
    }
    Word out;
    for (long i = 0; i < n; ++i) out *= factor;
    return out;
  }

  Word expr() {
    Word w = term();
    while (peek() == '*') {
      ++pos_;
      w *= term();
    }
    return w;
  }

  int rank_;
  int precision_;
};

// Same grammar evaluated directly over portraits at a fixed depth, which
// additionally admits the root swap atom `s`.
class PortraitParser : TokenStream {
 public:
  PortraitParser(const System& sys, const std::string& text, int depth)
      : TokenStream(text), sys_(sys), depth_(depth) {}

  Portrait run() {
    Portrait p = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return p;
  }

 private:
  Portrait atom(bool* plain_odometer) {
    char c = peek();
    if (c == '1') {
      ++pos_;
      return Portrait::identity(depth_);
    }
    if (c == 'i' && keyword("id")) return Portrait::identity(depth_);
    if (c == '(') {
      ++pos_;
      Portrait p = expr();
      expect(')');
      return p;
    }
    if (c == 's') {
      ++pos_;
      return Portrait::swap_root(depth_);
    }
    if (c == 'a') {
      ++pos_;
      std::size_t at = pos_;
      mpz_class idx = integer();
      if (idx < 1 || idx > sys_.rank()) {
        pos_ = at;
        fail("generator index out of range 1.." + std::to_string(sys_.rank()));
      }
      return sys_.portrait(Word::a(static_cast<int>(idx.get_si())), depth_);
    }
    if (c == 'g') {
      ++pos_;
      *plain_odometer = true;
      return Portrait::odometer(depth_);
    }
    if (c == 'z') {
      ++pos_;
      std::size_t at = pos_;
      Dyadic label = bracketed_dyadic();
      if (!label.bit(0)) {
        pos_ = at;
        fail("normalizer label must be odd");
      }
      return sys_.portrait(Word::z(label), depth_);
    }
    fail("expected a letter, '1', 'id', or '('");
  }

  Portrait power(Portrait base, mpz_class e) {
    if (e < 0) {
      base = base.inverse();
      e = -e;
    }
    Portrait acc = Portrait::identity(depth_);
    if (e == 0) return acc;
    long bits = static_cast<long>(mpz_sizeinbase(e.get_mpz_t(), 2));
    for (long b = bits - 1; b >= 0; --b) {
      acc = acc.compose(acc);
      if (mpz_tstbit(e.get_mpz_t(), static_cast<mp_bitcnt_t>(b)))
        acc = acc.compose(base);
    }
    return acc;
  }

  Portrait term() {
    bool plain_odometer = false;
    Portrait base = atom(&plain_odometer);
    if (peek() != '^') return base;
    ++pos_;
    if (peek() == '[') {
      std::size_t at = pos_;
      Dyadic e = bracketed_dyadic();
      if (!plain_odometer) {
        pos_ = at;
        fail("2-adic exponents apply only to the odometer letter");
      }
      return Portrait::odometer_power(e, depth_);
    }
    return power(base, integer());
  }

  Portrait expr() {
    Portrait p = term();
    while (peek() == '*') {
      ++pos_;
      p = p.compose(term());
    }
    return p;
  }

  const System& sys_;
  int depth_;
};

}  // namespace

Word System::parse(const std::string& text) const {
  return Parser(text, rank_, precision_).run();
}

Portrait System::parse_portrait(const std::string& text, int depth) const {
  if (depth < 1 || depth > Portrait::kMaxDepth) {
    throw Error::depth("portrait depth must be between 1 and " +
                       std::to_string(Portrait::kMaxDepth));
  }
  return PortraitParser(*this, text, depth).run();
}

Word System::inverse(const Word& word) const {
  Word out;
  const auto& ls = word.letters();
  for (auto it = ls.rbegin(); it != ls.rend(); ++it) {
    switch (it->base) {
      case Letter::Base::A:
        out *= Word::a(it->index, -it->value);
        break;
      case Letter::Base::G:
        out *= Word::g(-it->value);
        break;
      case Letter::Base::Z: {
        const Dyadic& k = it->value;
        out *= Word::z(k.inverse(k.exact() ? precision_ : k.precision()));
        break;
      }
    }
  }
  return out;
}

Word System::pow(const Word& word, long exponent) const {
  if (exponent == 0) return Word::one();
  Word factor = exponent < 0 ? inverse(word) : word;
  unsigned long n = exponent < 0 ? -static_cast<unsigned long>(exponent)
                                 : static_cast<unsigned long>(exponent);
  Word out;
  for (unsigned long i = 0; i < n; ++i) out *= factor;
  return out;
}

bool System::letter_swapped(const Letter& letter) const {
  switch (letter.base) {
    case Letter::Base::A:
      return letter.index == 1 && letter.value.bit(0);
    case Letter::Base::G:
      return letter.value.bit(0);
    case Letter::Base::Z:
      return false;
  }
  return false;
}

bool System::root_swapped(const Word& word) const {
  bool swapped = false;
  for (const Letter& l : word.letters()) swapped ^= letter_swapped(l);
  return swapped;
}

Word System::letter_section(const Letter& letter, int side) const {
  switch (letter.base) {
    case Letter::Base::A: {
      if (letter.index > rank_)
        throw Error::domain("generator index out of range 1.." + std::to_string(rank_));
      const Dyadic& e = letter.value;
      if (letter.index >= 2)
        return side == 0 ? Word::a(letter.index - 1, e) : Word::one();
      Dyadic one = Dyadic::exact_int(1);
      if (!e.bit(0)) {
        mpz_class half = e.value() / 2;
        if (half == 0) return Word::one();
        return Word::a(rank_, Dyadic::exact_int(half));
      }
      Dyadic f = side == 0 ? (e + one).halve() : (e - one).halve();
      if (f.value() == 0) return Word::one();
      return Word::a(rank_, f);
    }
    case Letter::Base::G: {
      const Dyadic& m = letter.value;
      Dyadic one = Dyadic::exact_int(1);
      Dyadic half = m.bit(0) ? (side == 0 ? (m + one).halve() : (m - one).halve())
                             : m.halve();
      return Word::g(half);
    }
    case Letter::Base::Z: {
      if (side == 0) return Word::z(letter.value);
      return Word::g(letter.value.ell()) * Word::z(letter.value);
    }
  }
  return Word::one();
}

Word System::section(const Word& word, int side) const {
  if (side != 0 && side != 1) throw Error::domain("section side must be 0 or 1");
  int b = side;
  Word out;
  for (const Letter& l : word.letters()) {
    out *= letter_section(l, b);
    if (letter_swapped(l)) b ^= 1;
  }
  return out.normalized();
}

Portrait System::portrait(const Letter& letter, int depth) const {
  if (depth == 0) return Portrait::identity(0);
  if (letter.base == Letter::Base::G)
    return Portrait::odometer_power(letter.value, depth);

  std::string key = letter.str() + "@" + std::to_string(depth);
  auto it = portrait_cache_.find(key);
  if (it != portrait_cache_.end()) return it->second;

  Portrait result = Portrait::identity(depth);
  if (letter.base == Letter::Base::A) {
    if (letter.index > rank_)
      throw Error::domain("generator index out of range 1.." + std::to_string(rank_));
    bool swapped = letter_swapped(letter);
    Portrait left = portrait(letter_section(letter, 0), depth - 1);
    Portrait right = portrait(letter_section(letter, 1), depth - 1);
    result = Portrait::assemble(left, right, swapped);
  } else if (depth > 1) {  // Z below the first level
    Portrait left = portrait(letter, depth - 1);
    Portrait right =
        Portrait::odometer_power(letter.value.ell(), depth - 1).compose(left);
    result = Portrait::assemble(left, right, false);
  }
  auto ins = portrait_cache_.emplace(std::move(key), std::move(result));
  return ins.first->second;
}

Portrait System::portrait(const Word& word, int depth) const {
  Word norm = word.normalized();
  Portrait out = Portrait::identity(depth);
  for (const Letter& l : norm.letters()) out = out.compose(portrait(l, depth));
  return out;
}

SignProfile System::letter_profile(const Letter& letter) const {
  switch (letter.base) {
    case Letter::Base::A: {
      if (letter.index > rank_)
        throw Error::domain("generator index out of range 1.." + std::to_string(rank_));
      if (!letter.value.bit(0)) return SignProfile::constant(1);
      SignProfile p;
      p.cycle.assign(rank_, 1);
      p.cycle[letter.index - 1] = -1;
      return p;
    }
    case Letter::Base::G:
      return SignProfile::constant(letter.value.bit(0) ? -1 : 1);
    case Letter::Base::Z: {
      if (!letter.value.exact() && letter.value.precision() < 2)
        throw Error::precision("normalizer label needs at least 2 bits for signs");
      if (!letter.value.bit(1)) return SignProfile::constant(1);
      SignProfile p;
      p.head = {1};
      p.cycle = {-1};
      return p;
    }
  }
  return SignProfile::constant(1);
}

SignProfile System::sign_profile(const Word& word) const {
  SignProfile out = SignProfile::constant(1);
  for (const Letter& l : word.letters()) out = out.times(letter_profile(l));
  return out;
}

bool System::is_odometer(const Word& word) const {
  return sign_profile(word).all_minus();
}

std::optional<std::pair<Dyadic, Dyadic>> System::normal_form_ngamma(
    const Word& word) const {
  Dyadic m = Dyadic::exact_int(0);
  Dyadic k = Dyadic::exact_int(1);
  Word norm = word.normalized();
  for (const Letter& l : norm.letters()) {
    switch (l.base) {
      case Letter::Base::A:
        return std::nullopt;
      case Letter::Base::G:
        // z_k g^t = g^{kt} z_k, so a trailing odometer power picks up k.
        m = m + k * l.value;
        break;
      case Letter::Base::Z:
        k = k * l.value;
        break;
    }
  }
  return std::make_pair(m, k);
}

Dyadic System::coset_label(const Word& word) const {
  Dyadic k = Dyadic::exact_int(1);
  for (const Letter& l : word.letters())
    if (l.base == Letter::Base::Z) k = k * l.value;
  return k;
}

std::uint64_t System::a_length_upper(const Word& word) const {
  Word norm = word.normalized();
  mpz_class sum = 0;
  for (const Letter& l : norm.letters()) {
    if (l.base != Letter::Base::A) continue;
    if (!l.value.exact())
      throw Error::domain("generator length needs exact generator exponents");
    sum += abs(l.value.value());
  }
  if (!sum.fits_ulong_p())
    throw Error::domain("generator length exceeds the representable range");
  return static_cast<std::uint64_t>(sum.get_ui());
}

namespace {

bool residue_is_pm1(const Dyadic& k) {
  if (k.exact()) return false;
  mpz_class top = (mpz_class(1) << k.precision()) - 1;
  return k.value() == 1 || k.value() == top;
}

}  // namespace

Membership System::membership(const Word& word, int probe_depth) const {
  Word norm = word.normalized();
  auto nf = normal_form_ngamma(norm);
  if (nf) {
    auto [m, k] = *nf;
    if (k.exact() && (k.value() == 1 || k.value() == -1))
      return {Membership::Verdict::No, m, k, 0,
              "label is " + k.value().get_str() +
                  ", outside the settled normalizer family"};
    if (residue_is_pm1(k))
      return {Membership::Verdict::Unknown, m, k, 0,
              "label indistinguishable from +-1 at precision " +
                  std::to_string(k.precision())};
    return {Membership::Verdict::Yes, m, k, 0, "exact normal form g^m z_k"};
  }

  SignProfile profile = sign_profile(norm);
  if (!profile.constant_after(1))
    return {Membership::Verdict::No, std::nullopt, std::nullopt, 0,
            "sign sequence is not constant from level 2 on"};

  if (probe_depth < 1 || probe_depth > Portrait::kMaxDepth)
    throw Error::depth("probe depth out of range");
  Portrait pw = portrait(norm, probe_depth);
  Portrait conj =
      pw.compose(Portrait::odometer(probe_depth)).compose(pw.inverse());
  auto k_hat = conj.odometer_exponent();
  if (!k_hat)
    return {Membership::Verdict::No, std::nullopt, std::nullopt, probe_depth,
            "conjugating the odometer does not give an odometer power at depth " +
                std::to_string(probe_depth)};
  Portrait residual = pw.compose(portrait(Word::z(*k_hat), probe_depth).inverse());
  auto m_hat = residual.odometer_exponent();
  if (!m_hat)
    return {Membership::Verdict::No, std::nullopt, std::nullopt, probe_depth,
            "stripping the normalizer part does not leave an odometer power "
            "at depth " + std::to_string(probe_depth)};
  return {Membership::Verdict::Unknown, m_hat, k_hat, probe_depth,
          "consistent with normal form g^m z_k to depth " +
              std::to_string(probe_depth)};
}

}  // namespace settled
