#include "verify.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "dense.hpp"
#include "dynamics.hpp"
#include "errors.hpp"

namespace settled {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t fnv1a(const std::string& text, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

long v2_long(long v) {
  if (v == 0) throw Error::internal("2-adic valuation of zero requested");
  return static_cast<long>(__builtin_ctzl(static_cast<unsigned long>(v < 0 ? -v : v)));
}

std::string str_of(long v) { return std::to_string(v); }

// Records one case per `run` call; any exception escaping the body becomes a
// failing case carrying the error text.
class CaseLog {
 public:
  explicit CaseLog(SuiteResult* out) : out_(out) {}

  template <typename F>
  void run(const std::string& name, F&& body) {
    CaseResult c;
    c.name = name;
    try {
      body(c);
    } catch (const std::exception& e) {
      c.pass = false;
      if (!c.detail.empty()) c.detail += "; ";
      c.detail += std::string("error: ") + e.what();
    }
    out_->cases.push_back(std::move(c));
  }

 private:
  SuiteResult* out_;
};

void fail(CaseResult& c, const std::string& payload) {
  c.pass = false;
  if (!c.detail.empty()) c.detail += "; ";
  c.detail += payload;
}

// Random element of the full word alphabet; mirrors the distribution used by
// the library's own randomized tests.
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

Word normalizer_word(long m, long k) {
  Word w;
  if (m != 0) w *= Word::g(Dyadic::exact_int(m));
  w *= Word::z(Dyadic::exact_int(k));
  return w.normalized();
}

// The diagonal embedding u -> (u, u) of a finite-family word, letter by
// letter: (a_r, a_r) = a_1^2 and (a_j, a_j) = a_{j+1} a_1 a_{j+1} a_1^-1 for
// j < r.
Word diagonal_word(const Word& w, int rank) {
  Word out;
  Word norm = w.normalized();
  for (const Letter& l : norm.letters()) {
    if (l.base != Letter::Base::A) {
      throw Error::internal("diagonal embedding applied to a non-generator letter");
    }
    if (!l.value.exact() || !l.value.value().fits_slong_p()) {
      throw Error::internal("diagonal embedding needs small exact exponents");
    }
    long e = l.value.value().get_si();
    int sign = e < 0 ? -1 : 1;
    long count = e < 0 ? -e : e;
    for (long c = 0; c < count; ++c) {
      if (l.index == rank) {
        out *= Word::a(1, 2 * sign);
      } else if (sign > 0) {
        out *= Word::a(l.index + 1) * Word::a(1) * Word::a(l.index + 1) *
               Word::a(1, -1);
      } else {
        out *= Word::a(1) * Word::a(l.index + 1, -1) * Word::a(1, -1) *
               Word::a(l.index + 1, -1);
      }
    }
  }
  return out.normalized();
}

}  // namespace

int SuiteResult::failures() const {
  int n = 0;
  for (const CaseResult& c : cases) {
    if (!c.pass) ++n;
  }
  return n;
}

Harness::Harness(HarnessOptions options) : options_(std::move(options)) {
  if (options_.rank < System::kMinRank || options_.rank > System::kMaxRank) {
    throw Error::domain("harness rank out of range");
  }
  if (options_.max_level < 0 || options_.max_level > Portrait::kMaxDepth) {
    throw Error::domain("harness level cap out of range");
  }
  grid_ = {
      {"conjugation",
       {{"labels", {3, 5, 7, 11, 17}}, {"random_labels", {5}}, {"max_level", {14}}}},
      {"signs",
       {{"labels", {3, 5, 7, 9, 11, 13, 17, 33}},
        {"max_level", {16}},
        {"random_words", {500}},
        {"random_max_level", {14}},
        {"batch", {50}}}},
      {"triviality",
       {{"labels", {5, 9, 17, 33}},
        {"exponents", {2, 4, 16}},
        {"square_labels", {3, 5, 9, 17, 33}},
        {"square_max_level", {12}}}},
      {"classification",
       {{"labels", {3, 5, 7, 9, 11, 17}},
        {"exponents", {0, 1, 2, 4, 8}},
        {"random_exponents", {1}},
        {"max_level", {14}},
        {"direct_max_level", {8}}}},
      {"conjugacy", {{"max_level", {12}}}},
      {"generators",
       {{"ranks", {2, 3, 4}},
        {"conjugacy_max_level", {10}},
        {"witness_depth", {12}},
        {"constructed_max_level", {8}}}},
      {"blocks",
       {{"ranks", {2, 3, 4}},
        {"labels", {3, 5, 7}},
        {"exponents", {0, 1, 2}},
        {"depth", {12}},
        {"ratio_level", {14}}}},
      {"density",
       {{"words", {100}}, {"max_level", {8}}, {"subadditivity_words", {20}}}},
  };
  if (options_.grid_json.empty()) return;

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(options_.grid_json);
  } catch (const nlohmann::json::exception& e) {
    throw Error::parse(std::string("grid override is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error::parse("grid override must be a JSON object");
  for (const auto& [suite, knobs] : doc.items()) {
    auto sit = std::find_if(grid_.begin(), grid_.end(),
                            [&](const auto& p) { return p.first == suite; });
    if (sit == grid_.end()) {
      throw Error::domain("grid override names an unknown suite: " + suite);
    }
    if (!knobs.is_object()) {
      throw Error::parse("grid override for suite '" + suite + "' must be an object");
    }
    for (const auto& [name, value] : knobs.items()) {
      auto kit = std::find_if(sit->second.begin(), sit->second.end(),
                              [&](const auto& p) { return p.first == name; });
      if (kit == sit->second.end()) {
        throw Error::domain("grid override names an unknown knob: " + suite + "." + name);
      }
      std::vector<long> list;
      if (value.is_number_integer()) {
        list.push_back(value.get<long>());
      } else if (value.is_array()) {
        for (const auto& item : value) {
          if (!item.is_number_integer()) {
            throw Error::parse("grid knob " + suite + "." + name +
                               " must hold integers");
          }
          list.push_back(item.get<long>());
        }
      } else {
        throw Error::parse("grid knob " + suite + "." + name +
                           " must be an integer or an integer array");
      }
      kit->second = std::move(list);
    }
  }
}

const std::vector<std::string>& Harness::suite_names() {
  static const std::vector<std::string> names = {
      "conjugation", "signs",      "triviality", "classification",
      "conjugacy",   "generators", "blocks",     "density",
  };
  return names;
}

std::vector<long> Harness::knob_list(const std::string& suite,
                                     const std::string& knob) const {
  for (const auto& [name, knobs] : grid_) {
    if (name != suite) continue;
    for (const auto& [kname, list] : knobs) {
      if (kname == knob) return list;
    }
  }
  throw Error::internal("unknown grid knob " + suite + "." + knob);
}

long Harness::knob(const std::string& suite, const std::string& knob_name) const {
  std::vector<long> list = knob_list(suite, knob_name);
  if (list.size() != 1) {
    throw Error::internal("grid knob " + suite + "." + knob_name +
                          " is not a single value");
  }
  return list[0];
}

int Harness::cap(const std::string& suite, const std::string& knob_name) const {
  long value = knob(suite, knob_name);
  if (options_.max_level > 0 && value > options_.max_level) {
    value = options_.max_level;
  }
  return static_cast<int>(value);
}

std::string Harness::grid_text(const std::string& suite) const {
  for (const auto& [name, knobs] : grid_) {
    if (name != suite) continue;
    std::ostringstream out;
    out << name << ":";
    for (const auto& [kname, list] : knobs) {
      out << " " << kname << "=";
      if (list.size() == 1) {
        out << list[0];
      } else {
        out << "[";
        for (std::size_t i = 0; i < list.size(); ++i) {
          if (i) out << ",";
          out << list[i];
        }
        out << "]";
      }
    }
    return out.str();
  }
  throw Error::domain("unknown suite: " + suite);
}

std::uint64_t Harness::grid_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, knobs] : grid_) {
    h = fnv1a(grid_text(name) + "\n", h);
  }
  return h;
}

std::uint64_t Harness::suite_seed(const std::string& suite) const {
  return options_.seed ^ fnv1a(suite);
}

SuiteResult Harness::run(const std::string& suite) const {
  if (suite == "conjugation") return suite_conjugation();
  if (suite == "signs") return suite_signs();
  if (suite == "triviality") return suite_triviality();
  if (suite == "classification") return suite_classification();
  if (suite == "conjugacy") return suite_conjugacy();
  if (suite == "generators") return suite_generators();
  if (suite == "blocks") return suite_blocks();
  if (suite == "density") return suite_density();
  throw Error::domain("unknown suite: " + suite);
}

std::vector<SuiteResult> Harness::run_all() const {
  std::vector<SuiteResult> out;
  for (const std::string& name : suite_names()) out.push_back(run(name));
  return out;
}

// Portrait equality of z_k g z_k^-1 and g^k at every level of the grid.
SuiteResult Harness::suite_conjugation() const {
  SuiteResult result;
  result.suite = "conjugation";
  result.grid = grid_text(result.suite);
  result.seed = suite_seed(result.suite);
  Clock::time_point start = Clock::now();

  System sys(options_.rank, std::max(options_.precision, 48));
  int top = cap("conjugation", "max_level");
  std::mt19937_64 rng(result.seed);

  std::vector<std::pair<long, bool>> labels;
  for (long k : knob_list("conjugation", "labels")) labels.push_back({k, false});
  long extra = knob("conjugation", "random_labels");
  for (long i = 0; i < extra; ++i) {
    long k;
    do {
      k = static_cast<long>(rng() & 0xFFFF) | 1;
    } while (k == 1);
    labels.push_back({k, true});
  }

  CaseLog log(&result);
  log.run("k=1", [](CaseResult& c) {
    c.detail = "excluded: label 1 names the identity normalizer";
  });
  for (const auto& [k, random] : labels) {
    std::string name = "k=" + str_of(k) + (random ? " (random)" : "");
    log.run(name, [&](CaseResult& c) {
      Word zk = Word::z(Dyadic::exact_int(k));
      Word lhs = zk * Word::g(1) * sys.inverse(zk);
      Word rhs = Word::g(Dyadic::exact_int(k));
      for (int n = 1; n <= top; ++n) {
        if (!(sys.portrait(lhs, n) == sys.portrait(rhs, n))) {
          fail(c, "portrait mismatch at level " + str_of(n));
          return;
        }
      }
    });
  }

  result.seconds = seconds_since(start);
  return result;
}

// Symbolic sign profiles against portrait signs: the fixed-label patterns for
// both valuation cases, then random words of the full alphabet.
SuiteResult Harness::suite_signs() const {
  SuiteResult result;
  result.suite = "signs";
  result.grid = grid_text(result.suite);
  result.seed = suite_seed(result.suite);
  Clock::time_point start = Clock::now();

  System sys(options_.rank, std::max(options_.precision, 48));
  int top = cap("signs", "max_level");
  CaseLog log(&result);

  for (long k : knob_list("signs", "labels")) {
    log.run("k=" + str_of(k), [&](CaseResult& c) {
      long v = v2_long((k - 1) / 2);
      Word zk = Word::z(Dyadic::exact_int(k));
      SignProfile prof = sys.sign_profile(zk);
      Portrait port = sys.portrait(zk, top);
      for (int n = 1; n <= top; ++n) {
        int symbolic = prof.at(n);
        int direct = port.sign_at(n);
        if (symbolic != direct) {
          fail(c, "level " + str_of(n) + ": symbolic sign " + str_of(symbolic) +
                      " vs portrait sign " + str_of(direct));
          return;
        }
        int expected = (v >= 1) ? 1 : (n == 1 ? 1 : -1);
        if (symbolic != expected) {
          fail(c, "level " + str_of(n) + ": sign " + str_of(symbolic) +
                      " breaks the half-label valuation pattern (v=" +
                      str_of(v) + ")");
          return;
        }
      }
    });
  }

  long words = knob("signs", "random_words");
  int wtop = cap("signs", "random_max_level");
  long batch = knob("signs", "batch");
  std::mt19937_64 rng(result.seed);
  for (long first = 1; first <= words; first += batch) {
    long last = std::min(words, first + batch - 1);
    log.run("random words " + str_of(first) + "-" + str_of(last),
            [&](CaseResult& c) {
              for (long t = first; t <= last; ++t) {
                Word w = random_word(sys, rng, 6);
                SignProfile prof = sys.sign_profile(w);
                Portrait port = sys.portrait(w, wtop);
                for (int n = 1; n <= wtop; ++n) {
                  if (prof.at(n) != port.sign_at(n)) {
                    fail(c, "word " + w.str() + " level " + str_of(n) +
                                ": symbolic " + str_of(prof.at(n)) +
                                " vs portrait " + str_of(port.sign_at(n)));
                    return;
                  }
                }
              }
            });
  }

  result.seconds = seconds_since(start);
  return result;
}

// Shallow triviality: z_k restricts to the identity exactly through level
// v2((k-1)/2) + 1, g^m z_k through v2(m) when v2(m) <= v2((k-1)/2), and the
// label square law z_k * z_k = z_{k^2} holds on portraits.
SuiteResult Harness::suite_triviality() const {
  SuiteResult result;
  result.suite = "triviality";
  result.grid = grid_text(result.suite);
  result.seed = suite_seed(result.suite);
  Clock::time_point start = Clock::now();

  System sys(options_.rank, std::max(options_.precision, 48));
  CaseLog log(&result);

  std::vector<long> labels = knob_list("triviality", "labels");
  std::vector<long> exponents = knob_list("triviality", "exponents");

  for (long k : labels) {
    long v = v2_long((k - 1) / 2);
    log.run("k=" + str_of(k), [&](CaseResult& c) {
      Word zk = Word::z(Dyadic::exact_int(k));
      for (int n = 1; n <= static_cast<int>(v) + 1; ++n) {
        if (!sys.portrait(zk, n).is_identity()) {
          fail(c, "not the identity at level " + str_of(n) +
                      " despite v=" + str_of(v));
          return;
        }
      }
      if (sys.portrait(zk, static_cast<int>(v) + 2).is_identity()) {
        fail(c, "still the identity at level " + str_of(v + 2) +
                    "; triviality should stop at " + str_of(v + 1));
      }
    });
    for (long m : exponents) {
      long vm = v2_long(m);
      if (vm > v) continue;
      log.run("k=" + str_of(k) + " m=" + str_of(m), [&](CaseResult& c) {
        Word w = normalizer_word(m, k);
        for (int n = 1; n <= static_cast<int>(vm); ++n) {
          if (!sys.portrait(w, n).is_identity()) {
            fail(c, "not the identity at level " + str_of(n) +
                        " despite v2(m)=" + str_of(vm));
            return;
          }
        }
        if (sys.portrait(w, static_cast<int>(vm) + 1).is_identity()) {
          fail(c, "still the identity at level " + str_of(vm + 1));
        }
      });
    }
  }

  int sqtop = cap("triviality", "square_max_level");
  for (long k : knob_list("triviality", "square_labels")) {
    log.run("square law k=" + str_of(k), [&](CaseResult& c) {
      Word lhs = Word::z(Dyadic::exact_int(k)) * Word::z(Dyadic::exact_int(k));
      Word rhs = Word::z(Dyadic::exact_int(k * k));
      for (int n = 1; n <= sqtop; ++n) {
        if (!(sys.portrait(lhs, n) == sys.portrait(rhs, n))) {
          fail(c, "z[k]^2 and z[k^2] differ at level " + str_of(n));
          return;
        }
      }
    });
  }

  result.seconds = seconds_since(start);
  return result;
}

// Exact stable-vertex counts against the label/exponent case split, the
// uniform deficit bound, and the independent direct-mode recount.
SuiteResult Harness::suite_classification() const {
  SuiteResult result;
  result.suite = "classification";
  result.grid = grid_text(result.suite);
  result.seed = suite_seed(result.suite);
  Clock::time_point start = Clock::now();

  System sys(options_.rank, std::max(options_.precision, 48));
  Dynamics dyn(sys);
  int top = cap("classification", "max_level");
  std::mt19937_64 rng(result.seed);
  CaseLog log(&result);
  const std::uint64_t one = 1;

  std::vector<long> labels = knob_list("classification", "labels");
  std::vector<long> base_exponents = knob_list("classification", "exponents");
  long randoms = knob("classification", "random_exponents");

  for (long k : labels) {
    std::vector<std::pair<long, bool>> exponents;
    for (long m : base_exponents) exponents.push_back({m, false});
    for (long i = 0; i < randoms; ++i) {
      exponents.push_back({static_cast<long>(rng() % 512), true});
    }
    for (const auto& [m, random] : exponents) {
      std::string name = "k=" + str_of(k) + " m=" + str_of(m) +
                         (random ? " (random)" : "");
      log.run(name, [&, k = k, m = m](CaseResult& c) {
        long v_l = v2_long((k - 1) / 2);
        bool m_zero = (m == 0);
        long vm = m_zero ? 0 : v2_long(m);
        Word w = normalizer_word(m, k);
        std::vector<std::uint64_t> s = dyn.stable_counts(w, top);

        for (int n = 0; n <= top; ++n) {
          if (s[n] > (one << n)) {
            fail(c, "count exceeds the level size at level " + str_of(n));
            return;
          }
        }

        if (v_l >= 1 && !m_zero && vm <= v_l) {
          for (int n = static_cast<int>(vm); n <= top; ++n) {
            if (s[n] != (one << n)) {
              fail(c, "expected full stability 2^n from level " + str_of(vm) +
                          ", got " + str_of(static_cast<long>(s[n])) +
                          " at level " + str_of(n));
              return;
            }
          }
        } else if (v_l >= 1) {
          for (int n = static_cast<int>(v_l); n <= top; ++n) {
            if (s[n] != (one << n) - (one << v_l)) {
              fail(c, "expected deficit 2^" + str_of(v_l) + " at level " +
                          str_of(n) + ", got " +
                          str_of(static_cast<long>((one << n) - s[n])));
              return;
            }
          }
        } else if (!m_zero && vm == 0) {
          long vk = v2_long(k + 1);
          for (int n = static_cast<int>(vk); n <= top; ++n) {
            if (s[n] != (one << n)) {
              fail(c, "expected full stability from level " + str_of(vk) +
                          ", got deficit at level " + str_of(n));
              return;
            }
          }
        } else {
          long vk = v2_long(k + 1);
          for (int n = static_cast<int>(vk); n <= top; ++n) {
            if ((one << n) - s[n] > (one << vk)) {
              fail(c, "deficit exceeds 2^" + str_of(vk) + " at level " +
                          str_of(n));
              return;
            }
          }
          if (k == 3 && m_zero) {
            for (int n = 2; n <= top; ++n) {
              if (s[n] != (one << n) - 4) {
                fail(c, "label 3 deficit is not exactly 4 at level " + str_of(n));
                return;
              }
            }
          }
        }

        long nu = sys.coset_label(w).nu();
        for (int n = static_cast<int>(nu) + 1; n <= top; ++n) {
          if ((one << n) - s[n] > (one << (nu + 1))) {
            fail(c, "uniform deficit bound 2^" + str_of(nu + 1) +
                        " violated at level " + str_of(n));
            return;
          }
        }
      });
    }
  }

  log.run("direct-mode recount", [&](CaseResult& c) {
    int dtop = cap("classification", "direct_max_level");
    const std::pair<long, long> picks[] = {{3, 0}, {5, 0}, {5, 1}, {9, 4}};
    for (const auto& [k, m] : picks) {
      Word w = normalizer_word(m, k);
      if (dyn.stable_counts_direct(w, dtop) != dyn.stable_counts(w, dtop)) {
        fail(c, "direct recount disagrees for k=" + str_of(k) +
                    " m=" + str_of(m));
        return;
      }
    }
  });

  result.seconds = seconds_since(start);
  return result;
}

// Conjugacy of g^m z_k within finite levels on the valuation patterns, plus a
// separation sanity check.
SuiteResult Harness::suite_conjugacy() const {
  SuiteResult result;
  result.suite = "conjugacy";
  result.grid = grid_text(result.suite);
  result.seed = suite_seed(result.suite);
  Clock::time_point start = Clock::now();

  System sys(options_.rank, std::max(options_.precision, 48));
  int top = cap("conjugacy", "max_level");
  CaseLog log(&result);

  auto conjugate_through = [&](const Word& x, const Word& y, CaseResult& c,
                               bool expect_conjugate) {
    for (int n = 1; n <= top; ++n) {
      bool got = sys.portrait(x, n).conjugate_to(sys.portrait(y, n));
      if (got != expect_conjugate) {
        fail(c, std::string(expect_conjugate ? "not conjugate" : "conjugate") +
                    " at level " + str_of(n));
        return;
      }
    }
  };

  struct SameValuation { long k, m, s; };
  const SameValuation same_val[] = {
      {9, 2, 6}, {9, 1, 3}, {9, 4, 12}, {5, 1, 7},
      {5, 2, 6}, {17, 8, 24}, {17, 2, 14}, {33, 4, 20},
  };
  for (const SameValuation& p : same_val) {
    log.run("k=" + str_of(p.k) + ": g^" + str_of(p.m) + " ~ g^" + str_of(p.s),
            [&](CaseResult& c) {
              conjugate_through(normalizer_word(p.m, p.k),
                                normalizer_word(p.s, p.k), c, true);
            });
  }

  struct ToPlain { long k, m; };
  const ToPlain to_plain[] = {{5, 4}, {5, 8}, {5, 12}, {9, 8},
                              {9, 16}, {17, 16}, {33, 32}};
  for (const ToPlain& p : to_plain) {
    log.run("k=" + str_of(p.k) + ": g^" + str_of(p.m) + " ~ plain",
            [&](CaseResult& c) {
              conjugate_through(normalizer_word(p.m, p.k),
                                normalizer_word(0, p.k), c, true);
            });
  }

  const std::pair<long, long> odd_pairs[] = {{1, 3}, {1, 5}, {3, 7}};
  for (long k : {3L, 7L, 11L}) {
    for (const auto& [m, s] : odd_pairs) {
      log.run("k=" + str_of(k) + ": odd g^" + str_of(m) + " ~ g^" + str_of(s),
              [&](CaseResult& c) {
                conjugate_through(normalizer_word(m, k), normalizer_word(s, k),
                                  c, true);
              });
    }
  }

  log.run("separated: z[5] vs g*z[5]", [&](CaseResult& c) {
    conjugate_through(normalizer_word(0, 5), normalizer_word(1, 5), c, false);
  });

  result.seconds = seconds_since(start);
  return result;
}

// The odometer against the finite family: level conjugacy to the full
// product, the diagonal witnesses, and the recursively constructed conjugator.
SuiteResult Harness::suite_generators() const {
  SuiteResult result;
  result.suite = "generators";
  result.grid = grid_text(result.suite);
  result.seed = suite_seed(result.suite);
  Clock::time_point start = Clock::now();

  CaseLog log(&result);
  int conj_top = cap("generators", "conjugacy_max_level");
  int witness_depth = cap("generators", "witness_depth");
  int constructed_top = cap("generators", "constructed_max_level");

  for (long rank : knob_list("generators", "ranks")) {
    int r = static_cast<int>(rank);
    System sys(r, std::max(options_.precision, 48));
    Word product;
    for (int i = 1; i <= r; ++i) product *= Word::a(i);

    log.run("r=" + str_of(r) + ": odometer conjugate to the full product",
            [&](CaseResult& c) {
              for (int n = 1; n <= conj_top; ++n) {
                if (!sys.portrait(Word::g(1), n)
                         .conjugate_to(sys.portrait(product, n))) {
                  fail(c, "not conjugate at level " + str_of(n));
                  return;
                }
              }
            });

    log.run("r=" + str_of(r) + ": diagonal witnesses", [&](CaseResult& c) {
      int d = witness_depth;
      Portrait ar = sys.portrait(Word::a(r), d - 1);
      if (!(sys.portrait(Word::a(1, 2), d) == Portrait::assemble(ar, ar, false))) {
        fail(c, "a1^2 is not the diagonal pair of a" + str_of(r));
      }
      for (int i = 2; i <= r; ++i) {
        Word w = Word::a(i) * Word::a(1) * Word::a(i) * Word::a(1, -1);
        Portrait prev = sys.portrait(Word::a(i - 1), d - 1);
        if (!(sys.portrait(w, d) == Portrait::assemble(prev, prev, false))) {
          fail(c, "a" + str_of(i) + " a1 a" + str_of(i) +
                      " a1^-1 is not the diagonal pair of a" + str_of(i - 1));
        }
      }
    });

    log.run("r=" + str_of(r) + ": constructed conjugator", [&](CaseResult& c) {
      Word gn;  // level-1 conjugator: the identity
      for (int n = 1; n <= constructed_top; ++n) {
        if (n > 1) gn = (diagonal_word(gn, r) * Word::a(1, -1)).normalized();
        Word conj = gn * product * sys.inverse(gn);
        if (!(sys.portrait(conj, n) == sys.portrait(Word::g(1), n))) {
          fail(c, "conjugator fails at level " + str_of(n) + " (word length " +
                      str_of(static_cast<long>(gn.size())) + ")");
          return;
        }
      }
      c.detail = "verified through level " + str_of(constructed_top);
    });
  }

  result.seconds = seconds_since(start);
  return result;
}

// Stable-block verdicts, the descendant closed forms with their label square
// law, chain-estimate soundness, the all-ones floor, and the settle ratio.
SuiteResult Harness::suite_blocks() const {
  SuiteResult result;
  result.suite = "blocks";
  result.grid = grid_text(result.suite);
  result.seed = suite_seed(result.suite);
  Clock::time_point start = Clock::now();

  CaseLog log(&result);
  int depth = cap("blocks", "depth");
  const std::uint64_t one = 1;

  for (long rank : knob_list("blocks", "ranks")) {
    int r = static_cast<int>(rank);
    System sys(r, std::max(options_.precision, 48));
    Dynamics dyn(sys);
    for (int i = 1; i <= r; ++i) {
      for (long k : knob_list("blocks", "labels")) {
        for (long m : knob_list("blocks", "exponents")) {
          std::string name = "r=" + str_of(r) + " i=" + str_of(i) +
                             " k=" + str_of(k) + " m=" + str_of(m);
          log.run(name, [&, i = i, k = k, m = m](CaseResult& c) {
            Word w = (Word::a(i) * normalizer_word(m, k)).normalized();

            BlockReport report = dyn.analyze_blocks(w, depth);
            if (report.stable_block != Membership::Verdict::Yes) {
              fail(c, "stable-block verdict is not positive (first failure at level " +
                          str_of(report.first_failure) + ")");
            }

            // Walk the single non-family descendant chain and match each step
            // against the closed forms, label square law included.
            long cur_i = i;
            mpz_class cur_m = m;
            mpz_class cur_k = k;
            Word cur = w;
            for (int step = 0; step < depth; ++step) {
              mpz_class ell = (cur_k - 1) / 2;
              bool m_odd = mpz_odd_p(cur_m.get_mpz_t()) != 0;
              bool swapped = (cur_i == 1) ? !m_odd : m_odd;
              long next_i = (cur_i == 1) ? sys.rank() : cur_i - 1;

              mpz_class next_m, next_k, tail_m;
              if (swapped) {
                next_k = cur_k * cur_k;
                if (cur_i == 1) {
                  next_m = cur_m / 2 + ell + cur_k * (cur_m / 2);
                } else {
                  next_m = (cur_m + 1) / 2 + ell + cur_k * ((cur_m - 1) / 2);
                }
              } else {
                next_k = cur_k;
                if (cur_i == 1) {
                  next_m = (cur_m - 1) / 2;
                  tail_m = (cur_m + 1) / 2 + ell;
                } else {
                  next_m = cur_m / 2;
                  tail_m = cur_m / 2 + ell;
                }
              }

              Word expected_a =
                  (Word::a(static_cast<int>(next_i)) *
                   Word::g(Dyadic::exact_int(next_m)) *
                   Word::z(Dyadic::exact_int(next_k)))
                      .normalized();
              std::vector<Word> kids = dyn.first_descendants(cur);
              if (swapped) {
                if (kids.size() != 1) {
                  fail(c, "step " + str_of(step) +
                              ": expected a single descendant, got " +
                              str_of(static_cast<long>(kids.size())));
                  return;
                }
                if (kids[0].key() != dyn.collect(expected_a).key()) {
                  fail(c, "step " + str_of(step) + ": descendant " +
                              kids[0].str() + " differs from the closed form " +
                              expected_a.str());
                  return;
                }
              } else {
                Word expected_tail = (Word::g(Dyadic::exact_int(tail_m)) *
                                      Word::z(Dyadic::exact_int(next_k)))
                                         .normalized();
                if (kids.size() != 2) {
                  fail(c, "step " + str_of(step) +
                              ": expected two descendants, got " +
                              str_of(static_cast<long>(kids.size())));
                  return;
                }
                std::vector<std::string> got = {kids[0].key(), kids[1].key()};
                std::vector<std::string> want = {
                    dyn.collect(expected_a).key(),
                    dyn.collect(expected_tail).key()};
                std::sort(got.begin(), got.end());
                std::sort(want.begin(), want.end());
                if (got != want) {
                  fail(c, "step " + str_of(step) +
                              ": descendants differ from the closed forms");
                  return;
                }
              }
              Dyadic label = sys.coset_label(expected_a);
              if (!label.exact() || label.value() != next_k) {
                fail(c, "step " + str_of(step) + ": label square law broken");
                return;
              }
              cur = expected_a;
              cur_i = next_i;
              cur_m = next_m;
              cur_k = next_k;
            }

            // Chain-estimate soundness at the length of the leading all-plus
            // run (possibly zero, where the bound degenerates to equality).
            DSequence ds = dyn.d_sequence(w, depth);
            if (!ds.intact()) {
              fail(c, "descendant chain lost uniqueness at level " +
                          str_of(std::max(ds.indeterminate_at, ds.ambiguous_at)));
              return;
            }
            long nu = Dyadic::exact_int(k).nu();
            int t = ds.runs.empty() ? 0 : ds.runs[0].first;
            int first_level = static_cast<int>(nu) + 1 + t;
            for (int n = first_level; n <= std::min(depth, first_level + 3); ++n) {
              EstimateResult est = dyn.estimate_chain_bound(w, t, n);
              if (!est.emitted) {
                fail(c, "estimate not emitted at level " + str_of(n) + ": " +
                            est.reason);
                return;
              }
              if (est.bound > static_cast<long long>(est.actual)) {
                fail(c, "estimate " + str_of(static_cast<long>(est.bound)) +
                            " exceeds the exact count at level " + str_of(n));
                return;
              }
            }

          });
        }
      }
    }
  }

  {
    System sys(2, std::max(options_.precision, 48));
    Dynamics dyn(sys);
    log.run("r=2: repeated-step floor", [&](CaseResult& c) {
      // With every descendant step charged the worst-case coset loss, the
      // count at level n stays at or above 2^n - n * 2^{nu+1} on the small
      // grid where each step's loss has been verified directly.
      for (long k : {3L, 5L}) {
        long nu = Dyadic::exact_int(k).nu();
        for (int i : {1, 2}) {
          for (long m : {0L, 1L}) {
            Word w = (Word::a(i) * normalizer_word(m, k)).normalized();
            std::vector<std::uint64_t> s = dyn.stable_counts(w, depth);
            for (int n = 1; n <= depth; ++n) {
              long long floor_bound = static_cast<long long>(one << n) -
                                      static_cast<long long>(n) *
                                          (1LL << (nu + 1));
              if (static_cast<long long>(s[n]) < floor_bound) {
                fail(c, "floor violated for i=" + str_of(i) + " k=" +
                            str_of(k) + " m=" + str_of(m) + " at level " +
                            str_of(n));
                return;
              }
            }
          }
        }
      }
    });
    log.run("r=2: descendant signs of a1*z[3]", [&](CaseResult& c) {
      DSequence ds = dyn.d_sequence(Word::a(1) * Word::z(Dyadic::exact_int(3)),
                                    depth);
      if (!ds.intact()) {
        fail(c, "chain lost uniqueness");
        return;
      }
      std::string signs;
      for (int s : ds.signs) signs += (s > 0 ? '+' : '-');
      c.detail = "signs " + signs;
    });
    log.run("r=2: settle ratio of a1*z[3]", [&](CaseResult& c) {
      int n = cap("blocks", "ratio_level");
      Word w = Word::a(1) * Word::z(Dyadic::exact_int(3));
      std::vector<std::uint64_t> s = dyn.stable_counts(w, n);
      if (n < 8) {
        c.detail = "skipped: level cap " + str_of(n) + " below the grid level";
        return;
      }
      if (10 * s[n] < 9 * (one << n)) {
        fail(c, "ratio " + str_of(static_cast<long>(s[n])) + "/2^" + str_of(n) +
                    " fell below 0.9");
        return;
      }
      c.detail = "s_" + str_of(n) + " = " + str_of(static_cast<long>(s[n])) +
                 " of " + str_of(static_cast<long>(one << n));
    });
  }

  result.seconds = seconds_since(start);
  return result;
}

// Finite-family approximation: random words of the full alphabet match their
// approximants on the requested level, the named label cases pick the right
// residue, and the generator-length bound is subadditive under sections.
SuiteResult Harness::suite_density() const {
  SuiteResult result;
  result.suite = "density";
  result.grid = grid_text(result.suite);
  result.seed = suite_seed(result.suite);
  Clock::time_point start = Clock::now();

  System sys(options_.rank, std::max(options_.precision, 48));
  DenseApproximator approx(sys);
  CaseLog log(&result);
  std::mt19937_64 rng(result.seed);

  long words = knob("density", "words");
  int top = cap("density", "max_level");

  auto check_one = [&](const Word& w, int n, CaseResult& c) -> bool {
    ApproxResult res = approx.approximate(w, n);
    for (const Letter& l : res.g0.letters()) {
      if (l.base != Letter::Base::A) {
        fail(c, "word " + w.str() + ": approximant part " + res.g0.str() +
                    " is not a finite-family word");
        return false;
      }
    }
    Word rebuilt = (res.g0 * Word::z(res.k0)).normalized();
    if (rebuilt.key() != res.alpha.key()) {
      fail(c, "word " + w.str() + ": approximant is not g0 * z[k0]");
      return false;
    }
    if (!(sys.portrait(res.alpha, n) == sys.portrait(w, n))) {
      fail(c, "word " + w.str() + ": approximant differs at level " + str_of(n));
      return false;
    }
    return true;
  };

  long batch = 25;
  long trial = 0;
  for (long first = 1; first <= words; first += batch) {
    long last = std::min(words, first + batch - 1);
    log.run("random words " + str_of(first) + "-" + str_of(last),
            [&](CaseResult& c) {
              for (long t = first; t <= last; ++t) {
                Word w = random_word(sys, rng, 6);
                int n = static_cast<int>(trial % top) + 1;
                ++trial;
                if (!check_one(w, n, c)) return;
              }
            });
  }

  log.run("g*z[3] at level 6", [&](CaseResult& c) {
    int n = std::min(6, top);
    Word w = Word::g(1) * Word::z(Dyadic::exact_int(3));
    ApproxResult res = approx.approximate(w, n);
    if (!check_one(w, n, c)) return;
    if (!res.k0.exact() || res.k0.value() != 3) {
      fail(c, "expected residue label 3, got " + res.k0.str());
    }
  });

  log.run("label congruent to 1: z[17] at level 3", [&](CaseResult& c) {
    int n = std::min(3, top);
    Word w = Word::z(Dyadic::exact_int(17));
    ApproxResult res = approx.approximate(w, n);
    if (!check_one(w, n, c)) return;
    long expected = 1 + (1L << n);
    if (!res.k0.exact() || res.k0.value() != expected) {
      fail(c, "expected shifted label " + str_of(expected) + ", got " +
                  res.k0.str());
    }
  });

  log.run("pure odometer at level 5", [&](CaseResult& c) {
    int n = std::min(5, top);
    Word w = Word::g(1);
    ApproxResult res = approx.approximate(w, n);
    if (!check_one(w, n, c)) return;
    long expected = 1 + (1L << n);
    if (!res.k0.exact() || res.k0.value() != expected) {
      fail(c, "expected shifted label " + str_of(expected) + ", got " +
                  res.k0.str());
    }
  });

  log.run("finite-family word unchanged: a1*a2 at level 4", [&](CaseResult& c) {
    int n = std::min(4, top);
    Word w = Word::a(1) * Word::a(2);
    ApproxResult res = approx.approximate(w, n);
    if (!check_one(w, n, c)) return;
    if (!(sys.portrait(res.g0, n) == sys.portrait(w, n))) {
      fail(c, "finite-family input not reproduced by the finite-family part");
    }
  });

  log.run("generator-length subadditivity", [&](CaseResult& c) {
    long count = knob("density", "subadditivity_words");
    for (long t = 0; t < count; ++t) {
      Word w = random_word(sys, rng, 6);
      std::uint64_t whole = sys.a_length_upper(w);
      std::uint64_t parts = sys.a_length_upper(sys.section(w, 0)) +
                            sys.a_length_upper(sys.section(w, 1));
      if (parts > whole) {
        fail(c, "word " + w.str() + ": section lengths " +
                    str_of(static_cast<long>(parts)) + " exceed the bound " +
                    str_of(static_cast<long>(whole)));
        return;
      }
    }
  });

  result.seconds = seconds_since(start);
  return result;
}

std::string report_json(const Harness& harness,
                        const std::vector<SuiteResult>& results) {
  nlohmann::ordered_json doc;
  doc["report"] = "settled-verify";
  doc["seed"] = harness.options().seed;
  doc["rank"] = harness.options().rank;
  doc["max_level"] = harness.options().max_level;
  {
    std::ostringstream hash;
    hash << "0x" << std::hex << harness.grid_hash();
    doc["grid_hash"] = hash.str();
  }
  nlohmann::ordered_json grid = nlohmann::ordered_json::object();
  for (const std::string& name : Harness::suite_names()) {
    grid[name] = harness.grid_text(name);
  }
  doc["grid"] = std::move(grid);

  int total_cases = 0;
  int total_failures = 0;
  nlohmann::ordered_json suites = nlohmann::ordered_json::array();
  for (const SuiteResult& suite : results) {
    nlohmann::ordered_json entry;
    entry["suite"] = suite.suite;
    entry["seed"] = suite.seed;
    nlohmann::ordered_json cases = nlohmann::ordered_json::array();
    for (const CaseResult& c : suite.cases) {
      nlohmann::ordered_json row;
      row["name"] = c.name;
      row["pass"] = c.pass;
      if (!c.detail.empty()) row["detail"] = c.detail;
      cases.push_back(std::move(row));
    }
    entry["cases"] = std::move(cases);
    entry["failures"] = suite.failures();
    entry["passed"] = suite.passed();
    total_cases += static_cast<int>(suite.cases.size());
    total_failures += suite.failures();
    suites.push_back(std::move(entry));
  }
  doc["suites"] = std::move(suites);
  doc["cases"] = total_cases;
  doc["failures"] = total_failures;
  doc["passed"] = (total_failures == 0);
  return doc.dump(2) + "\n";
}

}  // namespace settled
