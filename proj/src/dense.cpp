#include "dense.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <set>
#include <utility>

#include "errors.hpp"

namespace settled {

namespace {

LeafPerm perm_identity(std::uint64_t degree) {
  LeafPerm p(degree);
  for (std::uint64_t v = 0; v < degree; ++v) p[v] = v;
  return p;
}

// Apply p first, then q — matching the order letters act in a word.
LeafPerm perm_compose(const LeafPerm& p, const LeafPerm& q) {
  LeafPerm out(p.size());
  for (std::uint64_t v = 0; v < p.size(); ++v) out[v] = q[p[v]];
  return out;
}

LeafPerm perm_inverse(const LeafPerm& p) {
  LeafPerm out(p.size());
  for (std::uint64_t v = 0; v < p.size(); ++v) out[p[v]] = v;
  return out;
}

bool perm_is_identity(const LeafPerm& p) {
  for (std::uint64_t v = 0; v < p.size(); ++v)
    if (p[v] != v) return false;
  return true;
}

LeafPerm perm_pow(LeafPerm base, std::uint64_t e) {
  LeafPerm out = perm_identity(base.size());
  while (e > 0) {
    if (e & 1) out = perm_compose(out, base);
    base = perm_compose(base, base);
    e >>= 1;
  }
  return out;
}

std::uint64_t perm_order(const LeafPerm& p) {
  std::vector<bool> seen(p.size(), false);
  std::uint64_t ord = 1;
  for (std::uint64_t v = 0; v < p.size(); ++v) {
    if (seen[v]) continue;
    std::uint64_t len = 0, w = v;
    while (!seen[w]) {
      seen[w] = true;
      w = p[w];
      ++len;
    }
    ord = std::lcm(ord, len);
  }
  return ord;
}

std::vector<int> inverted_word(const std::vector<int>& w) {
  std::vector<int> out(w.rbegin(), w.rend());
  for (int& s : out) s = -s;
  return out;
}

bool vec_all_zero(const std::vector<std::uint64_t>& v) {
  for (std::uint64_t w : v)
    if (w != 0) return false;
  return true;
}

int vec_lowest_bit(const std::vector<std::uint64_t>& v) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != 0) return static_cast<int>(i * 64) + __builtin_ctzll(v[i]);
  return -1;
}

void vec_xor(std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] ^= b[i];
}

void toggle(std::set<int>& parity, int idx) {
  auto it = parity.find(idx);
  if (it == parity.end())
    parity.insert(idx);
  else
    parity.erase(it);
}

// Plain stabilizer chain on points, transversals stored as permutations only.
// Used for the group order; witness words never pass through here.  A residue
// that leaves the known orbit of its level joins that level as both generator
// and transversal representative, so it can never be rediscovered.
class OrderChain {
 public:
  OrderChain(const std::vector<LeafPerm>& gens, std::uint64_t degree)
      : degree_(degree) {
    for (const LeafPerm& g : gens) place(g);
    close();
  }

  mpz_class order() const {
    mpz_class n = 1;
    for (const Lvl& l : lv_) n *= static_cast<unsigned long>(l.orbit.size());
    return n;
  }

 private:
  struct Lvl {
    std::uint64_t base = 0;
    std::vector<LeafPerm> gens;
    std::vector<std::size_t> done;     // per gen: orbit prefix already paired
    std::vector<std::uint64_t> orbit;  // discovery order, orbit[0] == base
    std::vector<std::int64_t> slot;    // point -> orbit position, or -1
    std::vector<LeafPerm> trans;       // u with u[base] == point
    std::vector<LeafPerm> trans_inv;
  };

  std::uint64_t degree_;
  std::vector<Lvl> lv_;

  void add_point(Lvl& l, std::uint64_t q, LeafPerm u) {
    l.slot[q] = static_cast<std::int64_t>(l.orbit.size());
    l.orbit.push_back(q);
    l.trans_inv.push_back(perm_inverse(u));
    l.trans.push_back(std::move(u));
  }

  // Sifts p through the chain; a nontrivial residue is installed at the level
  // where its base image leaves the orbit (extending the chain if it fixes
  // every existing base).  Returns true when something was installed.
  bool place(LeafPerm p) {
    for (std::size_t j = 0;; ++j) {
      if (perm_is_identity(p)) return false;
      if (j == lv_.size()) {
        Lvl nl;
        for (std::uint64_t v = 0; v < degree_; ++v)
          if (p[v] != v) {
            nl.base = v;
            break;
          }
        nl.slot.assign(degree_, -1);
        add_point(nl, nl.base, perm_identity(degree_));
        lv_.push_back(std::move(nl));
      }
      Lvl& l = lv_[j];
      std::uint64_t q = p[l.base];
      if (q == l.base) continue;
      std::int64_t s = l.slot[q];
      if (s < 0) {
        l.gens.push_back(p);
        l.done.push_back(0);
        add_point(l, q, std::move(p));
        return true;
      }
      p = perm_compose(p, l.trans_inv[static_cast<std::size_t>(s)]);
    }
  }

  void close() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t j = 0; j < lv_.size(); ++j) {
        // A later generator can extend the orbit after an earlier one was
        // fully paired, so repeat until no pair at this level is pending.
        bool pending = true;
        while (pending) {
          pending = false;
          for (std::size_t i = 0; i < lv_[j].gens.size(); ++i) {
            while (lv_[j].done[i] < lv_[j].orbit.size()) {
              std::size_t s = lv_[j].done[i]++;
              std::uint64_t q = lv_[j].gens[i][lv_[j].orbit[s]];
              if (lv_[j].slot[q] < 0) {
                add_point(lv_[j], q,
                          perm_compose(lv_[j].trans[s], lv_[j].gens[i]));
                continue;
              }
              LeafPerm schreier = perm_compose(
                  perm_compose(lv_[j].trans[s], lv_[j].gens[i]),
                  lv_[j].trans_inv[static_cast<std::size_t>(lv_[j].slot[q])]);
              if (place(std::move(schreier))) changed = true;
            }
          }
          for (std::size_t i = 0; i < lv_[j].gens.size(); ++i)
            if (lv_[j].done[i] < lv_[j].orbit.size()) pending = true;
        }
      }
    }
  }
};

constexpr std::size_t kWordCap = 1 << 15;

}  // namespace

LevelGroup::LevelGroup(const System& sys, int depth) : depth_(depth) {
  if (depth < 1 || depth > DenseApproximator::kMaxLevel)
    throw Error::depth("level group depth must be between 1 and " +
                       std::to_string(DenseApproximator::kMaxLevel));
  degree_ = std::uint64_t{1} << depth;
  for (int i = 1; i <= sys.rank(); ++i) {
    LeafPerm g = sys.portrait(Word::a(i), depth).permutation(depth);
    gen_invs_.push_back(perm_inverse(g));
    orders_.push_back(perm_order(g));
    gens_.push_back(std::move(g));
  }
  order_ = OrderChain(gens_, degree_).order();
  if (mpz_popcount(order_.get_mpz_t()) != 1)
    throw Error::internal("level group order is not a power of two");
  build_dictionary(sys);
}

const LeafPerm& LevelGroup::generator(int index) const {
  if (index < 1 || index > rank())
    throw Error::domain("generator index out of range");
  return gens_[static_cast<std::size_t>(index - 1)];
}

std::uint64_t LevelGroup::generator_order(int index) const {
  if (index < 1 || index > rank())
    throw Error::domain("generator index out of range");
  return orders_[static_cast<std::size_t>(index - 1)];
}

bool LevelGroup::fixes_level(const LeafPerm& p, int level) const {
  int shift = depth_ - level;
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << level); ++v)
    if ((p[v << shift] >> shift) != v) return false;
  return true;
}

std::optional<std::vector<std::uint64_t>> LevelGroup::swap_pattern(
    const LeafPerm& p, int layer) const {
  std::uint64_t width = std::uint64_t{1} << layer;
  std::vector<std::uint64_t> vec((width + 63) >> 6, 0);
  int shift = depth_ - layer - 1;
  for (std::uint64_t v = 0; v < width; ++v) {
    std::uint64_t image = p[(2 * v) << shift] >> shift;
    if (image == 2 * v + 1)
      vec[v >> 6] |= std::uint64_t{1} << (v & 63);
    else if (image != 2 * v)
      return std::nullopt;  // child block leaves its parent: not in St(layer)
  }
  return vec;
}

std::optional<std::vector<int>> LevelGroup::solve_layer(
    int layer, std::vector<std::uint64_t> vec) const {
  std::set<int> parity;
  while (!vec_all_zero(vec)) {
    int b = vec_lowest_bit(vec);
    const Row* hit = nullptr;
    for (const Row& row : rows_[static_cast<std::size_t>(layer)]) {
      if (vec_lowest_bit(row.vec) == b) {
        hit = &row;
        break;
      }
    }
    if (hit == nullptr) return std::nullopt;
    vec_xor(vec, hit->vec);
    for (int idx : hit->combo) toggle(parity, idx);
  }
  return std::vector<int>(parity.begin(), parity.end());
}

bool LevelGroup::insert(Entry e, std::vector<Entry>* spawned) {
  while (true) {
    if (perm_is_identity(e.perm)) return false;
    int layer = -1;
    for (int l = 1; l <= depth_; ++l) {
      if (!fixes_level(e.perm, l)) {
        layer = l - 1;
        break;
      }
    }
    if (layer < 0) return false;
    auto pattern = swap_pattern(e.perm, layer);
    if (!pattern)
      throw Error::internal("group element with a torn block in the dictionary");

    // Reduce against the existing rows of this layer.
    std::vector<std::uint64_t> vec = *pattern;
    std::set<int> parity;
    bool changed = true;
    while (changed && !vec_all_zero(vec)) {
      changed = false;
      int b = vec_lowest_bit(vec);
      for (const Row& row : rows_[static_cast<std::size_t>(layer)]) {
        if (vec_lowest_bit(row.vec) == b) {
          vec_xor(vec, row.vec);
          for (int idx : row.combo) toggle(parity, idx);
          changed = true;
          break;
        }
      }
    }

    if (!vec_all_zero(vec)) {
      // New direction: keep the element and spawn its square and conjugates.
      auto& pool = entries_[static_cast<std::size_t>(layer)];
      int idx = static_cast<int>(pool.size());
      toggle(parity, idx);
      rows_[static_cast<std::size_t>(layer)].push_back(
          Row{std::move(vec), std::vector<int>(parity.begin(), parity.end())});
      pool.push_back(std::move(e));
      const Entry& self = pool.back();
      if (spawned != nullptr) {
        if (2 * self.word.size() <= kWordCap) {
          std::vector<int> w = self.word;
          w.insert(w.end(), self.word.begin(), self.word.end());
          spawned->push_back(Entry{std::move(w), perm_compose(self.perm, self.perm)});
        }
        for (int i = 1; i <= rank(); ++i) {
          if (orders_[static_cast<std::size_t>(i - 1)] <= 1) continue;
          if (self.word.size() + 2 > kWordCap) continue;
          std::vector<int> w1;
          w1.reserve(self.word.size() + 2);
          w1.push_back(-i);
          w1.insert(w1.end(), self.word.begin(), self.word.end());
          w1.push_back(i);
          spawned->push_back(Entry{
              std::move(w1),
              perm_compose(perm_compose(gen_invs_[static_cast<std::size_t>(i - 1)],
                                        self.perm),
                           gens_[static_cast<std::size_t>(i - 1)])});
          std::vector<int> w2;
          w2.reserve(self.word.size() + 2);
          w2.push_back(i);
          w2.insert(w2.end(), self.word.begin(), self.word.end());
          w2.push_back(-i);
          spawned->push_back(Entry{
              std::move(w2),
              perm_compose(perm_compose(gens_[static_cast<std::size_t>(i - 1)],
                                        self.perm),
                           gen_invs_[static_cast<std::size_t>(i - 1)])});
        }
      }
      return true;
    }

    // The pattern is already spanned: divide the combination out and carry the
    // residue one layer down.
    if (parity.empty()) return false;  // exact duplicate of known material
    LeafPerm combo = perm_identity(degree_);
    std::vector<int> combo_word;
    for (int idx : parity) {
      const Entry& used =
          entries_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(idx)];
      combo = perm_compose(combo, used.perm);
      combo_word.insert(combo_word.end(), used.word.begin(), used.word.end());
    }
    std::vector<int> inv = inverted_word(combo_word);
    if (e.word.size() + inv.size() > kWordCap) return false;
    e.word.insert(e.word.end(), inv.begin(), inv.end());
    e.perm = perm_compose(e.perm, perm_inverse(combo));
  }
}

void LevelGroup::build_dictionary(const System& sys) {
  (void)sys;
  entries_.assign(static_cast<std::size_t>(depth_), {});
  rows_.assign(static_cast<std::size_t>(depth_), {});

  std::size_t target_dim = mpz_sizeinbase(order_.get_mpz_t(), 2) - 1;

  auto shorter = [](const Entry& a, const Entry& b) {
    if (a.word.size() != b.word.size()) return a.word.size() > b.word.size();
    return a.word > b.word;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(shorter)> queue(shorter);

  auto current_dim = [&]() {
    std::size_t d = 0;
    for (const auto& layer : rows_) d += layer.size();
    return d;
  };
  auto drain = [&]() {
    while (!queue.empty() && current_dim() < target_dim) {
      Entry e = queue.top();
      queue.pop();
      std::vector<Entry> spawned;
      insert(std::move(e), &spawned);
      for (Entry& s : spawned) queue.push(std::move(s));
    }
  };

  for (int i = 1; i <= rank(); ++i) {
    if (orders_[static_cast<std::size_t>(i - 1)] <= 1) continue;
    queue.push(Entry{{i}, gens_[static_cast<std::size_t>(i - 1)]});
  }
  drain();

  if (current_dim() < target_dim) {
    // Seed short mixed products and keep going.
    for (int i = 1; i <= rank(); ++i) {
      if (orders_[static_cast<std::size_t>(i - 1)] <= 1) continue;
      for (int j = 1; j <= rank(); ++j) {
        if (j == i || orders_[static_cast<std::size_t>(j - 1)] <= 1) continue;
        for (int si : {i, -i}) {
          for (int sj : {j, -j}) {
            const LeafPerm& pi = si > 0 ? gens_[static_cast<std::size_t>(i - 1)]
                                        : gen_invs_[static_cast<std::size_t>(i - 1)];
            const LeafPerm& pj = sj > 0 ? gens_[static_cast<std::size_t>(j - 1)]
                                        : gen_invs_[static_cast<std::size_t>(j - 1)];
            queue.push(Entry{{si, sj}, perm_compose(pi, pj)});
          }
        }
      }
    }
    drain();
  }

  if (current_dim() != target_dim)
    throw Error::internal("swap-pattern dictionary incomplete at depth " +
                          std::to_string(depth_));

  layer_dims_.clear();
  for (const auto& layer : rows_)
    layer_dims_.push_back(static_cast<int>(layer.size()));
}

std::optional<std::vector<int>> LevelGroup::express(const LeafPerm& p) const {
  if (p.size() != degree_)
    throw Error::domain("permutation degree does not match the level group");
  LeafPerm rho = p;
  std::vector<std::vector<int>> chunks(static_cast<std::size_t>(depth_));
  for (int layer = 0; layer < depth_; ++layer) {
    if (perm_is_identity(rho)) break;
    if (!fixes_level(rho, layer)) return std::nullopt;
    auto pattern = swap_pattern(rho, layer);
    if (!pattern) return std::nullopt;
    if (vec_all_zero(*pattern)) continue;
    auto combo = solve_layer(layer, *pattern);
    if (!combo) return std::nullopt;
    LeafPerm prod = perm_identity(degree_);
    std::vector<int>& chunk = chunks[static_cast<std::size_t>(layer)];
    for (int idx : *combo) {
      const Entry& used =
          entries_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(idx)];
      prod = perm_compose(prod, used.perm);
      chunk.insert(chunk.end(), used.word.begin(), used.word.end());
    }
    rho = perm_compose(rho, perm_inverse(prod));
  }
  if (!perm_is_identity(rho)) return std::nullopt;
  std::vector<int> word;
  for (int layer = depth_ - 1; layer >= 0; --layer) {
    const std::vector<int>& chunk = chunks[static_cast<std::size_t>(layer)];
    word.insert(word.end(), chunk.begin(), chunk.end());
  }
  return word;
}

bool LevelGroup::contains(const LeafPerm& p) const {
  return express(p).has_value();
}

ApproxResult DenseApproximator::approximate(const Word& w, int n) {
  if (n < 1 || n > kMaxLevel)
    throw Error::depth("density approximation supports levels 1 to " +
                       std::to_string(kMaxLevel));
  Word norm = w.normalized();
  Dyadic label = sys_.coset_label(norm);
  if (!label.exact() && label.precision() < n)
    throw Error::precision("coset label carries " +
                           std::to_string(label.precision()) +
                           " bits; level " + std::to_string(n) + " needs " +
                           std::to_string(n));

  // Low n bits of label - 1 decide whether the normalizer part is visible at
  // this depth at all.
  bool label_is_one_here;
  if (label.exact()) {
    mpz_class d = label.value() - 1;
    label_is_one_here =
        d == 0 || mpz_scan1(d.get_mpz_t(), 0) >= static_cast<unsigned long>(n);
  } else {
    label_is_one_here = label.truncate(n) == 1;
  }
  mpz_class k0 =
      label_is_one_here ? mpz_class((mpz_class(1) << n) + 1) : label.truncate(n);
  Word zk0 = Word::z(Dyadic::exact_int(k0));

  Word peeled = (norm * sys_.inverse(zk0)).normalized();
  LeafPerm target = sys_.portrait(peeled, n).permutation(n);
  const LevelGroup& group = level_group(n);
  auto expr = group.express(target);
  if (!expr)
    throw Error::domain(
        "the generator part of the word leaves the level group; no "
        "approximation at level " +
        std::to_string(n));

  // Positive exponents only: a run of c copies of a_i (c may be negative)
  // becomes a_i^(c mod order), skipping runs that vanish at this depth.
  Word g0;
  std::size_t pos = 0;
  while (pos < expr->size()) {
    int i = std::abs((*expr)[pos]);
    long long run = 0;
    while (pos < expr->size() && std::abs((*expr)[pos]) == i) {
      run += (*expr)[pos] > 0 ? 1 : -1;
      ++pos;
    }
    auto ord = static_cast<long long>(group.generator_order(i));
    if (ord <= 1) continue;
    long long e = ((run % ord) + ord) % ord;
    if (e == 0) continue;
    g0 *= Word::a(i, static_cast<long>(e));
  }
  g0 = g0.normalized();

  // Verify on leaf permutations; at a fixed depth they determine the
  // automorphism, so this is exact level-n agreement.
  LeafPerm check = perm_identity(group.degree());
  {
    Word g0norm = g0.normalized();
    for (const Letter& letter : g0norm.letters()) {
      if (letter.base != Letter::Base::A || !letter.value.exact())
        throw Error::internal("approximation produced a non-generator letter");
      std::uint64_t e = mpz_class(letter.value.value() %
                                  static_cast<unsigned long>(group.degree()))
                            .get_ui();
      check = perm_compose(check, perm_pow(group.generator(letter.index), e));
    }
  }
  check = perm_compose(check, sys_.portrait(zk0, n).permutation(n));
  LeafPerm want = sys_.portrait(norm, n).permutation(n);
  if (check != want)
    throw Error::internal("approximation failed its level agreement check");

  ApproxResult result;
  result.g0 = g0;
  result.alpha = (g0 * zk0).normalized();
  result.k0 = Dyadic::exact_int(k0);
  result.level = n;
  return result;
}

const LevelGroup& DenseApproximator::level_group(int n) {
  auto it = groups_.find(n);
  if (it == groups_.end()) it = groups_.try_emplace(n, sys_, n).first;
  return it->second;
}

}  // namespace settled
