#include "dynamics.hpp"

#include <algorithm>
#include <optional>

namespace settled {

namespace {

// Smallest level with sign +1, or 0 when every sign is -1.  The profile is
// eventually periodic, so scanning one head plus one cycle is exhaustive.
int first_plus_level(const SignProfile& profile) {
  int span = static_cast<int>(profile.head.size() + profile.cycle.size());
  for (int j = 1; j <= span; ++j)
    if (profile.at(j) == 1) return j;
  return 0;
}

Dyadic capped(const Dyadic& value, int bits) {
  if (!value.exact() && value.precision() <= bits) return value;
  return Dyadic::residue(value.truncate(bits), bits);
}

}  // namespace

Word Dynamics::reduced(const Word& w, int budget) const {
  if (budget < 0) throw Error::depth("reduction budget must be nonnegative");
  Word norm = w.normalized();
  Word out;
  for (const Letter& letter : norm.letters()) {
    switch (letter.base) {
      case Letter::Base::A:
        // Finite-family exponents stay exact: sections only halve them.
        out *= Word::a(letter.index, letter.value);
        break;
      case Letter::Base::G:
        // One bit is consumed per section level; the deepest test (the
        // odometer check) still needs the parity, hence budget + 1 bits.
        out *= Word::g(capped(letter.value, budget + 1));
        break;
      case Letter::Base::Z:
        // The label survives sectioning but emits an odometer exponent
        // (label - 1)/2 with one bit less; sign data needs two bits.
        out *= Word::z(capped(letter.value, std::max(budget + 1, 2)));
        break;
    }
  }
  return collect(out);
}

Word Dynamics::collect(const Word& w) const {
  Word norm = w.normalized();
  Word out;
  Dyadic m = Dyadic::exact_int(0);
  Dyadic k = Dyadic::exact_int(1);
  bool run = false;
  auto flush = [&]() {
    if (!run) return;
    if (!(m.exact() && m.value() == 0)) out *= Word::g(m);
    if (!(k.exact() && k.value() == 1)) out *= Word::z(k);
    m = Dyadic::exact_int(0);
    k = Dyadic::exact_int(1);
    run = false;
  };
  for (const Letter& letter : norm.letters()) {
    switch (letter.base) {
      case Letter::Base::A:
        flush();
        out *= Word::a(letter.index, letter.value);
        break;
      case Letter::Base::G:
        // Passing the accumulated label: z_k g^t = g^{kt} z_k.
        m = m + k * letter.value;
        run = true;
        break;
      case Letter::Base::Z:
        k = k * letter.value;
        run = true;
        break;
    }
  }
  flush();
  return out.normalized();
}

const std::vector<std::uint64_t>& Dynamics::counts(const Word& w, int budget) {
  Word red = reduced(w, budget);
  std::string key = red.key();
  auto it = memo_.find(key);
  if (it != memo_.end() && static_cast<int>(it->second.size()) > budget)
    return it->second;

  std::vector<std::uint64_t> vec;
  vec.reserve(budget + 1);
  vec.push_back(sys_.is_odometer(red) ? 1 : 0);
  if (budget >= 1) {
    if (sys_.root_swapped(red)) {
      Word child = sys_.section(red, 0) * sys_.section(red, 1);
      const std::vector<std::uint64_t>& cv = counts(child, budget - 1);
      for (int n = 1; n <= budget; ++n) vec.push_back(2 * cv[n - 1]);
    } else {
      Word left = sys_.section(red, 0);
      Word right = sys_.section(red, 1);
      // std::map references stay valid across the second recursive call.
      const std::vector<std::uint64_t>& cl = counts(left, budget - 1);
      const std::vector<std::uint64_t>& cr = counts(right, budget - 1);
      for (int n = 1; n <= budget; ++n) vec.push_back(cl[n - 1] + cr[n - 1]);
    }
  }

  std::vector<std::uint64_t>& slot = memo_[key];
  if (slot.size() < vec.size()) slot = std::move(vec);
  return slot;
}

std::vector<std::uint64_t> Dynamics::stable_counts(const Word& w, int max_level) {
  if (max_level < 0 || max_level > kMaxLevel)
    throw Error::depth("stable-count level out of range");
  const std::vector<std::uint64_t>& full = counts(w, max_level);
  return std::vector<std::uint64_t>(full.begin(), full.begin() + max_level + 1);
}

Word Dynamics::section_at(const Word& w, std::uint64_t vertex, int level) const {
  Word cur = w;
  for (int b = level - 1; b >= 0; --b)
    cur = sys_.section(cur, static_cast<int>((vertex >> b) & 1));
  return cur;
}

std::vector<std::uint64_t> Dynamics::stable_counts_direct(const Word& w,
                                                          int max_level) {
  if (max_level < 0 || max_level > kMaxLevel)
    throw Error::depth("stable-count level out of range");
  Word red = reduced(w, max_level);
  std::vector<std::uint64_t> out;
  out.reserve(max_level + 1);
  for (int level = 0; level <= max_level; ++level) {
    std::vector<std::uint64_t> perm = sys_.portrait(red, level).permutation(level);
    std::uint64_t vertices = std::uint64_t{1} << level;
    std::vector<bool> seen(vertices, false);
    std::uint64_t stable = 0;
    for (std::uint64_t v = 0; v < vertices; ++v) {
      if (seen[v]) continue;
      Word product;
      std::uint64_t length = 0;
      std::uint64_t u = v;
      do {
        seen[u] = true;
        product *= section_at(red, u, level);
        ++length;
        u = perm[u];
      } while (u != v);
      if (sys_.is_odometer(product)) stable += length;
    }
    out.push_back(stable);
  }
  return out;
}

std::vector<std::uint64_t> Dynamics::stable_counts_to_depth(const Portrait& p,
                                                            int max_level) {
  if (max_level < 0 || max_level >= p.depth())
    throw Error::depth("portrait too shallow for the requested level range");
  std::vector<std::uint64_t> out;
  out.reserve(max_level + 1);
  for (int level = 0; level <= max_level; ++level) {
    std::vector<std::uint64_t> perm = p.permutation(level);
    std::uint64_t vertices = std::uint64_t{1} << level;
    std::vector<bool> seen(vertices, false);
    std::uint64_t stable = 0;
    for (std::uint64_t v = 0; v < vertices; ++v) {
      if (seen[v]) continue;
      std::optional<Portrait> product;
      std::uint64_t length = 0;
      std::uint64_t u = v;
      do {
        seen[u] = true;
        Portrait piece = p;
        for (int b = level - 1; b >= 0; --b)
          piece = piece.section(static_cast<int>((u >> b) & 1));
        product = product ? product->compose(piece) : piece;
        ++length;
        u = perm[u];
      } while (u != v);
      std::vector<int> signs = product->sign_table();
      bool all_minus = std::all_of(signs.begin(), signs.end(),
                                   [](int s) { return s == -1; });
      if (all_minus) stable += length;
    }
    out.push_back(stable);
  }
  return out;
}

StabilityStatus Dynamics::word_status(const Word& product, int level) const {
  int plus = first_plus_level(sys_.sign_profile(product));
  if (plus == 0) return {StabilityStatus::Kind::Certified, 0};
  return {StabilityStatus::Kind::Splits, level + plus};
}

std::vector<CycleRecord> Dynamics::cycle_table(const Word& w, int level) {
  if (level < 0 || level > kMaxLevel)
    throw Error::depth("cycle level out of range");
  Word norm = w.normalized();
  std::vector<std::uint64_t> perm = sys_.portrait(norm, level).permutation(level);
  std::uint64_t vertices = std::uint64_t{1} << level;
  std::vector<bool> seen(vertices, false);
  std::vector<CycleRecord> out;
  for (std::uint64_t v = 0; v < vertices; ++v) {
    if (seen[v]) continue;
    CycleRecord rec;
    rec.level = level;
    rec.representative = v;
    Word product;
    std::uint64_t u = v;
    do {
      seen[u] = true;
      rec.members.push_back(u);
      product *= section_at(norm, u, level);
      u = perm[u];
    } while (u != v);
    rec.length = rec.members.size();
    rec.section_product = collect(product);
    rec.status = word_status(rec.section_product, level);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<PortraitCycleRecord> Dynamics::cycle_table(const Portrait& p,
                                                       int level) {
  if (level < 0 || level >= p.depth())
    throw Error::depth("cycle level needs at least one level of sections below it");
  std::vector<std::uint64_t> perm = p.permutation(level);
  std::uint64_t vertices = std::uint64_t{1} << level;
  std::vector<bool> seen(vertices, false);
  std::vector<PortraitCycleRecord> out;
  for (std::uint64_t v = 0; v < vertices; ++v) {
    if (seen[v]) continue;
    PortraitCycleRecord rec;
    rec.level = level;
    rec.representative = v;
    std::optional<Portrait> product;
    std::uint64_t u = v;
    do {
      seen[u] = true;
      rec.members.push_back(u);
      Portrait piece = p;
      for (int b = level - 1; b >= 0; --b)
        piece = piece.section(static_cast<int>((u >> b) & 1));
      product = product ? product->compose(piece) : piece;
      u = perm[u];
    } while (u != v);
    rec.length = rec.members.size();
    rec.section_product = *product;
    std::vector<int> signs = rec.section_product.sign_table();
    int plus = 0;
    for (std::size_t j = 0; j < signs.size(); ++j)
      if (signs[j] == 1) { plus = static_cast<int>(j) + 1; break; }
    if (plus > 0)
      rec.status = {StabilityStatus::Kind::Splits, level + plus};
    else
      rec.status = {StabilityStatus::Kind::StableToDepth,
                    level + rec.section_product.depth()};
    out.push_back(std::move(rec));
  }
  return out;
}

SettleProfileResult Dynamics::settle_profile(const Word& w, int max_level) {
  std::vector<std::uint64_t> s = stable_counts(w, max_level);
  SettleProfileResult result;
  result.s0 = s[0];
  for (int n = 1; n <= max_level; ++n) {
    SettleRow row;
    row.level = n;
    row.total = std::uint64_t{1} << n;
    row.stable = s[n];
    if (result.fully_stable_from < 0 && row.stable == row.total)
      result.fully_stable_from = n;
    result.rows.push_back(row);
  }
  return result;
}

std::vector<Word> Dynamics::first_descendants(const Word& w) const {
  Word norm = w.normalized();
  if (sys_.root_swapped(norm))
    return {collect(sys_.section(norm, 0) * sys_.section(norm, 1))};
  return {collect(sys_.section(norm, 0)), collect(sys_.section(norm, 1))};
}

std::vector<std::vector<Word>> Dynamics::descendants(const Word& w, int depth,
                                                     int dedup_depth) const {
  if (depth < 0 || depth > kMaxLevel)
    throw Error::depth("descendant depth out of range");
  if (dedup_depth < 1 || dedup_depth > Portrait::kMaxDepth)
    throw Error::depth("dedup depth out of range");
  std::vector<std::vector<Word>> out;
  std::vector<Word> current = {w.normalized()};
  for (int level = 1; level <= depth; ++level) {
    std::vector<Word> merged;
    std::vector<std::string> keys;
    std::vector<std::optional<Portrait>> portraits;
    for (const Word& parent : current) {
      std::vector<Word> kids = first_descendants(parent);
      for (Word& kid : kids) {
        std::string key = kid.key();
        if (std::find(keys.begin(), keys.end(), key) != keys.end()) continue;
        std::optional<Portrait> pic;
        try {
          pic = sys_.portrait(kid, dedup_depth);
        } catch (const Error& e) {
          if (e.kind() != Error::Kind::Precision) throw;
          // Not enough carried bits to draw the portrait: keep both rather
          // than merging on missing evidence.
        }
        bool duplicate = false;
        if (pic) {
          for (const std::optional<Portrait>& other : portraits)
            if (other && *other == *pic) { duplicate = true; break; }
        }
        if (duplicate) continue;
        keys.push_back(std::move(key));
        portraits.push_back(std::move(pic));
        merged.push_back(std::move(kid));
      }
    }
    out.push_back(merged);
    current = std::move(merged);
  }
  return out;
}

BlockReport Dynamics::analyze_blocks(const Word& w, int depth,
                                     int probe_depth) const {
  if (depth < 0 || depth > kMaxLevel)
    throw Error::depth("block depth out of range");

  auto make_entry = [&](const Word& word) {
    BlockEntry entry;
    entry.word = word;
    entry.in_family = sys_.membership(word, probe_depth);
    if (sys_.root_swapped(word)) {
      entry.is_block = Membership::Verdict::Yes;
      entry.block_reason = "top level acts nontrivially";
    } else {
      Membership left = sys_.membership(sys_.section(word, 0), probe_depth);
      Membership right = sys_.membership(sys_.section(word, 1), probe_depth);
      if (left.verdict == Membership::Verdict::Yes ||
          right.verdict == Membership::Verdict::Yes) {
        entry.is_block = Membership::Verdict::Yes;
        entry.block_reason = "a section lies in the settled normalizer family";
      } else if (left.verdict == Membership::Verdict::No &&
                 right.verdict == Membership::Verdict::No) {
        entry.is_block = Membership::Verdict::No;
        entry.block_reason = "neither section lies in the settled normalizer family";
      } else {
        entry.is_block = Membership::Verdict::Unknown;
        entry.block_reason = "section membership unresolved at the probed depth";
      }
    }
    return entry;
  };

  BlockReport report;
  report.depth = depth;

  Word norm = w.normalized();
  report.levels.push_back({make_entry(norm)});
  report.chain.push_back(norm);
  report.d_signs.push_back(sys_.root_swapped(norm) ? -1 : 1);

  for (int level = 1; level <= depth; ++level) {
    std::vector<BlockEntry> entries;
    std::vector<std::string> keys;
    for (const BlockEntry& parent : report.levels[level - 1]) {
      for (Word& kid : first_descendants(parent.word)) {
        std::string key = kid.key();
        if (std::find(keys.begin(), keys.end(), key) != keys.end()) continue;
        keys.push_back(std::move(key));
        entries.push_back(make_entry(kid));
      }
    }

    if (report.chain_state == BlockReport::ChainState::Intact) {
      std::vector<const BlockEntry*> outside;
      bool unresolved = false;
      for (const BlockEntry& entry : entries) {
        switch (entry.in_family.verdict) {
          case Membership::Verdict::No: outside.push_back(&entry); break;
          case Membership::Verdict::Unknown: unresolved = true; break;
          case Membership::Verdict::Yes: break;
        }
      }
      if (unresolved) {
        report.chain_state = BlockReport::ChainState::Indeterminate;
        report.chain_event_level = level;
      } else if (outside.empty()) {
        report.chain_state = BlockReport::ChainState::Empty;
        report.chain_event_level = level;
      } else if (outside.size() > 1) {
        report.chain_state = BlockReport::ChainState::Ambiguous;
        report.chain_event_level = level;
      } else {
        report.chain.push_back(outside.front()->word);
        report.d_signs.push_back(
            sys_.root_swapped(outside.front()->word) ? -1 : 1);
      }
    }

    report.levels.push_back(std::move(entries));
  }

  report.stable_block = Membership::Verdict::Yes;
  for (int level = 0; level <= depth; ++level) {
    for (const BlockEntry& entry : report.levels[level]) {
      if (entry.is_block == Membership::Verdict::No) {
        report.stable_block = Membership::Verdict::No;
        report.first_failure = level;
        break;
      }
      if (entry.is_block == Membership::Verdict::Unknown &&
          report.stable_block == Membership::Verdict::Yes) {
        report.stable_block = Membership::Verdict::Unknown;
        report.first_failure = level;
      }
    }
    if (report.stable_block == Membership::Verdict::No) break;
  }
  if (report.stable_block == Membership::Verdict::Yes) report.first_failure = -1;
  return report;
}

DSequence Dynamics::d_sequence(const Word& w, int depth, int probe_depth) const {
  BlockReport report = analyze_blocks(w, depth, probe_depth);
  DSequence seq;
  seq.signs = report.d_signs;
  switch (report.chain_state) {
    case BlockReport::ChainState::Intact: break;
    case BlockReport::ChainState::Empty:
      seq.terminated_at = report.chain_event_level;
      break;
    case BlockReport::ChainState::Indeterminate:
      seq.indeterminate_at = report.chain_event_level;
      break;
    case BlockReport::ChainState::Ambiguous:
      seq.ambiguous_at = report.chain_event_level;
      break;
  }
  std::size_t pos = 0;
  while (pos < seq.signs.size()) {
    int plus = 0, minus = 0;
    while (pos < seq.signs.size() && seq.signs[pos] == 1) { ++plus; ++pos; }
    while (pos < seq.signs.size() && seq.signs[pos] == -1) { ++minus; ++pos; }
    seq.runs.emplace_back(plus, minus);
  }
  return seq;
}

EstimateResult Dynamics::estimate_chain_bound(const Word& w, int t, int n,
                                              int probe_depth) {
  if (t < 0) throw Error::domain("chain length must be nonnegative");
  if (n < 0 || n > kMaxLevel) throw Error::depth("estimate level out of range");

  EstimateResult result;
  result.t = t;
  result.level = n;

  Dyadic label = sys_.coset_label(w);
  if (label.exact() && (label.value() == 1 || label.value() == -1)) {
    result.reason = "coset label is +-1, outside the settled normalizer family";
    return result;
  }
  long nu_val;
  try {
    nu_val = label.nu();
  } catch (const Error& e) {
    result.reason = std::string("coset label valuation unavailable: ") + e.what();
    return result;
  }
  result.nu = nu_val;

  if (nu_val + 1 > 60) {
    result.reason = "valuation too large for a 64-bit bound";
    return result;
  }
  if (n < nu_val + 1 + t) {
    result.reason = "level below nu + 1 + chain length";
    return result;
  }

  Word beta = w.normalized();
  if (t > 0) {
    BlockReport report = analyze_blocks(w, t, probe_depth);
    if (static_cast<int>(report.chain.size()) < t + 1) {
      switch (report.chain_state) {
        case BlockReport::ChainState::Empty:
          result.reason = "no descendant outside the family at level " +
                          std::to_string(report.chain_event_level);
          break;
        case BlockReport::ChainState::Ambiguous:
          result.reason = "several descendants outside the family at level " +
                          std::to_string(report.chain_event_level);
          break;
        default:
          result.reason = "descendant chain unresolved at level " +
                          std::to_string(report.chain_event_level);
          break;
      }
      return result;
    }
    for (int i = 0; i < t; ++i) {
      if (report.d_signs[i] != 1) {
        result.reason = "top-level sign is -1 at chain step " + std::to_string(i);
        return result;
      }
    }
    beta = report.chain[t];
  }

  std::uint64_t tail = stable_counts(beta, n - t)[n - t];
  result.bound = static_cast<long long>(tail) + (1LL << n) - (1LL << (n - t)) -
                 static_cast<long long>(t) * (1LL << (nu_val + 1));
  result.actual = stable_counts(w, n)[n];
  result.emitted = true;
  return result;
}

}  // namespace settled
