#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "words.hpp"

namespace settled {

// Leaf permutation on the 2^depth vertices of the bottom level; entry v is
// the image of vertex v, matching Portrait::permutation.
using LeafPerm = std::vector<std::uint64_t>;

// The finite group generated by the depth-n leaf permutations of a1..ar,
// organized for constructive membership: along the level filtration
// St(0) >= St(1) >= ... the quotients are elementary abelian 2-groups, so
// each layer keeps a basis of child-swap patterns together with short witness
// words. Squaring an element pushes it one layer down and conjugation moves
// its pattern around, which is how the dictionary is grown; completeness is
// certified by comparing the reached dimension with the group order computed
// independently from a plain stabilizer chain.
class LevelGroup {
 public:
  LevelGroup(const System& sys, int depth);

  int depth() const { return depth_; }
  std::uint64_t degree() const { return degree_; }
  int rank() const { return static_cast<int>(gens_.size()); }

  // Leaf permutation of a_{index} (1-based) at this depth.
  const LeafPerm& generator(int index) const;
  // Multiplicative order of a_{index}'s leaf permutation.
  std::uint64_t generator_order(int index) const;

  // Order of the generated permutation group (always a power of two).
  const mpz_class& order() const { return order_; }
  // Dimension of the swap-pattern space at each layer 0..depth-1.
  const std::vector<int>& layer_dims() const { return layer_dims_; }

  bool contains(const LeafPerm& p) const;

  // Writes `p` as a word in the generators: entries +i / -i mean a_i or its
  // inverse, in left-to-right application order; empty word = identity.
  // nullopt when `p` is not an element of the group.
  std::optional<std::vector<int>> express(const LeafPerm& p) const;

 private:
  struct Entry {
    std::vector<int> word;
    LeafPerm perm;
  };
  struct Row {
    std::vector<std::uint64_t> vec;  // reduced swap pattern, bit-packed
    std::vector<int> combo;          // entry indices XOR-ing to vec
  };

  bool fixes_level(const LeafPerm& p, int level) const;
  // Swap pattern of p at `layer` (p must fix all level-`layer` vertices);
  // nullopt when p is not a tree automorphism there.
  std::optional<std::vector<std::uint64_t>> swap_pattern(const LeafPerm& p,
                                                         int layer) const;
  // Reduces `vec` against the layer's rows; returns the combo of entry
  // indices used, or nullopt if the residue is nonzero (not in the span).
  std::optional<std::vector<int>> solve_layer(int layer,
                                              std::vector<std::uint64_t> vec) const;
  void build_dictionary(const System& sys);
  // Inserts an element into the dictionary, pushing residues deeper; returns
  // true when a new basis row was added somewhere.
  bool insert(Entry e, std::vector<Entry>* spawned);

  int depth_;
  std::uint64_t degree_;
  std::vector<LeafPerm> gens_;
  std::vector<LeafPerm> gen_invs_;
  std::vector<std::uint64_t> orders_;
  mpz_class order_;
  std::vector<int> layer_dims_;
  std::vector<std::vector<Entry>> entries_;  // per layer
  std::vector<std::vector<Row>> rows_;       // per layer, echelon order
};

// Result of the density approximation: alpha = g0 * z[k0] agrees with the
// input on the whole tree down to `level`, g0 uses only positive generator
// exponents and k0 > 1 is an odd integer.
struct ApproxResult {
  Word alpha;
  Word g0;
  Dyadic k0 = Dyadic::exact_int(1);
  int level = 0;
};

// Constructs level-exact approximations from the positive-word family; keeps
// one dictionary per depth, so reuse an instance across queries.
class DenseApproximator {
 public:
  static constexpr int kMaxLevel = 8;

  explicit DenseApproximator(const System& sys) : sys_(sys) {}

  // alpha = g0 z[k0] with alpha|T_n = w|T_n, verified on portraits before
  // returning. k0 keeps the low bits of the coset label (or 1 + 2^n when the
  // label is 1 mod 2^n), so the normalizer part is invisible at depth n.
  ApproxResult approximate(const Word& w, int n);

  const LevelGroup& level_group(int n);

 private:
  const System& sys_;
  std::map<int, LevelGroup> groups_;
};

}  // namespace settled
