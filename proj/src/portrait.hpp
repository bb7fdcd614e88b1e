#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dyadic.hpp"

namespace settled {

// Automorphism of the rooted binary tree truncated at a fixed depth, stored as
// one swap bit per internal node in level order: layer d occupies bit indices
// [2^d - 1, 2^{d+1} - 1), and the children of node (d, i) are (d+1, 2i) and
// (d+1, 2i+1).  Vertices of level j are indexed root-first: the word b1..bj is
// the integer with b1 as the highest bit.  Automorphisms act on the right, so
// compose(q) means "this first, then q".
class Portrait {
 public:
  static constexpr int kMaxDepth = 26;

  Portrait() : depth_(0) {}
  static Portrait identity(int depth);
  static Portrait swap_root(int depth);
  static Portrait odometer(int depth);
  static Portrait odometer_power(const Dyadic& exponent, int depth);

  int depth() const { return depth_; }
  bool bit(int layer, std::uint64_t node) const;
  void set_bit(int layer, std::uint64_t node, bool value);
  bool is_identity() const;

  Portrait compose(const Portrait& then) const;
  Portrait inverse() const;
  Portrait section(int side) const;
  static Portrait assemble(const Portrait& left, const Portrait& right, bool swapped);
  Portrait truncated(int depth) const;

  // Sign of the induced permutation of the 2^level vertices at that level.
  int sign_at(int level) const;
  std::vector<int> sign_table() const;  // levels 1..depth

  std::vector<std::uint64_t> permutation(int level) const;
  std::vector<std::uint64_t> cycle_lengths(int level) const;  // ascending
  std::uint64_t order() const;

  // If this portrait is a power of the odometer, returns the exponent as a
  // residue known mod 2^depth; otherwise nullopt.  Always verified exactly.
  std::optional<Dyadic> odometer_exponent() const;

  // Two portraits of equal depth are conjugate in the full truncated
  // automorphism group iff their keys are equal.
  std::uint64_t conjugacy_key() const;
  bool conjugate_to(const Portrait& other) const;

  std::string dump_preorder() const;
  static Portrait parse_preorder(const std::string& text);

  bool operator==(const Portrait& other) const {
    return depth_ == other.depth_ && words_ == other.words_;
  }
  bool operator!=(const Portrait& other) const { return !(*this == other); }

 private:
  explicit Portrait(int depth);

  static std::uint64_t node_index(int layer, std::uint64_t node) {
    return ((std::uint64_t{1} << layer) - 1) + node;
  }
  bool raw_bit(std::uint64_t index) const {
    return (words_[index >> 6] >> (index & 63)) & 1;
  }
  void set_raw_bit(std::uint64_t index, bool value) {
    if (value)
      words_[index >> 6] |= std::uint64_t{1} << (index & 63);
    else
      words_[index >> 6] &= ~(std::uint64_t{1} << (index & 63));
  }

  void fill_odometer_power(int layer, std::uint64_t node, std::uint64_t exponent);
  void compose_rec(const Portrait& then, Portrait& out, int layer,
                   std::uint64_t ip, std::uint64_t iq) const;
  void inverse_rec(Portrait& out, int layer, std::uint64_t iout,
                   std::uint64_t iin) const;
  void copy_subtree(Portrait& out, int out_layer, std::uint64_t out_node,
                    int in_layer, std::uint64_t in_node) const;
  void permutation_rec(int target, int layer, std::uint64_t node,
                       std::uint64_t image_prefix,
                       std::vector<std::uint64_t>& out) const;
  void dump_rec(int layer, std::uint64_t node, std::string& out) const;
  void parse_rec(int layer, std::uint64_t node, const std::string& text,
                 std::size_t& pos);

  int depth_;
  std::vector<std::uint64_t> words_;
};

}  // namespace settled
