#include "portrait.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <mutex>

#include "errors.hpp"

namespace settled {

namespace {

std::uint64_t popcount_range(const std::vector<std::uint64_t>& words,
                             std::uint64_t begin, std::uint64_t end) {
  std::uint64_t total = 0;
  for (std::uint64_t i = begin; i < end;) {
    std::uint64_t word = words[i >> 6];
    std::uint64_t lo = i & 63;
    std::uint64_t take = std::min<std::uint64_t>(64 - lo, end - i);
    word >>= lo;
    if (take < 64) word &= (std::uint64_t{1} << take) - 1;
    total += static_cast<std::uint64_t>(__builtin_popcountll(word));
    i += take;
  }
  return total;
}

void check_depth(int depth) {
  if (depth < 0 || depth > Portrait::kMaxDepth)
    throw Error::depth("portrait depth " + std::to_string(depth) +
                       " outside supported range 0.." +
                       std::to_string(Portrait::kMaxDepth));
}

}  // namespace

Portrait::Portrait(int depth) : depth_(depth) {
  check_depth(depth);
  std::uint64_t bits = (std::uint64_t{1} << depth) - 1;
  words_.assign((bits + 63) / 64, 0);
}

Portrait Portrait::identity(int depth) { return Portrait(depth); }

Portrait Portrait::swap_root(int depth) {
  Portrait p(depth);
  if (depth < 1) throw Error::depth("root swap needs depth >= 1");
  p.set_bit(0, 0, true);
  return p;
}

Portrait Portrait::odometer(int depth) {
  return odometer_power(Dyadic::exact_int(1), depth);
}

Portrait Portrait::odometer_power(const Dyadic& exponent, int depth) {
  Portrait p(depth);
  std::uint64_t e = depth == 0 ? 0 : exponent.truncate(depth).get_ui();
  p.fill_odometer_power(0, 0, e);
  return p;
}

void Portrait::fill_odometer_power(int layer, std::uint64_t node,
                                   std::uint64_t exponent) {
  if (layer == depth_) return;
  std::uint64_t mask = (std::uint64_t{1} << (depth_ - layer)) - 1;
  exponent &= mask;
  if (exponent & 1) {
    set_bit(layer, node, true);
    fill_odometer_power(layer + 1, 2 * node, (exponent + 1) / 2);
    fill_odometer_power(layer + 1, 2 * node + 1, (exponent - 1) / 2);
  } else {
    if (exponent == 0) return;  // subtree stays identity
    fill_odometer_power(layer + 1, 2 * node, exponent / 2);
    fill_odometer_power(layer + 1, 2 * node + 1, exponent / 2);
  }
}

bool Portrait::bit(int layer, std::uint64_t node) const {
  return raw_bit(node_index(layer, node));
}

void Portrait::set_bit(int layer, std::uint64_t node, bool value) {
  set_raw_bit(node_index(layer, node), value);
}

bool Portrait::is_identity() const {
  for (std::uint64_t w : words_)
    if (w) return false;
  return true;
}

Portrait Portrait::compose(const Portrait& then) const {
  if (depth_ != then.depth_)
    throw Error::domain("cannot compose portraits of different depth");
  Portrait out(depth_);
  compose_rec(then, out, 0, 0, 0);
  return out;
}

void Portrait::compose_rec(const Portrait& then, Portrait& out, int layer,
                           std::uint64_t ip, std::uint64_t iq) const {
  if (layer == depth_) return;
  bool bp = bit(layer, ip);
  bool bq = then.bit(layer, iq);
  if (bp != bq) out.set_bit(layer, ip, true);
  compose_rec(then, out, layer + 1, 2 * ip, 2 * iq + (bp ? 1 : 0));
  compose_rec(then, out, layer + 1, 2 * ip + 1, 2 * iq + (bp ? 0 : 1));
}

Portrait Portrait::inverse() const {
  Portrait out(depth_);
  inverse_rec(out, 0, 0, 0);
  return out;
}

void Portrait::inverse_rec(Portrait& out, int layer, std::uint64_t iout,
                           std::uint64_t iin) const {
  if (layer == depth_) return;
  bool b = bit(layer, iin);
  if (b) out.set_bit(layer, iout, true);
  inverse_rec(out, layer + 1, 2 * iout, 2 * iin + (b ? 1 : 0));
  inverse_rec(out, layer + 1, 2 * iout + 1, 2 * iin + (b ? 0 : 1));
}

Portrait Portrait::section(int side) const {
  if (depth_ < 1) throw Error::depth("sections need depth >= 1");
  if (side != 0 && side != 1) throw Error::domain("section side must be 0 or 1");
  Portrait out(depth_ - 1);
  copy_subtree(out, 0, 0, 1, static_cast<std::uint64_t>(side));
  return out;
}

void Portrait::copy_subtree(Portrait& out, int out_layer, std::uint64_t out_node,
                            int in_layer, std::uint64_t in_node) const {
  if (in_layer == depth_) return;
  if (bit(in_layer, in_node)) out.set_bit(out_layer, out_node, true);
  copy_subtree(out, out_layer + 1, 2 * out_node, in_layer + 1, 2 * in_node);
  copy_subtree(out, out_layer + 1, 2 * out_node + 1, in_layer + 1, 2 * in_node + 1);
}

Portrait Portrait::assemble(const Portrait& left, const Portrait& right,
                            bool swapped) {
  if (left.depth_ != right.depth_)
    throw Error::domain("cannot assemble sections of different depth");
  Portrait out(left.depth_ + 1);
  if (swapped) out.set_bit(0, 0, true);
  left.copy_subtree(out, 1, 0, 0, 0);
  right.copy_subtree(out, 1, 1, 0, 0);
  return out;
}

Portrait Portrait::truncated(int depth) const {
  if (depth > depth_) throw Error::depth("cannot extend a portrait by truncation");
  Portrait out(depth);
  std::uint64_t bits = (std::uint64_t{1} << depth) - 1;
  for (std::uint64_t i = 0; i < bits; ++i)
    if (raw_bit(i)) out.set_raw_bit(i, true);
  return out;
}

int Portrait::sign_at(int level) const {
  if (level < 1 || level > depth_)
    throw Error::domain("sign level out of range");
  // The sign at a level is the parity of the swap bits one layer above it.
  std::uint64_t begin = node_index(level - 1, 0);
  std::uint64_t end = begin + (std::uint64_t{1} << (level - 1));
  return (popcount_range(words_, begin, end) & 1) ? -1 : 1;
}

std::vector<int> Portrait::sign_table() const {
  std::vector<int> out;
  out.reserve(depth_);
  for (int j = 1; j <= depth_; ++j) out.push_back(sign_at(j));
  return out;
}

std::vector<std::uint64_t> Portrait::permutation(int level) const {
  if (level < 0 || level > depth_)
    throw Error::domain("permutation level out of range");
  std::vector<std::uint64_t> out(std::uint64_t{1} << level);
  permutation_rec(level, 0, 0, 0, out);
  return out;
}

void Portrait::permutation_rec(int target, int layer, std::uint64_t node,
                               std::uint64_t image_prefix,
                               std::vector<std::uint64_t>& out) const {
  if (layer == target) {
    out[node] = image_prefix;
    return;
  }
  bool b = bit(layer, node);
  permutation_rec(target, layer + 1, 2 * node, 2 * image_prefix + (b ? 1 : 0), out);
  permutation_rec(target, layer + 1, 2 * node + 1, 2 * image_prefix + (b ? 0 : 1), out);
}

std::vector<std::uint64_t> Portrait::cycle_lengths(int level) const {
  auto perm = permutation(level);
  std::vector<bool> seen(perm.size(), false);
  std::vector<std::uint64_t> lengths;
  for (std::uint64_t start = 0; start < perm.size(); ++start) {
    if (seen[start]) continue;
    std::uint64_t len = 0, v = start;
    while (!seen[v]) {
      seen[v] = true;
      v = perm[v];
      ++len;
    }
    lengths.push_back(len);
  }
  std::sort(lengths.begin(), lengths.end());
  return lengths;
}

std::uint64_t Portrait::order() const {
  if (depth_ == 0) return 1;
  auto lengths = cycle_lengths(depth_);
  // Cycle lengths on any level are powers of two, so the lcm is the maximum.
  return lengths.back();
}

std::optional<Dyadic> Portrait::odometer_exponent() const {
  if (depth_ == 0) return Dyadic::exact_int(0);
  // Follow the all-zero path: the image of the leaf 0^depth reads off the
  // candidate exponent, which is then checked against the full portrait.
  std::uint64_t reversed = 0;
  for (int d = 0; d < depth_; ++d)
    if (bit(d, 0)) reversed |= std::uint64_t{1} << d;
  std::uint64_t modulus = std::uint64_t{1} << depth_;
  std::uint64_t t = (modulus - reversed) & (modulus - 1);
  Dyadic exponent = Dyadic::residue(mpz_class(static_cast<unsigned long>(t)), depth_);
  if (odometer_power(exponent, depth_) != *this) return std::nullopt;
  return exponent;
}

namespace {

// Interned conjugacy keys: a swap node is conjugate iff the product of its
// sections is; a non-swap node iff the unordered pair of section keys matches.
class KeyTable {
 public:
  static KeyTable& instance() {
    static KeyTable table;
    return table;
  }
  std::uint64_t intern(std::uint64_t tag, std::uint64_t a, std::uint64_t b) {
    std::scoped_lock lock(mutex_);
    auto [it, inserted] = map_.try_emplace({tag, a, b}, next_);
    if (inserted) ++next_;
    return it->second;
  }

 private:
  std::mutex mutex_;
  std::map<std::array<std::uint64_t, 3>, std::uint64_t> map_;
  std::uint64_t next_ = 1;
};

}  // namespace

std::uint64_t Portrait::conjugacy_key() const {
  if (depth_ == 0) return 0;
  if (bit(0, 0)) {
    std::uint64_t inner = section(0).compose(section(1)).conjugacy_key();
    return KeyTable::instance().intern(1, inner, 0);
  }
  std::uint64_t k0 = section(0).conjugacy_key();
  std::uint64_t k1 = section(1).conjugacy_key();
  if (k0 > k1) std::swap(k0, k1);
  return KeyTable::instance().intern(2, k0, k1);
}

bool Portrait::conjugate_to(const Portrait& other) const {
  if (depth_ != other.depth_) return false;
  return conjugacy_key() == other.conjugacy_key();
}

std::string Portrait::dump_preorder() const {
  std::string out;
  out.reserve((std::uint64_t{1} << depth_) - 1);
  dump_rec(0, 0, out);
  return out;
}

void Portrait::dump_rec(int layer, std::uint64_t node, std::string& out) const {
  if (layer == depth_) return;
  out.push_back(bit(layer, node) ? '1' : '0');
  dump_rec(layer + 1, 2 * node, out);
  dump_rec(layer + 1, 2 * node + 1, out);
}

Portrait Portrait::parse_preorder(const std::string& text) {
  std::uint64_t n = text.size() + 1;
  if (n == 0 || (n & (n - 1)) != 0)
    throw Error::parse("preorder portrait must have 2^d - 1 bits");
  int depth = 0;
  while ((std::uint64_t{1} << depth) < n) ++depth;
  check_depth(depth);
  for (char c : text)
    if (c != '0' && c != '1')
      throw Error::parse("preorder portrait may contain only 0 and 1");
  Portrait out(depth);
  std::size_t pos = 0;
  out.parse_rec(0, 0, text, pos);
  return out;
}

void Portrait::parse_rec(int layer, std::uint64_t node, const std::string& text,
                         std::size_t& pos) {
  if (layer == depth_) return;
  if (text[pos++] == '1') set_bit(layer, node, true);
  parse_rec(layer + 1, 2 * node, text, pos);
  parse_rec(layer + 1, 2 * node + 1, text, pos);
}

}  // namespace settled
