#pragma once

// Multi-context entropy coding. Two interchangeable backends share the
// token interface: rANS (32-bit state, 16-bit renormalization, 12-bit
// probabilities) for full decompression and canonical Huffman for per-list
// access. Raw bits of each token are interleaved right after its symbol.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zkr/bitio.hpp"
#include "zkr/error.hpp"
#include "zkr/intcode.hpp"

namespace zkr {

inline constexpr unsigned kAnsLogTotal = 12;
inline constexpr uint32_t kAnsTotal = uint32_t{1} << kAnsLogTotal;  // M
inline constexpr uint32_t kAnsLowerBound = uint32_t{1} << 16;       // S
inline constexpr unsigned kAnsRenormBits = 16;                      // b
inline constexpr unsigned kHuffmanMaxLength = 20;

enum class Backend : uint8_t { kAns = 0, kHuffman = 1 };

// Raw fields may exceed the 57-bit single-call limit when i + j is small.
inline void write_raw(BitWriter& w, uint64_t value, unsigned count) {
  if (count > 32) {
    w.write_bits(value & 0xFFFFFFFFu, 32);
    w.write_bits(value >> 32, count - 32);
  } else {
    w.write_bits(value, count);
  }
}

inline uint64_t read_raw(BitReader& r, unsigned count) {
  if (count > 32) {
    uint64_t lo = r.read_bits(32);
    return lo | (r.read_bits(count - 32) << 32);
  }
  return r.read_bits(count);
}

struct Histogram {
  std::vector<uint64_t> counts;
  uint64_t total = 0;

  void add(uint32_t symbol, uint64_t n = 1) {
    if (symbol >= counts.size()) counts.resize(symbol + 1, 0);
    counts[symbol] += n;
    total += n;
  }
};

struct QuantizedDistribution {
  std::vector<uint32_t> freqs;
  std::vector<uint32_t> cumulative;  // cumulative[s] = sum of freqs below s

  void rebuild_cumulative() {
    cumulative.assign(freqs.size(), 0);
    uint32_t acc = 0;
    for (size_t s = 0; s < freqs.size(); ++s) {
      cumulative[s] = acc;
      acc += freqs[s];
    }
  }
};

// Scales a histogram to sum exactly to `total`. Every occurring symbol gets
// at least 1. Rounding is proportional (floor) followed by a largest-remainder
// correction; ties go to the lower symbol index.
inline QuantizedDistribution quantize(const Histogram& h,
                                      uint32_t total = kAnsTotal) {
  if (h.total == 0) throw ContractError("quantize: empty histogram");
  struct Entry {
    uint32_t symbol;
    unsigned __int128 remainder;
  };
  QuantizedDistribution q;
  q.freqs.assign(h.counts.size(), 0);
  std::vector<Entry> used;
  int64_t assigned = 0;
  for (uint32_t s = 0; s < h.counts.size(); ++s) {
    if (h.counts[s] == 0) continue;
    unsigned __int128 scaled =
        static_cast<unsigned __int128>(h.counts[s]) * total;
    uint64_t f = static_cast<uint64_t>(scaled / h.total);
    q.freqs[s] = static_cast<uint32_t>(std::max<uint64_t>(f, 1));
    assigned += q.freqs[s];
    used.push_back({s, scaled % h.total});
  }
  if (used.size() > total) {
    throw ContractError("quantize: more symbols than probability slots");
  }
  // Largest remainder first, then lower symbol.
  std::sort(used.begin(), used.end(), [](const Entry& a, const Entry& b) {
    if (a.remainder != b.remainder) return a.remainder > b.remainder;
    return a.symbol < b.symbol;
  });
  for (size_t idx = 0; assigned < total; idx = (idx + 1) % used.size()) {
    ++q.freqs[used[idx].symbol];
    ++assigned;
  }
  // Minimum-1 bumps can overshoot; take back from the smallest remainders.
  while (assigned > total) {
    bool progressed = false;
    for (size_t idx = used.size(); idx-- > 0 && assigned > total;) {
      uint32_t& f = q.freqs[used[idx].symbol];
      if (f > 1) {
        --f;
        --assigned;
        progressed = true;
      }
    }
    if (!progressed) throw ContractError("quantize: cannot fit frequencies");
  }
  while (!q.freqs.empty() && q.freqs.back() == 0) q.freqs.pop_back();
  q.rebuild_cumulative();
  return q;
}

// Per-context rANS decoding data.
struct AnsContext {
  QuantizedDistribution dist;
  std::vector<uint32_t> slot_symbol;  // kAnsTotal entries, empty if unused

  void build_lookup() {
    slot_symbol.clear();
    if (dist.freqs.empty()) return;
    slot_symbol.resize(kAnsTotal);
    for (uint32_t s = 0; s < dist.freqs.size(); ++s) {
      std::fill_n(slot_symbol.begin() + dist.cumulative[s], dist.freqs[s], s);
    }
  }
};

struct HuffmanCode {
  std::vector<uint8_t> lengths;  // 0 = unused
  std::vector<uint32_t> codes;   // canonical, MSB-first

  // Decoding tables, rebuilt by finalize().
  static constexpr unsigned kFastBits = 10;
  struct FastEntry {
    uint32_t symbol = 0;
    uint8_t length = 0;  // 0: code longer than kFastBits
  };
  std::vector<FastEntry> fast;
  std::array<uint32_t, kHuffmanMaxLength + 2> first_code{};
  std::array<uint32_t, kHuffmanMaxLength + 2> first_index{};
  std::array<uint32_t, kHuffmanMaxLength + 2> count{};
  std::vector<uint32_t> sorted_symbols;
  unsigned max_length = 0;

  bool empty() const { return max_length == 0; }

  // Derives canonical codes and decode tables from `lengths`.
  void finalize() {
    while (!lengths.empty() && lengths.back() == 0) lengths.pop_back();
    count.fill(0);
    max_length = 0;
    for (uint8_t len : lengths) {
      if (len > kHuffmanMaxLength) throw ContractError("huffman length > 20");
      if (len) {
        ++count[len];
        max_length = std::max<unsigned>(max_length, len);
      }
    }
    codes.assign(lengths.size(), 0);
    sorted_symbols.clear();
    uint32_t code = 0;
    uint32_t index = 0;
    for (unsigned len = 1; len <= kHuffmanMaxLength; ++len) {
      first_code[len] = code;
      first_index[len] = index;
      for (uint32_t s = 0; s < lengths.size(); ++s) {
        if (lengths[s] == len) {
          codes[s] = code++;
          sorted_symbols.push_back(s);
          ++index;
        }
      }
      code <<= 1;
    }
    fast.assign(size_t{1} << kFastBits, FastEntry{});
    for (uint32_t s = 0; s < lengths.size(); ++s) {
      const unsigned len = lengths[s];
      if (len == 0 || len > kFastBits) continue;
      const uint32_t rev = reversed(s);
      for (uint32_t hi = 0; hi < (1u << (kFastBits - len)); ++hi) {
        fast[rev | (hi << len)] = FastEntry{s, static_cast<uint8_t>(len)};
      }
    }
  }

  // Codeword as written into the LSB-first stream.
  uint32_t reversed(uint32_t symbol) const {
    uint32_t c = codes[symbol], r = 0;
    for (unsigned b = 0; b < lengths[symbol]; ++b) {
      r = (r << 1) | ((c >> b) & 1);
    }
    return r;
  }

  void write(BitWriter& w, const Token& t) const {
    if (t.symbol >= lengths.size() || lengths[t.symbol] == 0) {
      throw ContractError("huffman: symbol " + std::to_string(t.symbol) +
                          " has no code");
    }
    w.write_bits(reversed(t.symbol), lengths[t.symbol]);
  }

  uint32_t read_symbol(BitReader& r) const {
    if (max_length == 0) throw CorruptStream("huffman: unused context");
    const FastEntry& e = fast[r.peek_bits(kFastBits)];
    if (e.length) {
      r.skip_bits(e.length);
      return e.symbol;
    }
    const uint64_t window = r.peek_bits(max_length);
    uint32_t code = 0;
    for (unsigned len = 1; len <= max_length; ++len) {
      code |= (window >> (len - 1)) & 1;
      if (count[len] && code - first_code[len] < count[len] &&
          code >= first_code[len]) {
        r.skip_bits(len);
        return sorted_symbols[first_index[len] + code - first_code[len]];
      }
      code <<= 1;
    }
    throw CorruptStream("huffman: invalid codeword");
  }
};

namespace detail {

// Optimal lengths bounded by max_len via package-merge.
inline std::vector<uint8_t> package_merge(
    const std::vector<std::pair<uint64_t, uint32_t>>& leaves,  // sorted
    unsigned max_len, size_t alphabet) {
  struct Node {
    uint64_t weight;
    int32_t left, right;  // -1 for leaves
    uint32_t symbol;
  };
  std::vector<Node> pool;
  std::vector<int32_t> leaf_ids;
  for (auto [w, s] : leaves) {
    leaf_ids.push_back(static_cast<int32_t>(pool.size()));
    pool.push_back({w, -1, -1, s});
  }
  std::vector<int32_t> current = leaf_ids;
  for (unsigned level = 1; level < max_len; ++level) {
    std::vector<int32_t> packages;
    for (size_t a = 0; a + 1 < current.size(); a += 2) {
      packages.push_back(static_cast<int32_t>(pool.size()));
      pool.push_back({pool[current[a]].weight + pool[current[a + 1]].weight,
                      current[a], current[a + 1], 0});
    }
    std::vector<int32_t> merged;
    merged.reserve(leaf_ids.size() + packages.size());
    std::merge(leaf_ids.begin(), leaf_ids.end(), packages.begin(),
               packages.end(), std::back_inserter(merged),
               [&](int32_t x, int32_t y) {
                 return pool[x].weight < pool[y].weight;
               });
    current = std::move(merged);
  }
  std::vector<uint8_t> lengths(alphabet, 0);
  std::vector<int32_t> stack;
  for (size_t a = 0; a < 2 * leaves.size() - 2; ++a) {
    stack.push_back(current[a]);
    while (!stack.empty()) {
      const Node& nd = pool[stack.back()];
      stack.pop_back();
      if (nd.left < 0) {
        ++lengths[nd.symbol];
      } else {
        stack.push_back(nd.left);
        stack.push_back(nd.right);
      }
    }
  }
  return lengths;
}

}  // namespace detail

// Complete canonical prefix code with minimal expected length among codes
// whose lengths do not exceed max_len.
inline HuffmanCode huffman_build(const Histogram& h,
                                 unsigned max_len = kHuffmanMaxLength) {
  if (h.total == 0) throw ContractError("huffman_build: empty histogram");
  if (max_len == 0 || max_len > kHuffmanMaxLength) {
    throw ContractError("huffman_build: length cap must be in 1..20");
  }
  std::vector<std::pair<uint64_t, uint32_t>> leaves;
  for (uint32_t s = 0; s < h.counts.size(); ++s) {
    if (h.counts[s]) leaves.emplace_back(h.counts[s], s);
  }
  if (leaves.size() > (size_t{1} << max_len)) {
    throw ContractError("huffman_build: alphabet too large for length cap");
  }
  HuffmanCode code;
  code.lengths.assign(h.counts.size(), 0);
  if (leaves.size() == 1) {
    code.lengths[leaves[0].second] = 1;
    code.finalize();
    return code;
  }
  std::sort(leaves.begin(), leaves.end());

  // Classic construction; ties resolved by creation order for determinism.
  struct Item {
    uint64_t weight;
    uint32_t order;
    bool operator>(const Item& o) const {
      return weight != o.weight ? weight > o.weight : order > o.order;
    }
  };
  const size_t n = leaves.size();
  std::vector<int32_t> parent(2 * n - 1, -1);
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (uint32_t a = 0; a < n; ++a) heap.push({leaves[a].first, a});
  uint32_t next = static_cast<uint32_t>(n);
  while (heap.size() > 1) {
    Item x = heap.top();
    heap.pop();
    Item y = heap.top();
    heap.pop();
    parent[x.order] = static_cast<int32_t>(next);
    parent[y.order] = static_cast<int32_t>(next);
    heap.push({x.weight + y.weight, next++});
  }
  std::vector<unsigned> depth(2 * n - 1, 0);
  for (size_t v = 2 * n - 2; v-- > 0;) depth[v] = depth[parent[v]] + 1;
  unsigned longest = 0;
  for (size_t a = 0; a < n; ++a) longest = std::max(longest, depth[a]);
  if (longest <= max_len) {
    for (size_t a = 0; a < n; ++a) {
      code.lengths[leaves[a].second] = static_cast<uint8_t>(depth[a]);
    }
  } else {
    code.lengths = detail::package_merge(leaves, max_len, h.counts.size());
  }
  code.finalize();
  return code;
}

// One distribution per context, frozen once built.
struct ContextSet {
  Backend backend = Backend::kAns;
  std::vector<AnsContext> ans;
  std::vector<HuffmanCode> huffman;

  size_t size() const {
    return backend == Backend::kAns ? ans.size() : huffman.size();
  }

  // Alphabet size (1 + largest symbol with nonzero probability).
  size_t alphabet(size_t ctx) const {
    return backend == Backend::kAns ? ans[ctx].dist.freqs.size()
                                    : huffman[ctx].lengths.size();
  }

  static ContextSet build(Backend backend,
                          const std::vector<Histogram>& histograms) {
    ContextSet set;
    set.backend = backend;
    for (const Histogram& h : histograms) {
      if (backend == Backend::kAns) {
        AnsContext c;
        if (h.total) c.dist = quantize(h);
        c.build_lookup();
        set.ans.push_back(std::move(c));
      } else {
        set.huffman.push_back(h.total ? huffman_build(h) : HuffmanCode{});
        if (!h.total) set.huffman.back().finalize();
      }
    }
    return set;
  }
};

// Buffers tokens and encodes them last-to-first so that decoding runs
// forward. Stream layout: initial decoder state (32 bits), then per token an
// optional 16-bit renormalization word followed by its raw bits.
class AnsEncoder {
 public:
  explicit AnsEncoder(const ContextSet& set) : set_(&set) {}

  void add(uint32_t ctx, const Token& t) {
    const auto& freqs = set_->ans.at(ctx).dist.freqs;
    if (t.symbol >= freqs.size() || freqs[t.symbol] == 0) {
      throw ContractError("ans: symbol " + std::to_string(t.symbol) +
                          " has zero frequency in context " +
                          std::to_string(ctx));
    }
    tokens_.emplace_back(ctx, t);
  }

  size_t size() const { return tokens_.size(); }

  void finish(BitWriter& w) {
    std::vector<int32_t> words(tokens_.size(), -1);
    uint32_t state = kAnsLowerBound;
    for (size_t idx = tokens_.size(); idx-- > 0;) {
      const auto& [ctx, t] = tokens_[idx];
      const QuantizedDistribution& d = set_->ans[ctx].dist;
      const uint32_t f = d.freqs[t.symbol];
      const uint64_t limit =
          (uint64_t{kAnsLowerBound} >> kAnsLogTotal << kAnsRenormBits) * f;
      if (state >= limit) {
        words[idx] = static_cast<int32_t>(state & 0xFFFF);
        state >>= kAnsRenormBits;
      }
      state = ((state / f) << kAnsLogTotal) + d.cumulative[t.symbol] +
              state % f;
    }
    w.write_bits(state, 32);
    for (size_t idx = 0; idx < tokens_.size(); ++idx) {
      if (words[idx] >= 0) w.write_bits(static_cast<uint32_t>(words[idx]), 16);
      write_raw(w, tokens_[idx].second.raw_value, tokens_[idx].second.raw_count);
    }
    tokens_.clear();
  }

 private:
  const ContextSet* set_;
  std::vector<std::pair<uint32_t, Token>> tokens_;
};

class AnsReader {
 public:
  AnsReader(const ContextSet& set, const HybridConfig& cfg, BitReader& r)
      : set_(&set), cfg_(cfg), r_(&r) {
    state_ = static_cast<uint32_t>(r.read_bits(32));
    if (state_ < kAnsLowerBound) throw CorruptStream("ans: bad initial state");
  }

  Token read(uint32_t ctx) {
    if (ctx >= set_->ans.size()) throw CorruptStream("ans: unknown context");
    const AnsContext& c = set_->ans[ctx];
    if (c.slot_symbol.empty()) throw CorruptStream("ans: unused context");
    const uint32_t slot = state_ & (kAnsTotal - 1);
    const uint32_t s = c.slot_symbol[slot];
    state_ = c.dist.freqs[s] * (state_ >> kAnsLogTotal) + slot -
             c.dist.cumulative[s];
    if (state_ < kAnsLowerBound) {
      state_ = (state_ << kAnsRenormBits) |
               static_cast<uint32_t>(r_->read_bits(kAnsRenormBits));
    }
    Token t{s, raw_bit_count(cfg_, s), 0};
    t.raw_value = read_raw(*r_, t.raw_count);
    return t;
  }

  // The encoder starts from the lower bound, so a clean stream ends there.
  void finish() const {
    if (state_ != kAnsLowerBound) throw CorruptStream("ans: final state mismatch");
  }

  BitReader& bits() { return *r_; }

 private:
  const ContextSet* set_;
  HybridConfig cfg_;
  BitReader* r_;
  uint32_t state_ = 0;
};

class HuffmanWriter {
 public:
  HuffmanWriter(const ContextSet& set, BitWriter& w) : set_(&set), w_(&w) {}

  void add(uint32_t ctx, const Token& t) {
    set_->huffman.at(ctx).write(*w_, t);
    write_raw(*w_, t.raw_value, t.raw_count);
  }

 private:
  const ContextSet* set_;
  BitWriter* w_;
};

class HuffmanReader {
 public:
  HuffmanReader(const ContextSet& set, const HybridConfig& cfg, BitReader& r)
      : set_(&set), cfg_(cfg), r_(&r) {}

  Token read(uint32_t ctx) {
    if (ctx >= set_->huffman.size()) {
      throw CorruptStream("huffman: unknown context");
    }
    const uint32_t s = set_->huffman[ctx].read_symbol(*r_);
    if (s > max_symbol(cfg_)) throw CorruptStream("huffman: symbol too large");
    Token t{s, raw_bit_count(cfg_, s), 0};
    t.raw_value = read_raw(*r_, t.raw_count);
    return t;
  }

  void finish() const {}

  BitReader& bits() { return *r_; }

 private:
  const ContextSet* set_;
  HybridConfig cfg_;
  BitReader* r_;
};

// Convenience wrappers over whole token streams.
inline std::vector<uint8_t> ans_encode_stream(
    const ContextSet& set, std::span<const std::pair<uint32_t, Token>> tokens) {
  AnsEncoder enc(set);
  for (const auto& [ctx, t] : tokens) enc.add(ctx, t);
  BitWriter w;
  enc.finish(w);
  return w.finish();
}

inline std::vector<Token> ans_decode_stream(const ContextSet& set,
                                            const HybridConfig& cfg,
                                            std::span<const uint8_t> payload,
                                            std::span<const uint32_t> contexts) {
  BitReader r(payload);
  AnsReader dec(set, cfg, r);
  std::vector<Token> out;
  out.reserve(contexts.size());
  for (uint32_t ctx : contexts) out.push_back(dec.read(ctx));
  dec.finish();
  return out;
}

// Wire format per context: varint alphabet size A, then A varint frequencies
// (ANS) or A code-length bytes (Huffman).
inline void serialize_distributions(const ContextSet& set,
                                    std::vector<uint8_t>& out) {
  for (size_t c = 0; c < set.size(); ++c) {
    if (set.backend == Backend::kAns) {
      const auto& freqs = set.ans[c].dist.freqs;
      put_varint(out, freqs.size());
      for (uint32_t f : freqs) put_varint(out, f);
    } else {
      const auto& lengths = set.huffman[c].lengths;
      put_varint(out, lengths.size());
      out.insert(out.end(), lengths.begin(), lengths.end());
    }
  }
}

inline ContextSet deserialize_distributions(ByteReader& in, Backend backend,
                                            size_t contexts,
                                            const HybridConfig& cfg) {
  ContextSet set;
  set.backend = backend;
  const uint64_t max_alphabet = uint64_t{max_symbol(cfg)} + 1;
  for (size_t c = 0; c < contexts; ++c) {
    const uint64_t a = in.varint();
    if (a > max_alphabet) throw CorruptHeader("alphabet size too large");
    if (backend == Backend::kAns) {
      AnsContext ctx;
      ctx.dist.freqs.resize(a);
      uint64_t sum = 0;
      for (auto& f : ctx.dist.freqs) {
        const uint64_t v = in.varint();
        if (v > kAnsTotal) throw CorruptHeader("frequency exceeds 4096");
        f = static_cast<uint32_t>(v);
        sum += v;
      }
      if (a > 0 && sum != kAnsTotal) {
        throw CorruptHeader("frequencies of context " + std::to_string(c) +
                            " do not sum to 4096");
      }
      if (a > 0 && ctx.dist.freqs.back() == 0) {
        throw CorruptHeader("trailing zero frequency");
      }
      ctx.dist.rebuild_cumulative();
      ctx.build_lookup();
      set.ans.push_back(std::move(ctx));
    } else {
      HuffmanCode code;
      auto raw = in.bytes(a);
      code.lengths.assign(raw.begin(), raw.end());
      uint64_t kraft = 0;  // in units of 2^-20
      size_t used = 0;
      for (uint8_t len : code.lengths) {
        if (len > kHuffmanMaxLength) throw CorruptHeader("code length > 20");
        if (len) {
          kraft += uint64_t{1} << (kHuffmanMaxLength - len);
          ++used;
        }
      }
      const bool single = used == 1 && kraft == (uint64_t{1} << (kHuffmanMaxLength - 1));
      if (used > 0 && !single && kraft != (uint64_t{1} << kHuffmanMaxLength)) {
        throw CorruptHeader("code lengths of context " + std::to_string(c) +
                            " are not a complete prefix code");
      }
      if (a > 0 && code.lengths.back() == 0) {
        throw CorruptHeader("trailing zero code length");
      }
      code.finalize();
      set.huffman.push_back(std::move(code));
    }
  }
  return set;
}

// Estimated bits per (context, token). Symbols missing from a context are
// charged a fixed penalty so references that would need them stay finite.
class CostModel {
 public:
  // Every symbol equally likely over the alphabet of `bits`-bit integers.
  static CostModel uniform(const HybridConfig& cfg, size_t contexts,
                           unsigned bits) {
    CostModel m;
    const double c = std::log2(static_cast<double>(cfg.alphabet_size(bits)));
    m.tables_.assign(contexts, {});
    m.missing_.assign(contexts, static_cast<float>(c));
    return m;
  }

  static CostModel from(const ContextSet& set) {
    CostModel m;
    m.tables_.resize(set.size());
    m.missing_.resize(set.size());
    for (size_t c = 0; c < set.size(); ++c) {
      auto& table = m.tables_[c];
      if (set.backend == Backend::kAns) {
        const auto& freqs = set.ans[c].dist.freqs;
        table.resize(freqs.size());
        for (size_t s = 0; s < freqs.size(); ++s) {
          table[s] = freqs[s] ? static_cast<float>(kAnsLogTotal -
                                                   std::log2(double(freqs[s])))
                              : -1.0f;
        }
        m.missing_[c] = static_cast<float>(kAnsLogTotal + 1);
      } else {
        const auto& lens = set.huffman[c].lengths;
        table.resize(lens.size());
        unsigned longest = 0;
        for (size_t s = 0; s < lens.size(); ++s) {
          table[s] = lens[s] ? float(lens[s]) : -1.0f;
          longest = std::max<unsigned>(longest, lens[s]);
        }
        m.missing_[c] = static_cast<float>(longest ? longest + 1 : kAnsLogTotal);
      }
    }
    return m;
  }

  float symbol_cost(uint32_t ctx, uint32_t symbol) const {
    const auto& t = tables_[ctx];
    if (symbol < t.size() && t[symbol] >= 0) return t[symbol];
    return missing_[ctx];
  }

  double cost(uint32_t ctx, const Token& t) const {
    return symbol_cost(ctx, t.symbol) + t.raw_count;
  }

  size_t contexts() const { return tables_.size(); }

 private:
  std::vector<std::vector<float>> tables_;
  std::vector<float> missing_;
};

}  // namespace zkr
