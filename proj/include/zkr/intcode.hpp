#pragma once

// Hybrid integer tokenization and the signed/unsigned bijection.
//
// An integer x < 2^k is its own symbol. Larger values are split around their
// highest set bit (position p, 1-based): the i bits right below it (m) and
// the lowest j bits (l) go into the entropy-coded symbol together with p,
// while the p - i - j - 1 bits in between are stored raw:
//
//   1 [m: i bits] [t: raw bits] [l: j bits]
//   symbol = 2^k + (p - k - 1) * 2^(i+j) + m * 2^j + l

#include <bit>
#include <cstdint>
#include <string>

#include "zkr/error.hpp"

namespace zkr {

// Integers handled by the coder are below 2^62; this keeps every raw field
// within the 57-bit bitio limit.
inline constexpr unsigned kMaxIntegerBits = 62;

struct HybridConfig {
  unsigned k = 4;
  unsigned i = 1;
  unsigned j = 0;

  friend bool operator==(const HybridConfig&, const HybridConfig&) = default;

  void validate() const {
    if (k < i + j) throw ContractError("hybrid config requires k >= i + j");
    if (k > 16) throw ContractError("hybrid config requires k <= 16");
  }

  // Symbols needed to represent every integer of at most `bits` bits.
  uint32_t alphabet_size(unsigned bits) const {
    if (bits <= k) return uint32_t{1} << bits;
    return (uint32_t{1} << k) + (bits - k) * (uint32_t{1} << (i + j));
  }
};

struct Token {
  uint32_t symbol = 0;
  uint32_t raw_count = 0;
  uint64_t raw_value = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

inline Token encode_hybrid(const HybridConfig& cfg, uint64_t x) {
  const uint64_t split = uint64_t{1} << cfg.k;
  if (x < split) return Token{static_cast<uint32_t>(x), 0, 0};
  if (x >> kMaxIntegerBits) {
    throw ContractError("encode_hybrid: value exceeds 62 bits");
  }
  const unsigned p = std::bit_width(x);
  const unsigned raw = p - cfg.i - cfg.j - 1;
  const uint64_t m = (x >> (p - 1 - cfg.i)) & ((uint64_t{1} << cfg.i) - 1);
  const uint64_t l = x & ((uint64_t{1} << cfg.j) - 1);
  const uint64_t t = (x >> cfg.j) & ((uint64_t{1} << raw) - 1);
  const uint64_t symbol = split + (uint64_t{p} - cfg.k - 1) * (1u << (cfg.i + cfg.j)) +
                          (m << cfg.j) + l;
  return Token{static_cast<uint32_t>(symbol), raw, t};
}

inline uint32_t raw_bit_count(const HybridConfig& cfg, uint32_t symbol) {
  const uint32_t split = uint32_t{1} << cfg.k;
  if (symbol < split) return 0;
  // p - i - j - 1 with p = n + k + 1.
  return ((symbol - split) >> (cfg.i + cfg.j)) + cfg.k - cfg.i - cfg.j;
}

// Largest symbol that encode_hybrid can produce for 62-bit inputs.
inline uint32_t max_symbol(const HybridConfig& cfg) {
  return cfg.alphabet_size(kMaxIntegerBits) - 1;
}

inline uint64_t decode_hybrid(const HybridConfig& cfg, uint32_t symbol,
                              uint64_t raw_value) {
  const uint64_t split = uint64_t{1} << cfg.k;
  if (symbol < split) return symbol;
  if (symbol > max_symbol(cfg)) {
    throw CorruptStream("hybrid symbol " + std::to_string(symbol) +
                        " outside alphabet");
  }
  uint64_t s = symbol;
  const uint64_t l = (s - split) & ((uint64_t{1} << cfg.j) - 1);
  s = (s - l - split) >> cfg.j;
  const uint64_t m = s & ((uint64_t{1} << cfg.i) - 1);
  const uint64_t n = s >> cfg.i;
  return (uint64_t{1} << (n + cfg.k)) + (m << (n + cfg.k - cfg.i)) +
         (raw_value << cfg.j) + l;
}

inline uint64_t pack_signed(int64_t x) {
  return x >= 0 ? static_cast<uint64_t>(x) * 2
                : static_cast<uint64_t>(-(x + 1)) * 2 + 1;
}

inline int64_t unpack_signed(uint64_t u) {
  return (u & 1) ? -static_cast<int64_t>(u >> 1) - 1
                 : static_cast<int64_t>(u >> 1);
}

}  // namespace zkr
