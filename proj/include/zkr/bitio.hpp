#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "zkr/error.hpp"

namespace zkr {

// Widest single read or write. Any width plus a 7-bit phase fits a 64-bit
// load.
inline constexpr unsigned kMaxBitsPerCall = 57;

// Appends bits LSB-first: stream bit b lands in byte b / 8, bit b % 8.
class BitWriter {
 public:
  BitWriter() = default;

  void write_bits(uint64_t value, unsigned count) {
    if (count > kMaxBitsPerCall) {
      throw ContractError("write_bits: count " + std::to_string(count) +
                          " exceeds 57");
    }
    if (count < 64 && (value >> count) != 0) {
      throw ContractError("write_bits: value does not fit in " +
                          std::to_string(count) + " bits");
    }
    if (count == 0) return;
    acc_ |= value << pending_;
    pending_ += count;
    bits_ += count;
    while (pending_ >= 8) {
      buffer_.push_back(static_cast<uint8_t>(acc_));
      acc_ >>= 8;
      pending_ -= 8;
    }
  }

  size_t bit_position() const { return bits_; }

  // Flushes the partial byte (zero padded) and hands over the buffer.
  // The writer is left empty.
  std::vector<uint8_t> finish() {
    if (pending_ > 0) buffer_.push_back(static_cast<uint8_t>(acc_));
    std::vector<uint8_t> out = std::move(buffer_);
    buffer_.clear();
    acc_ = 0;
    pending_ = 0;
    bits_ = 0;
    return out;
  }

 private:
  std::vector<uint8_t> buffer_;
  uint64_t acc_ = 0;
  unsigned pending_ = 0;
  size_t bits_ = 0;
};

// Reads bits LSB-first from an immutable byte view. Never reads past the end.
class BitReader {
 public:
  BitReader() = default;
  explicit BitReader(std::span<const uint8_t> data)
      : data_(data), limit_(data.size() * 8) {}

  uint64_t read_bits(unsigned count) {
    if (count > kMaxBitsPerCall) {
      throw ContractError("read_bits: count " + std::to_string(count) +
                          " exceeds 57");
    }
    if (count == 0) return 0;
    if (count > limit_ - pos_) throw CorruptStream("truncated bit stream");
    uint64_t v = peek_bits(count);
    pos_ += count;
    return v;
  }

  // Next `count` bits without consuming them; bits past the end read as 0.
  uint64_t peek_bits(unsigned count) const {
    const size_t byte = pos_ >> 3;
    const unsigned shift = pos_ & 7;
    uint64_t word = 0;
    if (byte + 8 <= data_.size()) {
      std::memcpy(&word, data_.data() + byte, 8);
      if constexpr (std::endian::native == std::endian::big) {
        word = __builtin_bswap64(word);
      }
    } else {
      for (size_t b = byte, s = 0; b < data_.size(); ++b, s += 8) {
        word |= static_cast<uint64_t>(data_[b]) << s;
      }
    }
    word >>= shift;
    return count >= 64 ? word : word & ((uint64_t{1} << count) - 1);
  }

  void skip_bits(unsigned count) {
    if (count > limit_ - pos_) throw CorruptStream("truncated bit stream");
    pos_ += count;
  }

  void seek_to_bit(size_t offset) {
    if (offset > limit_) {
      throw RangeError("seek_to_bit: offset " + std::to_string(offset) +
                       " past end of " + std::to_string(limit_) + " bits");
    }
    pos_ = offset;
  }

  size_t bit_position() const { return pos_; }
  size_t bits_left() const { return limit_ - pos_; }
  size_t size_bits() const { return limit_; }

 private:
  std::span<const uint8_t> data_;
  size_t pos_ = 0;
  size_t limit_ = 0;
};

// LEB128 helpers for the byte-aligned container header.
inline void put_varint(std::vector<uint8_t>& out, uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<uint8_t>(v | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<uint8_t>(v));
}

// Sequential reader over header bytes; every failure is a CorruptHeader.
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

  uint8_t u8() {
    if (pos_ >= data_.size()) throw CorruptHeader("truncated header");
    return data_[pos_++];
  }

  uint64_t varint() {
    uint64_t v = 0;
    for (unsigned shift = 0;; shift += 7) {
      if (shift > 63) throw CorruptHeader("varint too long");
      uint8_t b = u8();
      v |= static_cast<uint64_t>(b & 0x7F) << shift;
      if (!(b & 0x80)) break;
    }
    return v;
  }

  std::span<const uint8_t> bytes(size_t n) {
    if (n > data_.size() - pos_) throw CorruptHeader("truncated header");
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  size_t position() const { return pos_; }
  std::span<const uint8_t> rest() const { return data_.subspan(pos_); }

 private:
  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

}  // namespace zkr
