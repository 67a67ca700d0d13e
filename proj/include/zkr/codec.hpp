#pragma once

// Container format (little-endian, LEB128 varints):
//
//   "ZKL1" | version u8 = 1 | mode u8 (0 full, 1 list) | k u8 | i u8 | j u8
//   | varint W | varint R (0 = unbounded) | varint C (0 = one chunk)
//   | varint L' (0 = no zero runs) | varint n | varint T (133, or 1 for a
//   single shared context) | T distributions | list mode: varint chunk count,
//   then delta-coded chunk start bit offsets | payload
//
// Full mode codes the payload with rANS, list mode with Huffman so that each
// chunk can be decoded from its recorded offset.

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "zkr/bitio.hpp"
#include "zkr/entropy.hpp"
#include "zkr/error.hpp"
#include "zkr/graph.hpp"
#include "zkr/intcode.hpp"
#include "zkr/listcode.hpp"
#include "zkr/refselect.hpp"

namespace zkr {

inline constexpr char kContainerMagic[4] = {'Z', 'K', 'L', '1'};
inline constexpr uint8_t kContainerVersion = 1;

struct Header {
  Mode mode = Mode::kFull;
  HybridConfig hybrid;
  uint32_t window = 0;
  uint32_t max_chain = 0;
  uint32_t chunk_size = 0;
  uint32_t rle_threshold = 0;
  uint64_t num_nodes = 0;
  uint32_t contexts = kNumContexts;

  ContextModel context_model() const {
    return contexts == 1 ? ContextModel::kSingle : ContextModel::kFull;
  }
  size_t num_chunks() const {
    if (num_nodes == 0) return 0;
    return chunk_size == 0 ? 1 : (num_nodes + chunk_size - 1) / chunk_size;
  }
  size_t chunk_start(size_t c) const { return chunk_size == 0 ? 0 : c * chunk_size; }
  size_t chunk_end(size_t c) const {
    return chunk_size == 0 ? num_nodes
                           : std::min<uint64_t>(num_nodes, (c + 1) * uint64_t{chunk_size});
  }
};

namespace detail {

struct Container {
  Header header;
  ContextSet dists;
  std::vector<uint64_t> chunk_offsets;  // bit offsets into payload
  std::span<const uint8_t> payload;
  size_t fixed_bytes = 0;         // magic through T
  size_t distribution_bytes = 0;
  size_t index_bytes = 0;
};

inline Container parse_container(std::span<const uint8_t> bytes) {
  Container c;
  ByteReader in(bytes);
  auto magic = in.bytes(4);
  if (std::memcmp(magic.data(), kContainerMagic, 4) != 0) {
    throw CorruptHeader("bad magic");
  }
  if (in.u8() != kContainerVersion) throw CorruptHeader("unsupported version");
  Header& h = c.header;
  const uint8_t mode = in.u8();
  if (mode > 1) throw CorruptHeader("bad mode");
  h.mode = static_cast<Mode>(mode);
  h.hybrid.k = in.u8();
  h.hybrid.i = in.u8();
  h.hybrid.j = in.u8();
  try {
    h.hybrid.validate();
  } catch (const ContractError& e) {
    throw CorruptHeader(e.what());
  }
  auto small = [&](const char* what) {
    const uint64_t v = in.varint();
    if (v > UINT32_MAX) throw CorruptHeader(std::string(what) + " too large");
    return static_cast<uint32_t>(v);
  };
  h.window = small("window");
  h.max_chain = small("max chain");
  h.chunk_size = small("chunk size");
  h.rle_threshold = small("zero-run threshold");
  h.num_nodes = in.varint();
  if (h.num_nodes >= (uint64_t{1} << 32)) throw CorruptHeader("too many nodes");
  h.contexts = small("context count");
  if (h.contexts != kNumContexts && h.contexts != 1) {
    throw CorruptHeader("unsupported context count");
  }
  if (h.mode == Mode::kFull && (h.chunk_size != 0 || h.rle_threshold != 0)) {
    throw CorruptHeader("full mode requires C = L' = unbounded");
  }
  if (h.mode == Mode::kList && (h.chunk_size == 0 || h.max_chain == 0)) {
    throw CorruptHeader("list mode requires finite C and R");
  }
  c.fixed_bytes = in.position();
  c.dists = deserialize_distributions(
      in, h.mode == Mode::kFull ? Backend::kAns : Backend::kHuffman,
      h.contexts, h.hybrid);
  c.distribution_bytes = in.position() - c.fixed_bytes;
  if (h.mode == Mode::kList) {
    const uint64_t count = in.varint();
    if (count != h.num_chunks()) throw CorruptHeader("chunk count mismatch");
    uint64_t pos = 0;
    for (uint64_t k = 0; k < count; ++k) {
      const uint64_t d = in.varint();
      if (k > 0 && d == 0) throw CorruptHeader("chunk offsets not increasing");
      if (d > (uint64_t{1} << 60) - pos) throw CorruptHeader("chunk offset overflow");
      pos += d;
      c.chunk_offsets.push_back(pos);
    }
  } else if (h.num_nodes > 0) {
    c.chunk_offsets.push_back(0);
  }
  c.index_bytes = in.position() - c.fixed_bytes - c.distribution_bytes;
  c.payload = in.rest();
  if (!c.chunk_offsets.empty() && c.chunk_offsets.back() >= c.payload.size() * 8) {
    throw CorruptStream("chunk offset past end of payload");
  }
  return c;
}

// Forwards reads to the backend, mapping logical to stored contexts and
// optionally attributing consumed bits to streams.
template <class Inner>
class ContextReader {
 public:
  ContextReader(Inner& inner, ContextModel model,
                std::array<uint64_t, kNumStreams>* bits = nullptr)
      : inner_(&inner), model_(model), bits_(bits) {}

  Token read(uint32_t ctx) {
    if (!bits_) return inner_->read(stored_context(model_, ctx));
    const size_t before = inner_->bits().bit_position();
    Token t = inner_->read(stored_context(model_, ctx));
    (*bits_)[static_cast<size_t>(stream_of(ctx))] +=
        inner_->bits().bit_position() - before;
    return t;
  }

 private:
  Inner* inner_;
  ContextModel model_;
  std::array<uint64_t, kNumStreams>* bits_;
};

// Sequential decode of every list. Chunk offsets are checked relative to
// `base`, the payload position of the first token.
template <class Reader>
Graph decode_lists(const Container& c, Reader& reader, BitReader& bits,
                   size_t base) {
  const Header& h = c.header;
  const size_t n = h.num_nodes;
  std::vector<uint64_t> offsets{0};
  offsets.reserve(n + 1);
  std::vector<NodeId> targets;
  std::vector<uint32_t> chain(h.mode == Mode::kList ? n : 0, 0);
  ChunkState state;
  ParsedList parsed;
  std::vector<NodeId> copied, list;
  auto degree_of = [&](size_t v) { return offsets[v + 1] - offsets[v]; };
  for (size_t chunk = 0; chunk < h.num_chunks(); ++chunk) {
    if (bits.bit_position() != base + c.chunk_offsets[chunk]) {
      throw CorruptStream("chunk " + std::to_string(chunk) +
                          " does not start at its recorded offset");
    }
    state = ChunkState{};
    for (size_t u = h.chunk_start(chunk); u < h.chunk_end(chunk); ++u) {
      parse_list(reader, h.hybrid, u, n, h.window, h.rle_threshold, state,
                 degree_of, parsed);
      std::span<const NodeId> ref_list;
      if (parsed.ref) {
        const size_t v = u - parsed.ref;
        ref_list = {targets.data() + offsets[v], targets.data() + offsets[v + 1]};
        if (h.mode == Mode::kList) {
          chain[u] = chain[v] + 1;
          if (chain[u] > h.max_chain) {
            throw CorruptStream("node " + std::to_string(u) +
                                ": reference chain exceeds R");
          }
        }
      }
      reconstruct_list(parsed, u, n, ref_list, copied, list);
      targets.insert(targets.end(), list.begin(), list.end());
      offsets.push_back(targets.size());
    }
  }
  return Graph(std::move(offsets), std::move(targets));
}

struct DecodeAccounting {
  std::array<uint64_t, kNumStreams> stream_bits{};
  uint64_t coder_state_bits = 0;
  uint64_t padding_bits = 0;
};

inline Graph decode_container(const Container& c,
                              DecodeAccounting* acct = nullptr) {
  const Header& h = c.header;
  if (h.num_nodes == 0) {
    if (!c.payload.empty()) throw CorruptStream("payload for empty graph");
    return Graph();
  }
  BitReader bits(c.payload);
  auto* stream_bits = acct ? &acct->stream_bits : nullptr;
  Graph g;
  if (h.mode == Mode::kFull) {
    AnsReader ans(c.dists, h.hybrid, bits);
    if (acct) acct->coder_state_bits = bits.bit_position();
    ContextReader reader(ans, h.context_model(), stream_bits);
    // The ANS state precedes the first token.
    g = decode_lists(c, reader, bits, bits.bit_position());
    ans.finish();
  } else {
    HuffmanReader huff(c.dists, h.hybrid, bits);
    ContextReader reader(huff, h.context_model(), stream_bits);
    g = decode_lists(c, reader, bits, 0);
  }
  if (bits.bits_left() >= 8) throw CorruptStream("trailing payload bytes");
  if (bits.bits_left() > 0 && bits.peek_bits(bits.bits_left()) != 0) {
    throw CorruptStream("nonzero padding");
  }
  if (acct) acct->padding_bits = bits.bits_left();
  return g;
}

}  // namespace detail

// Encodes with an explicit reference assignment (refs[u] = r, 0 = none;
// an empty span means no references).
inline std::vector<uint8_t> encode_graph_with_references(
    const Graph& g, std::span<const uint32_t> refs, const EncoderParams& p) {
  p.validate();
  const size_t n = g.num_nodes();
  if (n >= (uint64_t{1} << 32) - 1) throw ContractError("too many nodes");
  if (!refs.empty()) {
    if (refs.size() != n) throw ContractError("reference vector size mismatch");
    std::vector<uint32_t> chain(n, 0);
    for (size_t u = 0; u < n; ++u) {
      const uint32_t r = refs[u];
      if (r == 0) continue;
      if (r > u || r > p.window) {
        throw ContractError("node " + std::to_string(u) +
                            ": reference outside the window");
      }
      if (g.degree(u) == 0) {
        throw ContractError("node " + std::to_string(u) +
                            ": empty list cannot take a reference");
      }
      if (g.degree(u - r) == 0) {
        throw ContractError("node " + std::to_string(u) +
                            ": reference target has zero degree");
      }
      chain[u] = chain[u - r] + 1;
      if (p.mode == Mode::kList && chain[u] > p.max_chain) {
        throw ContractError("node " + std::to_string(u) +
                            ": reference chain exceeds R");
      }
    }
  }

  std::vector<uint8_t> out(kContainerMagic, kContainerMagic + 4);
  out.push_back(kContainerVersion);
  out.push_back(static_cast<uint8_t>(p.mode));
  out.push_back(static_cast<uint8_t>(p.hybrid.k));
  out.push_back(static_cast<uint8_t>(p.hybrid.i));
  out.push_back(static_cast<uint8_t>(p.hybrid.j));
  put_varint(out, p.window);
  put_varint(out, p.mode == Mode::kList ? p.max_chain : 0);
  put_varint(out, p.chunk_size);
  put_varint(out, p.rle_threshold);
  put_varint(out, n);
  put_varint(out, stored_context_count(p.contexts));

  ContextSet dists = build_context_set(g, refs, p);
  serialize_distributions(dists, out);
  if (n == 0) {
    if (p.mode == Mode::kList) put_varint(out, 0);
    return out;
  }

  BitWriter w;
  std::vector<uint64_t> chunk_offsets;
  if (p.mode == Mode::kFull) {
    AnsEncoder enc(dists);
    tokenize_graph(g, refs, p, [&](size_t, uint32_t ctx, const Token& t) {
      enc.add(ctx, t);
    });
    enc.finish(w);
  } else {
    HuffmanWriter hw(dists, w);
    size_t last = SIZE_MAX;
    tokenize_graph(g, refs, p, [&](size_t u, uint32_t ctx, const Token& t) {
      if (u != last) {
        if (u % p.chunk_size == 0) chunk_offsets.push_back(w.bit_position());
        last = u;
      }
      hw.add(ctx, t);
    });
    put_varint(out, chunk_offsets.size());
    for (size_t k = 0; k < chunk_offsets.size(); ++k) {
      put_varint(out, chunk_offsets[k] - (k ? chunk_offsets[k - 1] : 0));
    }
  }
  std::vector<uint8_t> payload = w.finish();
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

inline std::vector<uint8_t> encode_graph(const Graph& g,
                                         const EncoderParams& p) {
  validate(g);
  ReferenceForest refs = select_references(g, p);
  return encode_graph_with_references(g, refs.ref, p);
}

inline Graph decode_graph(std::span<const uint8_t> bytes) {
  detail::Container c = detail::parse_container(bytes);
  return detail::decode_container(c);
}

inline Header read_header(std::span<const uint8_t> bytes) {
  return detail::parse_container(bytes).header;
}

// Bit attribution of a compressed file. Every bit of the file belongs to
// exactly one category.
struct BitStats {
  uint64_t nodes = 0;
  uint64_t edges = 0;
  uint64_t header_bits = 0;        // fixed fields
  uint64_t distribution_bits = 0;  // entropy tables
  uint64_t index_bits = 0;         // chunk offsets
  std::array<uint64_t, kNumStreams> stream_bits{};
  uint64_t coder_state_bits = 0;   // initial ANS state
  uint64_t padding_bits = 0;
  uint64_t total_bits = 0;         // file size in bits

  uint64_t sum() const {
    uint64_t s = header_bits + distribution_bits + index_bits +
                 coder_state_bits + padding_bits;
    for (uint64_t b : stream_bits) s += b;
    return s;
  }
  uint64_t payload_bits() const {
    uint64_t s = coder_state_bits;
    for (uint64_t b : stream_bits) s += b;
    return s;
  }
};

inline const char* stream_name(Stream s) {
  switch (s) {
    case Stream::kDegree: return "degrees";
    case Stream::kReference: return "references";
    case Stream::kBlocks: return "blocks";
    case Stream::kFirstResidual: return "first_residuals";
    case Stream::kResidual: return "residuals";
  }
  return "?";
}

inline BitStats stats(std::span<const uint8_t> bytes) {
  detail::Container c = detail::parse_container(bytes);
  detail::DecodeAccounting acct;
  Graph g = detail::decode_container(c, &acct);
  BitStats s;
  s.nodes = g.num_nodes();
  s.edges = g.num_edges();
  s.header_bits = c.fixed_bytes * 8;
  s.distribution_bits = c.distribution_bytes * 8;
  s.index_bits = c.index_bytes * 8;
  s.stream_bits = acct.stream_bits;
  s.coder_state_bits = acct.coder_state_bits;
  s.padding_bits = acct.padding_bits;
  s.total_bits = bytes.size() * 8;
  return s;
}

// Random access to single adjacency lists of a list-mode container. Opening
// parses every list once to index node degrees (a list's residual count
// depends on its reference's degree); after that, neighbors(u) decodes only
// the chunk prefixes along u's reference chain. Immutable after open, so
// concurrent neighbors() calls are safe.
class CompressedGraph {
 public:
  static CompressedGraph open(std::vector<uint8_t> bytes) {
    CompressedGraph h;
    h.bytes_ = std::move(bytes);
    h.container_ = detail::parse_container(h.bytes_);
    if (h.container_.header.mode != Mode::kList) {
      throw UnsupportedOperation(
          "random access requires a list-mode container");
    }
    h.index_degrees();
    return h;
  }

  // The payload span points into bytes_, whose buffer survives a move.
  CompressedGraph(CompressedGraph&&) noexcept = default;
  CompressedGraph& operator=(CompressedGraph&&) noexcept = default;
  CompressedGraph(const CompressedGraph&) = delete;
  CompressedGraph& operator=(const CompressedGraph&) = delete;

  const Header& header() const { return container_.header; }
  size_t num_nodes() const { return container_.header.num_nodes; }
  uint64_t num_edges() const { return num_edges_; }
  size_t num_chunks() const { return container_.header.num_chunks(); }
  size_t degree(size_t u) const {
    check(u);
    return degrees_[u];
  }
  // Stored reference number of u (0 = none).
  uint32_t reference(size_t u) const {
    check(u);
    return refs_[u];
  }

  std::vector<NodeId> neighbors(size_t u) const {
    std::vector<NodeId> out;
    neighbors(u, out);
    return out;
  }

  void neighbors(size_t u, std::vector<NodeId>& out) const {
    check(u);
    decode_node(u, out);
  }

  // Decodes all lists of chunks [lo, hi) in order and calls fn(u, list).
  // References into earlier chunks are resolved by random access.
  template <class Fn>
  void for_each_list(size_t chunk_lo, size_t chunk_hi, Fn&& fn) const {
    const Header& h = container_.header;
    chunk_hi = std::min(chunk_hi, num_chunks());
    if (chunk_lo >= chunk_hi) return;
    const size_t first = h.chunk_start(chunk_lo);
    const size_t ring = size_t{h.window} + 1;
    std::vector<std::vector<NodeId>> recent(ring);
    std::vector<NodeId> copied, remote;
    ParsedList parsed;
    BitReader bits(container_.payload);
    HuffmanReader huff(container_.dists, h.hybrid, bits);
    detail::ContextReader reader(huff, h.context_model());
    for (size_t chunk = chunk_lo; chunk < chunk_hi; ++chunk) {
      bits.seek_to_bit(container_.chunk_offsets[chunk]);
      ChunkState state;
      for (size_t u = h.chunk_start(chunk); u < h.chunk_end(chunk); ++u) {
        parse_list(reader, h.hybrid, u, num_nodes(), h.window,
                   h.rle_threshold, state, degree_lookup(), parsed);
        std::span<const NodeId> ref_list;
        if (parsed.ref) {
          const size_t v = u - parsed.ref;
          if (v >= first) {
            ref_list = recent[v % ring];
          } else {
            decode_node(v, remote);
            ref_list = remote;
          }
        }
        auto& out = recent[u % ring];
        reconstruct_list(parsed, u, num_nodes(), ref_list, copied, out);
        fn(u, std::span<const NodeId>(out));
      }
    }
  }

 private:
  CompressedGraph() = default;

  void check(size_t u) const {
    if (u >= num_nodes()) {
      throw RangeError("node " + std::to_string(u) + " out of range [0, " +
                       std::to_string(num_nodes()) + ")");
    }
  }

  auto degree_lookup() const {
    return [this](size_t v) -> uint64_t { return degrees_[v]; };
  }

  void index_degrees() {
    const Header& h = container_.header;
    degrees_.assign(h.num_nodes, 0);
    refs_.assign(h.num_nodes, 0);
    std::vector<uint32_t> chain(h.num_nodes, 0);
    BitReader bits(container_.payload);
    HuffmanReader huff(container_.dists, h.hybrid, bits);
    detail::ContextReader reader(huff, h.context_model());
    ParsedList parsed;
    num_edges_ = 0;
    for (size_t chunk = 0; chunk < h.num_chunks(); ++chunk) {
      if (bits.bit_position() != container_.chunk_offsets[chunk]) {
        throw CorruptStream("chunk " + std::to_string(chunk) +
                            " does not start at its recorded offset");
      }
      ChunkState state;
      for (size_t u = h.chunk_start(chunk); u < h.chunk_end(chunk); ++u) {
        parse_list(reader, h.hybrid, u, num_nodes(), h.window,
                   h.rle_threshold, state, degree_lookup(), parsed);
        degrees_[u] = static_cast<uint32_t>(parsed.degree);
        num_edges_ += parsed.degree;
        refs_[u] = parsed.ref;
        if (parsed.ref) {
          chain[u] = chain[u - parsed.ref] + 1;
          if (chain[u] > h.max_chain) {
            throw CorruptStream("node " + std::to_string(u) +
                                ": reference chain exceeds R");
          }
        }
      }
    }
    if (bits.bits_left() >= 8) throw CorruptStream("trailing payload bytes");
  }

  void decode_node(size_t u, std::vector<NodeId>& out) const {
    const Header& h = container_.header;
    const size_t chunk = u / h.chunk_size;
    BitReader bits(container_.payload);
    bits.seek_to_bit(container_.chunk_offsets[chunk]);
    HuffmanReader huff(container_.dists, h.hybrid, bits);
    detail::ContextReader reader(huff, h.context_model());
    ChunkState state;
    ParsedList parsed;
    for (size_t v = h.chunk_start(chunk); v <= u; ++v) {
      parse_list(reader, h.hybrid, v, num_nodes(), h.window, h.rle_threshold,
                 state, degree_lookup(), parsed);
    }
    std::vector<NodeId> ref_list, copied;
    if (parsed.ref) decode_node(u - parsed.ref, ref_list);
    reconstruct_list(parsed, u, num_nodes(), ref_list, copied, out);
  }

  std::vector<uint8_t> bytes_;
  detail::Container container_;
  std::vector<uint32_t> degrees_;
  std::vector<uint32_t> refs_;
  uint64_t num_edges_ = 0;
};

}  // namespace zkr
