#pragma once

// Adjacency-list token layout shared by the encoder, the decoders and the
// reference-selection cost model.
//
// Per node, in decoder order:
//   degree delta (signed, vs previous node in the chunk)
//   if degree > 0:
//     reference r (0 = explicit list)
//     if r > 0: stored block count, first block length, remaining stored
//               lengths minus one (the last block is implicit)
//     first residual - u (signed)
//     residual deltas: gap - 1 - (copied edges inside the gap), with a
//       zero-run counter after every L' consecutive zero deltas

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "zkr/entropy.hpp"
#include "zkr/error.hpp"
#include "zkr/graph.hpp"
#include "zkr/intcode.hpp"

namespace zkr {

enum class Mode : uint8_t { kFull = 0, kList = 1 };
enum class ContextModel : uint8_t { kFull, kSingle };
enum class Selection : uint8_t { kDpExtend, kGreedyBounded };

struct EncoderParams {
  Mode mode = Mode::kFull;
  HybridConfig hybrid{4, 1, 0};
  uint32_t window = 32;      // W; references use r in [1, W]
  uint32_t max_chain = 0;      // R; 0 = unbounded
  uint32_t chunk_size = 0;     // C; 0 = one chunk
  uint32_t rle_threshold = 0;  // L'; 0 = no zero-run coding
  uint32_t iterations = 2;
  ContextModel contexts = ContextModel::kFull;
  Selection selection = Selection::kDpExtend;
  unsigned threads = 1;

  static EncoderParams full() { return EncoderParams{}; }
  static EncoderParams list() {
    EncoderParams p;
    p.mode = Mode::kList;
    p.max_chain = 3;
    p.chunk_size = 32;
    p.rle_threshold = 3;
    return p;
  }

  Backend backend() const {
    return mode == Mode::kFull ? Backend::kAns : Backend::kHuffman;
  }

  void validate() const {
    hybrid.validate();
    if (iterations < 1) throw ContractError("iterations must be >= 1");
    if (mode == Mode::kList && max_chain < 1) {
      throw ContractError("list mode requires a finite max chain R >= 1");
    }
    if (mode == Mode::kList && chunk_size < 1) {
      throw ContractError("list mode requires a finite chunk size");
    }
    if (mode == Mode::kFull && (chunk_size != 0 || rle_threshold != 0)) {
      throw ContractError("full mode uses a single chunk and no zero-run coding");
    }
    if (threads < 1) throw ContractError("threads must be >= 1");
  }
};

// Context layout: 4 bucketed kinds of 32 plus 5 single contexts.
enum class ContextKind : uint8_t {
  kDegree,
  kReference,
  kBlockCount,
  kBlockFirst,
  kBlockEven,
  kBlockOdd,
  kFirstResidual,
  kResidual,
  kZeroRun,
};

inline constexpr uint32_t kContextBuckets = 32;
inline constexpr uint32_t kDegreeContexts = 0;
inline constexpr uint32_t kReferenceContexts = 32;
inline constexpr uint32_t kBlockCountContext = 64;
inline constexpr uint32_t kBlockFirstContext = 65;
inline constexpr uint32_t kBlockEvenContext = 66;
inline constexpr uint32_t kBlockOddContext = 67;
inline constexpr uint32_t kFirstResidualContexts = 68;
inline constexpr uint32_t kResidualContexts = 100;
inline constexpr uint32_t kZeroRunContext = 132;
inline constexpr uint32_t kNumContexts = 133;

inline uint32_t context_for(ContextKind kind, uint64_t selector = 0) {
  const uint32_t b =
      static_cast<uint32_t>(std::min<uint64_t>(selector, kContextBuckets - 1));
  switch (kind) {
    case ContextKind::kDegree: return kDegreeContexts + b;
    case ContextKind::kReference: return kReferenceContexts + b;
    case ContextKind::kBlockCount: return kBlockCountContext;
    case ContextKind::kBlockFirst: return kBlockFirstContext;
    case ContextKind::kBlockEven: return kBlockEvenContext;
    case ContextKind::kBlockOdd: return kBlockOddContext;
    case ContextKind::kFirstResidual: return kFirstResidualContexts + b;
    case ContextKind::kResidual: return kResidualContexts + b;
    case ContextKind::kZeroRun: return kZeroRunContext;
  }
  return 0;
}

// Bit-accounting categories.
enum class Stream : uint8_t {
  kDegree,
  kReference,
  kBlocks,
  kFirstResidual,
  kResidual,  // includes zero-run counters
};
inline constexpr size_t kNumStreams = 5;

inline Stream stream_of(uint32_t ctx) {
  if (ctx < kReferenceContexts) return Stream::kDegree;
  if (ctx < kBlockCountContext) return Stream::kReference;
  if (ctx < kFirstResidualContexts) return Stream::kBlocks;
  if (ctx < kResidualContexts) return Stream::kFirstResidual;
  return Stream::kResidual;
}

// Selector state; reset at every chunk start.
struct ChunkState {
  uint64_t prev_degree = 0;
  uint32_t prev_degree_symbol = 0;
  uint32_t prev_ref = 0;
};

// Splits `ref` into alternating copy/skip runs by membership in `current`.
// The first run is a copy run and may be empty. Lengths sum to ref.size().
inline void compute_blocks(std::span<const NodeId> current,
                           std::span<const NodeId> ref,
                           std::vector<uint32_t>& lengths,
                           std::vector<NodeId>& copied) {
  lengths.clear();
  copied.clear();
  bool in_copy = true;
  uint32_t run = 0;
  size_t c = 0;
  for (NodeId x : ref) {
    while (c < current.size() && current[c] < x) ++c;
    const bool member = c < current.size() && current[c] == x;
    if (member != in_copy) {
      lengths.push_back(run);
      in_copy = member;
      run = 0;
    }
    ++run;
    if (member) copied.push_back(x);
  }
  lengths.push_back(run);
}

struct BlockSplit {
  std::vector<uint32_t> lengths;
  std::vector<NodeId> copied;
};

inline BlockSplit compute_blocks(std::span<const NodeId> current,
                                 std::span<const NodeId> ref) {
  BlockSplit b;
  compute_blocks(current, ref, b.lengths, b.copied);
  return b;
}

struct ListScratch {
  std::vector<uint32_t> blocks;
  std::vector<NodeId> copied;
  std::vector<NodeId> residuals;
  std::vector<uint64_t> deltas;
};

// Emits the tokens that follow the degree of a nonempty list: reference,
// blocks and residuals. `emit(ctx, token, logical_value)` receives every
// integer in decoder order; logical_value is the signed value for signed
// fields. `rle_threshold` 0 disables zero-run coding.
template <class Emit>
void tokenize_list_body(const HybridConfig& cfg, size_t u,
                        std::span<const NodeId> list,
                        std::span<const NodeId> ref_list, uint32_t r,
                        uint32_t rle_threshold, uint32_t ref_selector,
                        ListScratch& scratch, Emit&& emit) {
  auto put = [&](uint32_t ctx, uint64_t value, int64_t logical) {
    Token t = encode_hybrid(cfg, value);
    emit(ctx, t, logical);
    return t;
  };
  put(context_for(ContextKind::kReference, ref_selector), r, r);

  auto& copied = scratch.copied;
  if (r > 0) {
    if (ref_list.empty()) {
      throw ContractError("reference to node with empty list");
    }
    auto& blocks = scratch.blocks;
    compute_blocks(list, ref_list, blocks, copied);
    const uint32_t stored = static_cast<uint32_t>(blocks.size() - 1);
    put(context_for(ContextKind::kBlockCount), stored, stored);
    for (uint32_t b = 0; b < stored; ++b) {
      if (b == 0) {
        put(context_for(ContextKind::kBlockFirst), blocks[0], blocks[0]);
      } else {
        const uint32_t ctx = context_for(b % 2 == 0 ? ContextKind::kBlockEven
                                                    : ContextKind::kBlockOdd);
        put(ctx, blocks[b] - 1, blocks[b] - 1);
      }
    }
  } else {
    copied.clear();
  }

  auto& residuals = scratch.residuals;
  residuals.clear();
  std::set_difference(list.begin(), list.end(), copied.begin(), copied.end(),
                      std::back_inserter(residuals));
  if (residuals.empty()) return;

  const uint32_t count_symbol =
      encode_hybrid(cfg, residuals.size()).symbol;
  const int64_t first =
      static_cast<int64_t>(residuals[0]) - static_cast<int64_t>(u);
  Token prev = put(context_for(ContextKind::kFirstResidual, count_symbol),
                   pack_signed(first), first);

  // Improved deltas: copied edges inside a gap are not counted.
  auto& deltas = scratch.deltas;
  deltas.clear();
  size_t ci = 0;
  for (size_t k = 1; k < residuals.size(); ++k) {
    while (ci < copied.size() && copied[ci] < residuals[k - 1]) ++ci;
    size_t inside = 0;
    while (ci < copied.size() && copied[ci] < residuals[k]) {
      ++inside;
      ++ci;
    }
    deltas.push_back(residuals[k] - residuals[k - 1] - 1 - inside);
  }

  uint32_t zeros = 0;
  for (size_t k = 0; k < deltas.size();) {
    const uint64_t d = deltas[k++];
    prev = put(context_for(ContextKind::kResidual, prev.symbol), d,
               static_cast<int64_t>(d));
    if (d != 0) {
      zeros = 0;
      continue;
    }
    if (rle_threshold != 0 && ++zeros == rle_threshold) {
      uint64_t run = 0;
      while (k + run < deltas.size() && deltas[k + run] == 0) ++run;
      put(context_for(ContextKind::kZeroRun), run, static_cast<int64_t>(run));
      k += run;
      zeros = 0;
    }
  }
}

// Emits the degree token and, for nonempty lists, the list body. Updates the
// chunk selector state.
template <class Emit>
void tokenize_list(const HybridConfig& cfg, size_t u,
                   std::span<const NodeId> list,
                   std::span<const NodeId> ref_list, uint32_t r,
                   uint32_t rle_threshold, ChunkState& state,
                   ListScratch& scratch, Emit&& emit) {
  const int64_t delta = static_cast<int64_t>(list.size()) -
                        static_cast<int64_t>(state.prev_degree);
  Token t = encode_hybrid(cfg, pack_signed(delta));
  emit(context_for(ContextKind::kDegree, state.prev_degree_symbol), t, delta);
  state.prev_degree = list.size();
  state.prev_degree_symbol = t.symbol;
  if (list.empty()) return;
  tokenize_list_body(cfg, u, list, ref_list, r, rle_threshold, state.prev_ref,
                     scratch, emit);
  state.prev_ref = r;
}

// Logical token values of one list, in decoder order.
struct ListTokens {
  int64_t degree_delta = 0;
  uint32_t ref = 0;
  uint32_t stored_block_count = 0;
  std::vector<uint64_t> block_lengths;  // as stored
  bool has_residuals = false;
  int64_t first_residual_delta = 0;
  std::vector<uint64_t> residual_deltas;  // zero-run counters embedded
  bool nonempty = false;

  std::vector<int64_t> flatten() const {
    std::vector<int64_t> out{degree_delta};
    if (!nonempty) return out;
    out.push_back(ref);
    if (ref > 0) {
      out.push_back(stored_block_count);
      for (uint64_t b : block_lengths) out.push_back(static_cast<int64_t>(b));
    }
    if (has_residuals) {
      out.push_back(first_residual_delta);
      for (uint64_t d : residual_deltas) out.push_back(static_cast<int64_t>(d));
    }
    return out;
  }
};

// Tokens for node u of a graph given its reference choice and the previous
// degree in the chunk.
inline ListTokens encode_list_tokens(const HybridConfig& cfg, const Graph& g,
                                     size_t u, uint32_t r, uint64_t prev_degree,
                                     uint32_t rle_threshold) {
  if (r > u) throw ContractError("reference before node 0");
  if (r > 0 && g.degree(u - r) == 0) {
    throw ContractError("reference target has zero degree");
  }
  ListTokens lt;
  ChunkState st;
  st.prev_degree = prev_degree;
  ListScratch scratch;
  std::span<const NodeId> ref_list;
  if (r > 0) ref_list = g.neighbors(u - r);
  lt.nonempty = g.degree(u) > 0;
  tokenize_list(cfg, u, g.neighbors(u), ref_list, r, rle_threshold, st,
                scratch, [&](uint32_t ctx, const Token&, int64_t v) {
                  if (ctx < kReferenceContexts) {
                    lt.degree_delta = v;
                  } else if (ctx < kBlockCountContext) {
                    lt.ref = static_cast<uint32_t>(v);
                  } else if (ctx == kBlockCountContext) {
                    lt.stored_block_count = static_cast<uint32_t>(v);
                  } else if (ctx < kFirstResidualContexts) {
                    lt.block_lengths.push_back(static_cast<uint64_t>(v));
                  } else if (ctx < kResidualContexts) {
                    lt.has_residuals = true;
                    lt.first_residual_delta = v;
                  } else {
                    lt.residual_deltas.push_back(static_cast<uint64_t>(v));
                  }
                });
  return lt;
}

// Result of parsing one list's tokens, before reconstruction.
struct ParsedList {
  uint64_t degree = 0;
  uint32_t ref = 0;
  std::vector<uint32_t> blocks;  // all blocks, including the implicit last
  uint64_t copied = 0;
  int64_t first_residual = 0;
  std::vector<uint64_t> deltas;  // one per residual after the first
};

// Reads one list's tokens. `ref_degree(v)` returns the degree of an earlier
// node v. Validates everything that can be checked without list contents.
template <class Reader, class RefDegree>
void parse_list(Reader& reader, const HybridConfig& cfg, size_t u, size_t n,
                uint32_t window, uint32_t rle_threshold, ChunkState& state,
                RefDegree&& ref_degree, ParsedList& out) {
  auto get = [&](uint32_t ctx, Token& t) {
    t = reader.read(ctx);
    return decode_hybrid(cfg, t.symbol, t.raw_value);
  };
  Token t;
  const int64_t delta =
      unpack_signed(get(context_for(ContextKind::kDegree, state.prev_degree_symbol), t));
  const int64_t degree = static_cast<int64_t>(state.prev_degree) + delta;
  if (degree < 0 || static_cast<uint64_t>(degree) > n) {
    throw CorruptStream("node " + std::to_string(u) + ": invalid degree");
  }
  out.degree = static_cast<uint64_t>(degree);
  out.ref = 0;
  out.blocks.clear();
  out.copied = 0;
  out.deltas.clear();
  state.prev_degree = out.degree;
  state.prev_degree_symbol = t.symbol;
  if (out.degree == 0) return;

  const uint64_t r = get(context_for(ContextKind::kReference, state.prev_ref), t);
  if (r > u || r > window) {
    throw CorruptStream("node " + std::to_string(u) + ": invalid reference");
  }
  out.ref = static_cast<uint32_t>(r);
  state.prev_ref = out.ref;
  if (r > 0) {
    const uint64_t ref_deg = ref_degree(u - r);
    if (ref_deg == 0) {
      throw CorruptStream("node " + std::to_string(u) +
                          ": reference to an empty list");
    }
    const uint64_t stored = get(context_for(ContextKind::kBlockCount), t);
    if (stored >= ref_deg + 1) {
      throw CorruptStream("node " + std::to_string(u) + ": too many blocks");
    }
    uint64_t sum = 0;
    for (uint64_t b = 0; b < stored; ++b) {
      uint64_t len;
      if (b == 0) {
        len = get(context_for(ContextKind::kBlockFirst), t);
      } else {
        len = get(context_for(b % 2 == 0 ? ContextKind::kBlockEven
                                         : ContextKind::kBlockOdd),
                  t) + 1;
      }
      sum += len;
      if (sum > ref_deg) {
        throw CorruptStream("node " + std::to_string(u) +
                            ": blocks exceed reference length");
      }
      out.blocks.push_back(static_cast<uint32_t>(len));
    }
    out.blocks.push_back(static_cast<uint32_t>(ref_deg - sum));
    for (size_t b = 0; b < out.blocks.size(); b += 2) out.copied += out.blocks[b];
    if (out.copied > out.degree) {
      throw CorruptStream("node " + std::to_string(u) +
                          ": more copied edges than degree");
    }
  }

  const uint64_t residuals = out.degree - out.copied;
  if (residuals == 0) return;
  const uint32_t count_symbol = encode_hybrid(cfg, residuals).symbol;
  out.first_residual = unpack_signed(
      get(context_for(ContextKind::kFirstResidual, count_symbol), t));
  uint32_t prev_symbol = t.symbol;
  uint32_t zeros = 0;
  uint64_t skip = 0;
  out.deltas.reserve(residuals - 1);
  for (uint64_t k = 1; k < residuals; ++k) {
    if (skip > 0) {
      --skip;
      out.deltas.push_back(0);
      continue;
    }
    const uint64_t d = get(context_for(ContextKind::kResidual, prev_symbol), t);
    prev_symbol = t.symbol;
    out.deltas.push_back(d);
    if (d != 0) {
      zeros = 0;
      continue;
    }
    if (rle_threshold != 0 && ++zeros == rle_threshold) {
      skip = get(context_for(ContextKind::kZeroRun), t);
      zeros = 0;
      if (skip > residuals - 1 - k) {
        throw CorruptStream("node " + std::to_string(u) +
                            ": zero run exceeds residual count");
      }
    }
  }
}

// Merges block copies from `ref_list` with the residuals of `p`.
inline void reconstruct_list(const ParsedList& p, size_t u, size_t n,
                             std::span<const NodeId> ref_list,
                             std::vector<NodeId>& copied,
                             std::vector<NodeId>& out) {
  copied.clear();
  out.clear();
  if (p.degree == 0) return;
  if (p.ref > 0) {
    size_t pos = 0;
    for (size_t b = 0; b < p.blocks.size(); ++b) {
      if (pos + p.blocks[b] > ref_list.size()) {
        throw CorruptStream("node " + std::to_string(u) +
                            ": blocks exceed reference list");
      }
      if (b % 2 == 0) {
        copied.insert(copied.end(), ref_list.begin() + pos,
                      ref_list.begin() + pos + p.blocks[b]);
      }
      pos += p.blocks[b];
    }
  }
  out.reserve(p.degree);
  const uint64_t residuals = p.degree - p.copied;
  size_t ci = 0;  // next copied edge not yet merged
  auto emit_copied_upto = [&](uint64_t bound) {  // copies < bound
    while (ci < copied.size() && copied[ci] < bound) out.push_back(copied[ci++]);
  };
  if (residuals > 0) {
    const int64_t first = static_cast<int64_t>(u) + p.first_residual;
    if (first < 0 || static_cast<uint64_t>(first) >= n) {
      throw CorruptStream("node " + std::to_string(u) +
                          ": residual out of range");
    }
    uint64_t dest = static_cast<uint64_t>(first);
    emit_copied_upto(dest);
    if (ci < copied.size() && copied[ci] == dest) {
      throw CorruptStream("node " + std::to_string(u) +
                          ": residual collides with copied edge");
    }
    out.push_back(static_cast<NodeId>(dest));
    for (uint64_t d : p.deltas) {
      dest = dest + 1 + d;
      while (ci < copied.size() && copied[ci] <= dest) {
        out.push_back(copied[ci++]);
        ++dest;
      }
      if (dest >= n) {
        throw CorruptStream("node " + std::to_string(u) +
                            ": residual out of range");
      }
      out.push_back(static_cast<NodeId>(dest));
    }
  }
  emit_copied_upto(UINT64_MAX);
  for (size_t a = 1; a < out.size(); ++a) {
    if (out[a] <= out[a - 1]) {
      throw CorruptStream("node " + std::to_string(u) +
                          ": reconstructed list not increasing");
    }
  }
}

// Context id actually stored for a logical context under the model.
inline uint32_t stored_context(ContextModel model, uint32_t ctx) {
  return model == ContextModel::kSingle ? 0 : ctx;
}

inline uint32_t stored_context_count(ContextModel model) {
  return model == ContextModel::kSingle ? 1 : kNumContexts;
}

// Tokenizes every list of `g` with the given references (empty span: no
// references). `emit(u, stored_ctx, token)` is called in stream order.
template <class Emit>
void tokenize_graph(const Graph& g, std::span<const uint32_t> refs,
                    const EncoderParams& p, Emit&& emit) {
  ChunkState state;
  ListScratch scratch;
  for (size_t u = 0; u < g.num_nodes(); ++u) {
    if (p.chunk_size != 0 && u % p.chunk_size == 0) state = ChunkState{};
    const uint32_t r = refs.empty() ? 0 : refs[u];
    std::span<const NodeId> ref_list;
    if (r > 0) ref_list = g.neighbors(u - r);
    tokenize_list(p.hybrid, u, g.neighbors(u), ref_list, r, p.rle_threshold,
                  state, scratch,
                  [&](uint32_t ctx, const Token& t, int64_t) {
                    emit(u, stored_context(p.contexts, ctx), t);
                  });
  }
}

inline std::vector<Histogram> collect_histograms(
    const Graph& g, std::span<const uint32_t> refs, const EncoderParams& p) {
  std::vector<Histogram> h(stored_context_count(p.contexts));
  tokenize_graph(g, refs, p, [&](size_t, uint32_t ctx, const Token& t) {
    h[ctx].add(t.symbol);
  });
  return h;
}

}  // namespace zkr
