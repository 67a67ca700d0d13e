#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "zkr/codec.hpp"

using namespace zkr;

namespace {

EncoderParams params(Mode m) {
  return m == Mode::kFull ? EncoderParams::full() : EncoderParams::list();
}

void expect_conserved(const std::vector<uint8_t>& bytes) {
  BitStats s = stats(bytes);
  EXPECT_EQ(s.sum(), s.total_bits);
  EXPECT_EQ(s.total_bits, bytes.size() * 8);
}

void expect_random_access(const Graph& g, const std::vector<uint8_t>& bytes) {
  CompressedGraph h = CompressedGraph::open(bytes);
  ASSERT_EQ(h.num_nodes(), g.num_nodes());
  ASSERT_EQ(h.num_edges(), g.num_edges());
  for (size_t u = 0; u < g.num_nodes(); ++u) {
    auto l = g.neighbors(u);
    ASSERT_EQ(h.neighbors(u), std::vector<NodeId>(l.begin(), l.end())) << "node " << u;
    ASSERT_EQ(h.degree(u), l.size());
  }
}

}  // namespace

TEST(Codec, EmptyGraph) {
  for (Mode m : {Mode::kFull, Mode::kList}) {
    auto bytes = encode_graph(Graph(), params(m));
    EXPECT_EQ(decode_graph(bytes), Graph());
    BitStats s = stats(bytes);
    EXPECT_EQ(s.sum(), s.total_bits);
    EXPECT_EQ(s.payload_bits(), 0u);
    EXPECT_EQ(s.padding_bits, 0u);
    EXPECT_GT(s.header_bits, 0u);
  }
}

TEST(Codec, WorkedExampleRoundtrip) {
  Graph g = fixtures::fig1_graph();
  for (Mode m : {Mode::kFull, Mode::kList}) {
    auto bytes = encode_graph(g, params(m));
    EXPECT_EQ(decode_graph(bytes), g);
    std::vector<uint32_t> refs(g.num_nodes(), 0);
    refs[7] = 1;
    auto forced = encode_graph_with_references(g, refs, params(m));
    EXPECT_EQ(decode_graph(forced), g);
  }
}

TEST(Codec, CorpusRoundtripBothModes) {
  for (size_t k = 0; k < 64; ++k) {
    Graph g = fixtures::corpus_graph(k, 600);
    for (Mode m : {Mode::kFull, Mode::kList}) {
      auto bytes = encode_graph(g, params(m));
      ASSERT_EQ(decode_graph(bytes), g) << "fixture " << k;
      expect_conserved(bytes);
      if (m == Mode::kList) expect_random_access(g, bytes);
    }
  }
}

TEST(Codec, SingleContextAndOtherParameters) {
  Graph g = generate_copying_graph(1500, 8);
  std::vector<EncoderParams> variants;
  for (Mode m : {Mode::kFull, Mode::kList}) {
    EncoderParams p = params(m);
    p.contexts = ContextModel::kSingle;
    variants.push_back(p);
    p = params(m);
    p.hybrid = {5, 2, 1};
    p.window = 7;
    p.iterations = 3;
    variants.push_back(p);
    p = params(m);
    p.window = 0;
    variants.push_back(p);
  }
  EncoderParams odd = EncoderParams::list();
  odd.chunk_size = 1;
  odd.max_chain = 1;
  odd.rle_threshold = 1;
  variants.push_back(odd);
  odd.chunk_size = 5000;
  odd.max_chain = 10;
  variants.push_back(odd);
  for (const auto& p : variants) {
    auto bytes = encode_graph(g, p);
    ASSERT_EQ(decode_graph(bytes), g);
    Header h = read_header(bytes);
    EXPECT_EQ(h.mode, p.mode);
    EXPECT_EQ(h.hybrid, p.hybrid);
    EXPECT_EQ(h.window, p.window);
    EXPECT_EQ(h.chunk_size, p.chunk_size);
    EXPECT_EQ(h.rle_threshold, p.rle_threshold);
    EXPECT_EQ(h.context_model(), p.contexts);
    expect_conserved(bytes);
    if (p.mode == Mode::kList) expect_random_access(g, bytes);
  }
}

TEST(Codec, ZeroRunsDoNotChangeTheGraph) {
  std::mt19937_64 rng(4);
  Graph g = fixtures::runs_graph(3000, rng);
  EncoderParams with = EncoderParams::list(), without = EncoderParams::list();
  without.rle_threshold = 0;
  auto a = encode_graph(g, with), b = encode_graph(g, without);
  EXPECT_EQ(decode_graph(a), decode_graph(b));
  EXPECT_EQ(decode_graph(a), g);
  EXPECT_LT(a.size(), b.size());
}

TEST(Codec, TruncationIsAlwaysCorrupt) {
  Graph g = generate_copying_graph(400, 2);
  for (Mode m : {Mode::kFull, Mode::kList}) {
    auto bytes = encode_graph(g, params(m));
    for (size_t cut = 0; cut < bytes.size(); cut += 1 + cut / 16) {
      std::vector<uint8_t> part(bytes.begin(), bytes.begin() + cut);
      EXPECT_THROW(decode_graph(part), CorruptStream) << "cut " << cut;
    }
    std::vector<uint8_t> longer = bytes;
    longer.push_back(0);
    EXPECT_THROW(decode_graph(longer), CorruptStream);
  }
}

TEST(Codec, BitFlipsNeverCrash) {
  Graph g = generate_copying_graph(300, 12);
  std::mt19937_64 rng(6);
  for (Mode m : {Mode::kFull, Mode::kList}) {
    auto bytes = encode_graph(g, params(m));
    for (int trial = 0; trial < 400; ++trial) {
      auto bad = bytes;
      bad[rng() % bad.size()] ^= static_cast<uint8_t>(1u << (rng() % 8));
      try {
        Graph out = decode_graph(bad);
        validate(out);
      } catch (const Error&) {
      }
    }
  }
}

TEST(Codec, HeaderErrors) {
  auto bytes = encode_graph(fixtures::fig1_graph(), EncoderParams::list());
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_graph(bad), CorruptHeader);
  bad = bytes;
  bad[4] = 2;
  EXPECT_THROW(decode_graph(bad), CorruptHeader);
  bad = bytes;
  bad[5] = 7;
  EXPECT_THROW(decode_graph(bad), CorruptHeader);
}

TEST(Codec, ReferenceContract) {
  Graph g = fixtures::fig1_graph();
  EncoderParams p = EncoderParams::list();
  std::vector<uint32_t> refs(g.num_nodes(), 0);
  refs[7] = 2;  // node 5 is empty
  EXPECT_THROW(encode_graph_with_references(g, refs, p), ContractError);
  refs[7] = 8;
  EXPECT_THROW(encode_graph_with_references(g, refs, p), ContractError);
  refs[7] = 0;
  refs[3] = 1;  // empty list with a reference
  EXPECT_THROW(encode_graph_with_references(g, refs, p), ContractError);
  std::vector<uint32_t> chain(6, 1);
  chain[0] = 0;
  Graph line = Graph::from_lists({{1}, {1}, {1}, {1}, {1}, {1}});
  EXPECT_THROW(encode_graph_with_references(line, chain, p), ContractError);
  EXPECT_NO_THROW(encode_graph_with_references(line, chain, EncoderParams::full()));
  EXPECT_THROW(encode_graph(Graph::from_lists({{0, 0}}), p), ValidationError);
}

TEST(RandomAccess, FullModeIsUnsupported) {
  auto bytes = encode_graph(fixtures::fig1_graph(), EncoderParams::full());
  EXPECT_THROW(CompressedGraph::open(bytes), UnsupportedOperation);
}

TEST(RandomAccess, RangeAndChains) {
  Graph g = generate_copying_graph(5000, 31);
  auto bytes = encode_graph(g, EncoderParams::list());
  CompressedGraph h = CompressedGraph::open(bytes);
  EXPECT_THROW(h.neighbors(g.num_nodes()), RangeError);
  // Walk every chain through the stored reference numbers.
  uint32_t longest = 0;
  for (size_t u = 0; u < h.num_nodes(); ++u) {
    uint32_t hops = 0;
    for (size_t v = u; h.reference(v); v -= h.reference(v)) ++hops;
    longest = std::max(longest, hops);
  }
  EXPECT_EQ(longest, 3u);  // chains of length R occur and decode
  expect_random_access(g, bytes);
  detail::Container c = detail::parse_container(bytes);
  EXPECT_EQ(c.chunk_offsets.size(), h.num_chunks());
  for (size_t k = 1; k < c.chunk_offsets.size(); ++k) {
    EXPECT_GT(c.chunk_offsets[k], c.chunk_offsets[k - 1]);
  }
}

TEST(RandomAccess, ForEachListMatchesDecode) {
  Graph g = generate_copying_graph(3000, 4);
  CompressedGraph h = CompressedGraph::open(encode_graph(g, EncoderParams::list()));
  for (auto [lo, hi] : {std::pair<size_t, size_t>{0, 1000}, {7, 20}, {50, 94}}) {
    size_t next = h.header().chunk_start(lo);
    h.for_each_list(lo, hi, [&](size_t u, std::span<const NodeId> l) {
      ASSERT_EQ(u, next++);
      ASSERT_TRUE(std::equal(l.begin(), l.end(), g.neighbors(u).begin(), g.neighbors(u).end()));
    });
    EXPECT_EQ(next, h.header().chunk_end(std::min(hi, h.num_chunks()) - 1));
  }
}

TEST(RandomAccess, MovedHandleStillWorks) {
  Graph g = generate_copying_graph(500, 4);
  CompressedGraph a = CompressedGraph::open(encode_graph(g, EncoderParams::list()));
  CompressedGraph b = std::move(a);
  expect_random_access(g, encode_graph(g, EncoderParams::list()));
  auto l = g.neighbors(321);
  EXPECT_EQ(b.neighbors(321), std::vector<NodeId>(l.begin(), l.end()));
}

TEST(Stats, ResidualsDominateOnCopyingGraphs) {
  Graph g = generate_copying_graph(20000, 1);
  for (Mode m : {Mode::kFull, Mode::kList}) {
    BitStats s = stats(encode_graph(g, params(m)));
    const double residual = s.stream_bits[size_t(Stream::kFirstResidual)] +
                            s.stream_bits[size_t(Stream::kResidual)];
    EXPECT_GT(residual, 0.4 * s.payload_bits());
    EXPECT_EQ(s.edges, g.num_edges());
  }
}

TEST(Codec, BeatsDeltaOnlyBaseline) {
  Graph g = generate_copying_graph(20000, 2);
  EncoderParams base = EncoderParams::full();
  base.window = 0;
  base.contexts = ContextModel::kSingle;
  const size_t baseline = encode_graph(g, base).size();
  const size_t full = encode_graph(g, EncoderParams::full()).size();
  EXPECT_LT(full, baseline);
  EXPECT_LT(full, baseline / 2);
}
