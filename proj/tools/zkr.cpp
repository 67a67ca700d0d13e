// zkr: command-line front end for the graph codec.
//
// Exit codes: 0 ok, 1 usage, 2 I/O, 3 corrupt input.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zkr/codec.hpp"
#include "zkr/graph.hpp"
#include "zkr/traverse.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kIo = 2, kCorrupt = 3 };

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading " + path);
  return data;
}

void write_file(const std::string& path, const std::vector<uint8_t>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("error writing " + path);
}

zkr::Graph load_graph(const std::string& path, const std::string& format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  zkr::Graph g = format == "csr" ? zkr::read_csr(in) : zkr::load_edge_list(in);
  if (in.bad()) throw IoError("error reading " + path);
  return g;
}

void save_graph(const std::string& path, const std::string& format,
                const zkr::Graph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path);
  if (format == "csr") {
    zkr::write_csr(out, g);
  } else {
    zkr::write_edge_list(out, g);
  }
  out.flush();
  if (!out) throw IoError("error writing " + path);
}

struct CodecFlags {
  std::string mode = "full";
  unsigned k = 4, i = 1, j = 0;
  uint32_t window = 32;
  std::optional<uint32_t> max_chain, chunk, rle_threshold;
  uint32_t iterations = 2;
  unsigned threads = 1;

  void add(CLI::App* app) {
    app->add_option("--mode", mode, "full (ANS) or list (random access)")
        ->check(CLI::IsMember({"full", "list"}));
    app->add_option("--k", k, "hybrid code: directly coded bits")->capture_default_str();
    app->add_option("--i", i, "hybrid code: leading mantissa bits")->capture_default_str();
    app->add_option("--j", j, "hybrid code: trailing mantissa bits")->capture_default_str();
    app->add_option("--window", window, "reference window W")->capture_default_str();
    app->add_option("--max-chain", max_chain, "list mode: max reference chain R (default 3)");
    app->add_option("--chunk", chunk, "list mode: chunk size C (default 32)");
    app->add_option("--rle-threshold", rle_threshold,
                    "list mode: zero-run threshold L' (default 3, 0 disables)");
    app->add_option("--iterations", iterations, "cost model iterations")
        ->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--threads", threads, "encoder threads")
        ->capture_default_str()->check(CLI::PositiveNumber);
  }

  zkr::EncoderParams params() const {
    zkr::EncoderParams p;
    if (mode == "list") {
      p = zkr::EncoderParams::list();
      if (max_chain) p.max_chain = *max_chain;
      if (chunk) p.chunk_size = *chunk;
      if (rle_threshold) p.rle_threshold = *rle_threshold;
    } else {
      p = zkr::EncoderParams::full();
      if (max_chain || chunk || rle_threshold) {
        throw UsageError("--max-chain, --chunk and --rle-threshold apply to list mode only");
      }
    }
    p.hybrid = {k, i, j};
    p.window = window;
    p.iterations = iterations;
    p.threads = threads;
    try {
      p.validate();
    } catch (const zkr::ContractError& e) {
      throw UsageError(e.what());
    }
    return p;
  }
};

int run_compress(const std::string& in, const std::string& out,
                 const std::string& format, const CodecFlags& flags) {
  const zkr::EncoderParams p = flags.params();
  zkr::Graph g = load_graph(in, format);
  const auto t0 = Clock::now();
  std::vector<uint8_t> bytes = zkr::encode_graph(g, p);
  const double secs = seconds_since(t0);
  write_file(out, bytes);
  const double m = static_cast<double>(g.num_edges());
  std::printf("nodes: %zu\nedges: %llu\nbytes: %zu\n", g.num_nodes(),
              static_cast<unsigned long long>(g.num_edges()), bytes.size());
  if (m > 0) std::printf("bits/edge: %.4f\n", 8.0 * bytes.size() / m);
  std::printf("seconds: %.3f\n", secs);
  if (secs > 0) std::printf("edges/s: %.0f\n", m / secs);
  return kOk;
}

int run_decompress(const std::string& in, const std::string& out,
                   const std::string& format) {
  std::vector<uint8_t> bytes = read_file(in);
  const auto t0 = Clock::now();
  zkr::Graph g = zkr::decode_graph(bytes);
  const double secs = seconds_since(t0);
  save_graph(out, format, g);
  std::fprintf(stderr, "decoded %llu edges in %.3f s\n",
               static_cast<unsigned long long>(g.num_edges()), secs);
  return kOk;
}

int run_ls(const std::string& in, uint64_t u) {
  zkr::CompressedGraph h = zkr::CompressedGraph::open(read_file(in));
  const auto t0 = Clock::now();
  std::vector<zkr::NodeId> list = h.neighbors(u);
  const double secs = seconds_since(t0);
  std::string text;
  for (zkr::NodeId v : list) {
    text += std::to_string(v);
    text += '\n';
  }
  std::fwrite(text.data(), 1, text.size(), stdout);
  std::fprintf(stderr, "%.2f us/list\n", secs * 1e6);
  return kOk;
}

int run_stats(const std::string& in) {
  std::vector<uint8_t> bytes = read_file(in);
  const zkr::Header h = zkr::read_header(bytes);
  const zkr::BitStats s = zkr::stats(bytes);
  const double m = static_cast<double>(s.edges);
  auto row = [&](const char* name, uint64_t bits) {
    std::printf("%-16s %12llu", name, static_cast<unsigned long long>(bits));
    if (m > 0) std::printf("  %8.4f bpe", bits / m);
    std::printf("\n");
  };
  std::printf("mode: %s\nnodes: %llu\nedges: %llu\n",
              h.mode == zkr::Mode::kFull ? "full" : "list",
              static_cast<unsigned long long>(s.nodes),
              static_cast<unsigned long long>(s.edges));
  row("header", s.header_bits);
  row("distributions", s.distribution_bits);
  row("chunk_index", s.index_bits);
  row("coder_state", s.coder_state_bits);
  for (size_t k = 0; k < zkr::kNumStreams; ++k) {
    row(zkr::stream_name(static_cast<zkr::Stream>(k)), s.stream_bits[k]);
  }
  row("padding", s.padding_bits);
  row("total", s.total_bits);
  return kOk;
}

int run_gen(const std::string& out, const std::string& format, uint64_t nodes,
            uint64_t seed, double avg_degree) {
  if (nodes == 0) throw UsageError("--nodes must be >= 1");
  zkr::GeneratorOptions opt;
  opt.avg_degree = avg_degree;
  zkr::Graph g = zkr::generate_copying_graph(nodes, seed, opt);
  save_graph(out, format, g);
  std::printf("nodes: %zu\nedges: %llu\n", g.num_nodes(),
              static_cast<unsigned long long>(g.num_edges()));
  return kOk;
}

// Whole-graph traversal on the compressed handle and on the decoded graph.
int run_traversal(const std::string& in, bool depth_first) {
  std::vector<uint8_t> bytes = read_file(in);
  zkr::Graph g = zkr::decode_graph(bytes);
  zkr::CompressedGraph h = zkr::CompressedGraph::open(std::move(bytes));
  auto run = [&](const auto& adj) {
    const auto t0 = Clock::now();
    auto order = depth_first ? zkr::dfs_all(adj) : zkr::bfs_all(adj);
    return std::pair(std::move(order), seconds_since(t0));
  };
  auto [plain, plain_s] = run(zkr::adjacency(g));
  auto [comp, comp_s] = run(zkr::adjacency(h));
  const double n = std::max<double>(1, g.num_nodes());
  std::printf("%s over %zu nodes\n", depth_first ? "dfs" : "bfs", g.num_nodes());
  std::printf("uncompressed: %.3f s (%.3f us/list)\n", plain_s, plain_s * 1e6 / n);
  std::printf("compressed:   %.3f s (%.3f us/list)\n", comp_s, comp_s * 1e6 / n);
  std::printf("orders match: %s\n", plain == comp ? "yes" : "no");
  return plain == comp ? kOk : kCorrupt;
}

int run_edgesum(const std::string& in, unsigned max_threads) {
  zkr::CompressedGraph h = zkr::CompressedGraph::open(read_file(in));
  double base = 0;
  uint64_t expected = 0;
  for (unsigned t = 1; t <= max_threads; t *= 2) {
    const auto t0 = Clock::now();
    const uint64_t sum = zkr::edge_sum_parallel(h, t);
    const double secs = seconds_since(t0);
    if (t == 1) {
      base = secs;
      expected = sum;
    }
    std::printf("threads %2u: sum %llu  %.3f s  speedup %.2fx\n", t,
                static_cast<unsigned long long>(sum), secs,
                secs > 0 ? base / secs : 0.0);
    if (sum != expected) {
      std::fprintf(stderr, "error: sum differs across thread counts\n");
      return kCorrupt;
    }
    if (t == max_threads) break;
    if (t * 2 > max_threads) t = max_threads / 2;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zkr: lossless graph compression with random access"};
  app.require_subcommand(1);

  std::string in, out, format = "edges";
  CodecFlags flags;
  uint64_t node = 0, nodes = 0, seed = 1;
  double avg_degree = zkr::GeneratorOptions{}.avg_degree;
  unsigned threads = 4;

  auto* compress = app.add_subcommand("compress", "encode a graph");
  compress->add_option("input", in, "edge list or CSR file")->required();
  compress->add_option("output", out, "compressed file")->required();
  compress->add_option("--format", format, "input format")
      ->check(CLI::IsMember({"edges", "csr"}));
  compress->add_option("--seed", seed, "unused; accepted for uniformity");
  flags.add(compress);

  auto* decompress = app.add_subcommand("decompress", "decode to a graph file");
  decompress->add_option("input", in)->required();
  decompress->add_option("output", out)->required();
  decompress->add_option("--format", format, "output format")
      ->check(CLI::IsMember({"edges", "csr"}));

  auto* ls = app.add_subcommand("ls", "print one adjacency list (list mode)");
  ls->add_option("input", in)->required();
  ls->add_option("node", node)->required();

  auto* st = app.add_subcommand("stats", "bit breakdown by stream");
  st->add_option("input", in)->required();

  auto* gen = app.add_subcommand("gen", "generate a synthetic web-like graph");
  gen->add_option("output", out)->required();
  gen->add_option("--nodes", nodes)->required();
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("--avg-degree", avg_degree)->capture_default_str();
  gen->add_option("--format", format)->check(CLI::IsMember({"edges", "csr"}));

  auto* bfs = app.add_subcommand("bench-bfs", "time a whole-graph BFS");
  bfs->add_option("input", in)->required();
  auto* dfs = app.add_subcommand("bench-dfs", "time a whole-graph DFS");
  dfs->add_option("input", in)->required();
  auto* es = app.add_subcommand("bench-edgesum", "parallel sum of edge targets");
  es->add_option("input", in)->required();
  es->add_option("--threads", threads, "largest thread count")
      ->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*compress) return run_compress(in, out, format, flags);
    if (*decompress) return run_decompress(in, out, format);
    if (*ls) return run_ls(in, node);
    if (*st) return run_stats(in);
    if (*gen) return run_gen(out, format, nodes, seed, avg_degree);
    if (*bfs) return run_traversal(in, false);
    if (*dfs) return run_traversal(in, true);
    if (*es) return run_edgesum(in, threads);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  } catch (const zkr::UnsupportedOperation& e) {
    std::fprintf(stderr, "error: unsupported operation: %s\n", e.what());
    return kUsage;
  } catch (const zkr::RangeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const zkr::ContractError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const zkr::Error& e) {
    // Corrupt streams, unparsable or invalid input graphs.
    std::fprintf(stderr, "error: %s\n", e.what());
    return kCorrupt;
  }
  return kUsage;
}
