#pragma once

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "zkr/error.hpp"

namespace zkr {

using NodeId = uint32_t;

// Immutable directed graph in CSR form. Each adjacency list is strictly
// increasing and every target lies in [0, n).
class Graph {
 public:
  Graph() : offsets_{0} {}

  Graph(std::vector<uint64_t> offsets, std::vector<NodeId> targets)
      : offsets_(std::move(offsets)), targets_(std::move(targets)) {
    if (offsets_.empty()) offsets_.push_back(0);
  }

  static Graph from_lists(const std::vector<std::vector<NodeId>>& lists) {
    std::vector<uint64_t> offsets{0};
    std::vector<NodeId> targets;
    for (const auto& l : lists) {
      targets.insert(targets.end(), l.begin(), l.end());
      offsets.push_back(targets.size());
    }
    return Graph(std::move(offsets), std::move(targets));
  }

  size_t num_nodes() const { return offsets_.size() - 1; }
  uint64_t num_edges() const { return offsets_.back(); }

  std::span<const NodeId> neighbors(size_t u) const {
    return {targets_.data() + offsets_[u], targets_.data() + offsets_[u + 1]};
  }
  size_t degree(size_t u) const { return offsets_[u + 1] - offsets_[u]; }

  const std::vector<uint64_t>& offsets() const { return offsets_; }
  const std::vector<NodeId>& targets() const { return targets_; }

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<uint64_t> offsets_;
  std::vector<NodeId> targets_;
};

inline void validate(const Graph& g) {
  const auto& off = g.offsets();
  if (off.empty() || off.front() != 0) {
    throw ValidationError("offsets must start at 0");
  }
  if (off.back() != g.targets().size()) {
    throw ValidationError("offsets do not match edge count");
  }
  const size_t n = g.num_nodes();
  for (size_t u = 0; u < n; ++u) {
    if (off[u + 1] < off[u]) {
      throw ValidationError("offsets decrease at node " + std::to_string(u));
    }
    auto list = g.neighbors(u);
    for (size_t a = 0; a < list.size(); ++a) {
      if (list[a] >= n) {
        throw ValidationError("node " + std::to_string(u) + ": target " +
                              std::to_string(list[a]) + " out of range");
      }
      if (a > 0 && list[a] == list[a - 1]) {
        throw ValidationError("node " + std::to_string(u) +
                              ": duplicate target " + std::to_string(list[a]));
      }
      if (a > 0 && list[a] < list[a - 1]) {
        throw ValidationError("node " + std::to_string(u) +
                              ": targets not sorted");
      }
    }
  }
}

// Text edge list: one "src dst" pair per line. Lines starting with '#' are
// comments, except "# nodes: N" which fixes the node count (needed to keep
// trailing isolated nodes across a write/load cycle).
inline Graph load_edge_list(std::istream& in) {
  std::vector<std::pair<uint64_t, uint64_t>> edges;
  uint64_t n = 0;
  std::string line;
  size_t lineno = 0;
  constexpr uint64_t kIdLimit = uint64_t{1} << 48;
  while (std::getline(in, line)) {
    ++lineno;
    size_t p = line.find_first_not_of(" \t\r");
    if (p == std::string::npos) continue;
    if (line[p] == '#') {
      const std::string tag = "# nodes:";
      if (line.compare(p, tag.size(), tag) == 0) {
        try {
          n = std::max<uint64_t>(n, std::stoull(line.substr(p + tag.size())));
        } catch (const std::exception&) {
          throw ParseError("line " + std::to_string(lineno) +
                           ": bad node count");
        }
      }
      continue;
    }
    const char* s = line.c_str() + p;
    char* end = nullptr;
    errno = 0;
    auto parse = [&](uint64_t& out) {
      while (*s == ' ' || *s == '\t') ++s;
      if (*s < '0' || *s > '9') return false;
      out = std::strtoull(s, &end, 10);
      if (errno == ERANGE) return false;
      s = end;
      return true;
    };
    uint64_t src = 0, dst = 0;
    if (!parse(src) || !parse(dst)) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": expected two nonnegative integers");
    }
    while (*s == ' ' || *s == '\t' || *s == '\r') ++s;
    if (*s != '\0') {
      throw ParseError("line " + std::to_string(lineno) + ": trailing input");
    }
    if (src >= kIdLimit || dst >= kIdLimit) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": node id exceeds 2^48");
    }
    if (src >= (uint64_t{1} << 32) - 1 || dst >= (uint64_t{1} << 32) - 1) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": node id exceeds the 32-bit node range");
    }
    edges.emplace_back(src, dst);
    n = std::max(n, std::max(src, dst) + 1);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  std::vector<uint64_t> offsets(n + 1, 0);
  std::vector<NodeId> targets;
  targets.reserve(edges.size());
  for (auto [s, d] : edges) {
    ++offsets[s + 1];
    targets.push_back(static_cast<NodeId>(d));
  }
  for (size_t u = 0; u < n; ++u) offsets[u + 1] += offsets[u];
  return Graph(std::move(offsets), std::move(targets));
}

inline void write_edge_list(std::ostream& out, const Graph& g) {
  out << "# nodes: " << g.num_nodes() << '\n';
  std::string buf;
  for (size_t u = 0; u < g.num_nodes(); ++u) {
    for (NodeId v : g.neighbors(u)) {
      buf += std::to_string(u);
      buf += ' ';
      buf += std::to_string(v);
      buf += '\n';
    }
    if (buf.size() > (1 << 16)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
}

// Binary CSR cache: magic "ZKCSR01\0", u64 n, u64 m, n+1 u64 offsets, m u64
// targets, all little-endian.
inline constexpr char kCsrMagic[8] = {'Z', 'K', 'C', 'S', 'R', '0', '1', '\0'};

inline void write_csr(std::ostream& out, const Graph& g) {
  auto put = [&](uint64_t v) {
    uint8_t b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<uint8_t>(v >> (8 * k));
    out.write(reinterpret_cast<const char*>(b), 8);
  };
  out.write(kCsrMagic, 8);
  put(g.num_nodes());
  put(g.num_edges());
  for (uint64_t o : g.offsets()) put(o);
  for (NodeId t : g.targets()) put(t);
}

inline Graph read_csr(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCsrMagic, 8) != 0) {
    throw ParseError("not a CSR cache (bad magic)");
  }
  auto get = [&]() {
    uint8_t b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) {
      throw ParseError("truncated CSR cache");
    }
    uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= uint64_t{b[k]} << (8 * k);
    return v;
  };
  const uint64_t n = get(), m = get();
  if (n >= (uint64_t{1} << 32) || m >= (uint64_t{1} << 40)) {
    throw ParseError("CSR cache sizes out of range");
  }
  std::vector<uint64_t> offsets(n + 1);
  for (auto& o : offsets) o = get();
  std::vector<NodeId> targets(m);
  for (auto& t : targets) {
    uint64_t v = get();
    if (v >= n) throw ParseError("CSR cache target out of range");
    t = static_cast<NodeId>(v);
  }
  Graph g(std::move(offsets), std::move(targets));
  try {
    validate(g);
  } catch (const ValidationError& e) {
    throw ParseError(std::string("invalid CSR cache: ") + e.what());
  }
  return g;
}

struct GeneratorOptions {
  double avg_degree = 16.0;          // mean degree of a list built from scratch
  double copy_probability = 0.9;     // node copies from a recent list
  double keep_probability = 0.95;    // per copied edge
  double long_range_fraction = 0.3;  // new edges that jump anywhere
  double fresh_after_copy = 1.0;     // mean new edges of a copying node; < 0: fill to degree
};

// Web-like synthetic graph: most nodes copy a contiguous slice of a recent
// node's list (similarity) and add residual edges with geometric gaps near a
// random anchor (locality). Deterministic for a given seed.
inline Graph generate_copying_graph(size_t n, uint64_t seed,
                                    const GeneratorOptions& opt = {}) {
  if (n == 0) throw ContractError("generate_copying_graph: n must be >= 1");
  std::mt19937_64 rng(seed);
  auto uniform = [&]() {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
  };
  auto below = [&](uint64_t bound) { return bound ? rng() % bound : 0; };
  auto geometric = [&](double mean) {
    // Number of failures before a success with p = 1 / (1 + mean).
    const double p = 1.0 / (1.0 + mean);
    const double u = std::max(uniform(), 1e-300);
    return static_cast<uint64_t>(std::floor(std::log(u) / std::log1p(-p)));
  };

  std::vector<std::vector<NodeId>> lists(n);
  std::vector<NodeId> scratch;
  for (size_t u = 0; u < n; ++u) {
    scratch.clear();
    const uint64_t target_degree =
        std::min<uint64_t>(geometric(opt.avg_degree), n - 1);
    if (u > 0 && uniform() < opt.copy_probability) {
      // Prototype among the previous few nodes, biased towards u - 1.
      const size_t back = 1 + std::min<uint64_t>(geometric(1.5), u - 1);
      const auto& proto = lists[u - back];
      if (!proto.empty()) {
        size_t lo = below(std::max<size_t>(proto.size() / 4, 1));
        size_t hi = proto.size() - below(std::max<size_t>(proto.size() / 4, 1));
        if (hi <= lo) hi = proto.size();
        for (size_t a = lo; a < hi; ++a) {
          if (uniform() < opt.keep_probability) scratch.push_back(proto[a]);
        }
      }
    }
    const bool copied = !scratch.empty();
    uint64_t fresh;
    if (copied && opt.fresh_after_copy >= 0) {
      fresh = geometric(opt.fresh_after_copy);
    } else {
      fresh = target_degree > scratch.size() ? target_degree - scratch.size()
                                             : below(3);
    }
    uint64_t anchor = u > 64 ? u - below(64) : below(std::min<size_t>(n, 64));
    for (uint64_t e = 0; e < fresh; ++e) {
      if (uniform() < opt.long_range_fraction) {
        scratch.push_back(static_cast<NodeId>(below(n)));
      } else {
        anchor += 1 + geometric(2.0);
        if (anchor >= n) anchor = below(n);
        scratch.push_back(static_cast<NodeId>(anchor));
      }
    }
    std::sort(scratch.begin(), scratch.end());
    scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
    // No self loops.
    scratch.erase(std::remove(scratch.begin(), scratch.end(), NodeId(u)),
                  scratch.end());
    lists[u] = scratch;
  }
  return Graph::from_lists(lists);
}

}  // namespace zkr
