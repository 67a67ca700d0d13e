#pragma once

// Traversals over any adjacency provider. An adapter exposes num_nodes() and
// neighbors(u, std::vector<NodeId>&), filling the buffer in stored order.

#include <cstdint>
#include <deque>
#include <thread>
#include <vector>

#include "zkr/codec.hpp"
#include "zkr/error.hpp"
#include "zkr/graph.hpp"

namespace zkr {

struct GraphAdjacency {
  const Graph* g;
  size_t num_nodes() const { return g->num_nodes(); }
  void neighbors(size_t u, std::vector<NodeId>& out) const {
    auto l = g->neighbors(u);
    out.assign(l.begin(), l.end());
  }
};

struct HandleAdjacency {
  const CompressedGraph* h;
  size_t num_nodes() const { return h->num_nodes(); }
  void neighbors(size_t u, std::vector<NodeId>& out) const {
    h->neighbors(u, out);
  }
};

inline GraphAdjacency adjacency(const Graph& g) { return {&g}; }
inline HandleAdjacency adjacency(const CompressedGraph& h) { return {&h}; }

namespace detail {

inline void check_source(size_t source, size_t n) {
  if (source >= n) {
    throw RangeError("source " + std::to_string(source) + " out of range [0, " +
                     std::to_string(n) + ")");
  }
}

template <class Adj>
void bfs_from(const Adj& adj, size_t source, std::vector<uint8_t>& seen,
              std::vector<NodeId>& order, std::vector<NodeId>& buf) {
  std::deque<NodeId> queue{static_cast<NodeId>(source)};
  seen[source] = 1;
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    order.push_back(u);
    adj.neighbors(u, buf);
    for (NodeId v : buf) {
      if (!seen[v]) {
        seen[v] = 1;
        queue.push_back(v);
      }
    }
  }
}

// Preorder DFS with an explicit stack. Neighbors are pushed in reverse so
// they are entered in stored order.
template <class Adj>
void dfs_from(const Adj& adj, size_t source, std::vector<uint8_t>& seen,
              std::vector<NodeId>& order, std::vector<NodeId>& buf) {
  std::vector<NodeId> stack{static_cast<NodeId>(source)};
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    if (seen[u]) continue;
    seen[u] = 1;
    order.push_back(u);
    adj.neighbors(u, buf);
    for (size_t a = buf.size(); a-- > 0;) {
      if (!seen[buf[a]]) stack.push_back(buf[a]);
    }
  }
}

template <class Adj, class Visit>
std::vector<NodeId> traverse_all(const Adj& adj, Visit visit) {
  const size_t n = adj.num_nodes();
  std::vector<uint8_t> seen(n, 0);
  std::vector<NodeId> order, buf;
  order.reserve(n);
  for (size_t s = 0; s < n; ++s) {
    if (!seen[s]) visit(adj, s, seen, order, buf);
  }
  return order;
}

}  // namespace detail

template <class Adj>
std::vector<NodeId> bfs(const Adj& adj, size_t source) {
  detail::check_source(source, adj.num_nodes());
  std::vector<uint8_t> seen(adj.num_nodes(), 0);
  std::vector<NodeId> order, buf;
  detail::bfs_from(adj, source, seen, order, buf);
  return order;
}

template <class Adj>
std::vector<NodeId> dfs(const Adj& adj, size_t source) {
  detail::check_source(source, adj.num_nodes());
  std::vector<uint8_t> seen(adj.num_nodes(), 0);
  std::vector<NodeId> order, buf;
  detail::dfs_from(adj, source, seen, order, buf);
  return order;
}

// Whole-graph variants: restart from the lowest unvisited node, so every
// list is read exactly once.
template <class Adj>
std::vector<NodeId> bfs_all(const Adj& adj) {
  return detail::traverse_all(adj, [](auto&&... a) { detail::bfs_from(a...); });
}

template <class Adj>
std::vector<NodeId> dfs_all(const Adj& adj) {
  return detail::traverse_all(adj, [](auto&&... a) { detail::dfs_from(a...); });
}

// Sum of destination ids over all edges. Chunks are split into contiguous
// ranges, one per worker; partial sums are added in worker order.
inline uint64_t edge_sum_parallel(const CompressedGraph& h, unsigned threads) {
  if (threads == 0) throw ContractError("edge_sum_parallel: threads must be >= 1");
  const size_t chunks = h.num_chunks();
  threads = static_cast<unsigned>(std::min<size_t>(threads, std::max<size_t>(chunks, 1)));
  std::vector<uint64_t> partial(threads, 0);
  auto work = [&](unsigned t) {
    const size_t lo = chunks * t / threads, hi = chunks * (t + 1) / threads;
    uint64_t s = 0;
    h.for_each_list(lo, hi, [&](size_t, std::span<const NodeId> list) {
      for (NodeId v : list) s += v;
    });
    partial[t] = s;
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  uint64_t sum = 0;
  for (uint64_t s : partial) sum += s;
  return sum;
}

inline uint64_t edge_sum(const Graph& g) {
  uint64_t s = 0;
  for (NodeId v : g.targets()) s += v;
  return s;
}

}  // namespace zkr
