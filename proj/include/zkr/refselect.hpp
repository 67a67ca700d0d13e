#pragma once

// Reference selection. Candidate arcs u -> u - r (r in [1, W]) are weighted by
// the estimated bits saved. Without a chain bound the per-node argmax is
// optimal. With a bound R the optimal R-bounded sub-forest of that argmax
// forest is computed by dynamic programming and then greedily extended with
// the remaining arcs, which keeps a (1 - 1/(R+1)) approximation of the best
// bounded forest over all candidates.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <span>
#include <thread>
#include <tuple>
#include <vector>

#include "zkr/entropy.hpp"
#include "zkr/graph.hpp"
#include "zkr/listcode.hpp"

namespace zkr {

struct Candidate {
  uint32_t r = 0;
  double gain = 0;
};

// Per node, candidates in increasing r with strictly positive gain.
using CandidateArcs = std::vector<std::vector<Candidate>>;

struct ReferenceForest {
  std::vector<uint32_t> ref;   // 0 = no reference
  std::vector<double> weight;  // gain of the chosen arc, 0 without one

  explicit ReferenceForest(size_t n = 0) : ref(n, 0), weight(n, 0.0) {}

  size_t size() const { return ref.size(); }

  double total_weight() const {
    double w = 0;
    for (size_t u = 0; u < ref.size(); ++u) {
      if (ref[u]) w += weight[u];
    }
    return w;
  }

  // Hops needed to resolve each node's list.
  std::vector<uint32_t> chain_lengths() const {
    std::vector<uint32_t> depth(ref.size(), 0);
    for (size_t u = 0; u < ref.size(); ++u) {
      if (ref[u]) depth[u] = depth[u - ref[u]] + 1;
    }
    return depth;
  }

  uint32_t longest_chain() const {
    auto d = chain_lengths();
    return d.empty() ? 0 : *std::max_element(d.begin(), d.end());
  }
};

// Estimated bits of u's list body (reference, blocks, residuals) when coded
// against reference r (0 = explicit). Zero-run savings are not modelled.
inline double list_cost(const Graph& g, const HybridConfig& cfg,
                        const CostModel& model, ContextModel contexts,
                        size_t u, uint32_t r, uint32_t ref_selector,
                        ListScratch& scratch) {
  double bits = 0;
  std::span<const NodeId> ref_list;
  if (r > 0) ref_list = g.neighbors(u - r);
  tokenize_list_body(cfg, u, g.neighbors(u), ref_list, r, 0, ref_selector,
                     scratch, [&](uint32_t ctx, const Token& t, int64_t) {
                       bits += model.cost(stored_context(contexts, ctx), t);
                     });
  return bits;
}

namespace detail {

template <class Fn>
void parallel_for(size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, n ? n : 1));
  if (threads == 1) {
    fn(size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  const size_t step = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const size_t lo = std::min(n, t * step), hi = std::min(n, lo + step);
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

// `ref_selectors[u]` is the reference-context selector assumed for u (empty
// span: all zero).
inline CandidateArcs build_candidates(const Graph& g, uint32_t window,
                                      const HybridConfig& cfg,
                                      const CostModel& model,
                                      ContextModel contexts,
                                      std::span<const uint32_t> ref_selectors,
                                      unsigned threads = 1) {
  const size_t n = g.num_nodes();
  CandidateArcs arcs(n);
  detail::parallel_for(n, threads, [&](size_t lo, size_t hi) {
    ListScratch scratch;
    for (size_t u = lo; u < hi; ++u) {
      if (g.degree(u) == 0) continue;
      const uint32_t sel = ref_selectors.empty() ? 0 : ref_selectors[u];
      const double explicit_bits =
          list_cost(g, cfg, model, contexts, u, 0, sel, scratch);
      const size_t max_r = std::min<size_t>(window, u);
      for (uint32_t r = 1; r <= max_r; ++r) {
        if (g.degree(u - r) == 0) continue;
        const double gain =
            explicit_bits - list_cost(g, cfg, model, contexts, u, r, sel, scratch);
        if (gain > 0) arcs[u].push_back({r, gain});
      }
    }
  });
  return arcs;
}

// Each node takes its best candidate; ties go to the smallest r.
inline ReferenceForest greedy_forest(const CandidateArcs& c) {
  ReferenceForest f(c.size());
  for (size_t u = 0; u < c.size(); ++u) {
    for (const Candidate& a : c[u]) {
      if (a.gain > f.weight[u]) {
        f.ref[u] = a.r;
        f.weight[u] = a.gain;
      }
    }
  }
  return f;
}

// Maximum-weight sub-forest of `f` with no reference chain longer than R.
// best[x][i]: weight of the optimal sub-forest below x when the chains
// hanging below x may have at most i hops. O(nR) time and space.
inline ReferenceForest bounded_dp(const ReferenceForest& f, uint32_t max_chain) {
  if (max_chain < 1) throw ContractError("bounded_dp: R must be >= 1");
  const size_t n = f.size();
  const size_t width = size_t{max_chain} + 1;
  std::vector<double> best(n * width, 0.0);
  std::vector<uint8_t> take(n * width, 0);
  // Children have larger ids than their parent, so a reverse sweep finishes
  // every subtree before its root.
  for (size_t y = n; y-- > 0;) {
    if (!f.ref[y]) continue;
    const size_t x = y - f.ref[y];
    const double* by = &best[y * width];
    const double keep_free = by[max_chain];
    for (size_t i = 0; i < width; ++i) {
      double v = keep_free;
      if (i >= 1 && f.weight[y] + by[i - 1] > keep_free) {
        v = f.weight[y] + by[i - 1];
        take[y * width + i] = 1;
      }
      best[x * width + i] += v;
    }
  }
  ReferenceForest h(n);
  std::vector<uint32_t> budget(n, max_chain);
  for (size_t y = 0; y < n; ++y) {
    if (!f.ref[y]) continue;
    const size_t x = y - f.ref[y];
    if (take[y * width + budget[x]]) {
      h.ref[y] = f.ref[y];
      h.weight[y] = f.weight[y];
      budget[y] = budget[x] - 1;
    }
  }
  return h;
}

// Adds candidate arcs outside `f` to nodes that have no reference in `h`,
// best gain first, whenever the longest chain through the arc stays <= R.
inline ReferenceForest greedy_extend(ReferenceForest h,
                                     const ReferenceForest& f,
                                     const CandidateArcs& c,
                                     uint32_t max_chain) {
  const size_t n = h.size();
  std::vector<uint32_t> depth(n, 0), height(n, 0);
  std::vector<std::vector<uint32_t>> children(n);
  for (size_t u = 0; u < n; ++u) {
    if (h.ref[u]) {
      depth[u] = depth[u - h.ref[u]] + 1;
      children[u - h.ref[u]].push_back(static_cast<uint32_t>(u));
    }
  }
  for (size_t u = n; u-- > 0;) {
    if (h.ref[u]) {
      uint32_t& hp = height[u - h.ref[u]];
      hp = std::max(hp, height[u] + 1);
    }
  }

  struct Arc {
    double gain;
    uint32_t r;
    uint32_t u;
  };
  std::vector<Arc> arcs;
  for (size_t u = 0; u < n; ++u) {
    if (h.ref[u]) continue;
    for (const Candidate& a : c[u]) {
      if (u < f.size() && a.r == f.ref[u]) continue;
      arcs.push_back({a.gain, a.r, static_cast<uint32_t>(u)});
    }
  }
  std::sort(arcs.begin(), arcs.end(), [](const Arc& a, const Arc& b) {
    if (a.gain != b.gain) return a.gain > b.gain;
    if (a.r != b.r) return a.r < b.r;
    return a.u < b.u;
  });

  std::vector<uint32_t> stack;
  for (const Arc& a : arcs) {
    const size_t u = a.u, v = a.u - a.r;
    if (h.ref[u]) continue;
    if (depth[v] + 1 + height[u] > max_chain) continue;
    h.ref[u] = a.r;
    h.weight[u] = a.gain;
    children[v].push_back(a.u);
    const uint32_t shift = depth[v] + 1;
    stack.assign(1, a.u);
    while (!stack.empty()) {
      const uint32_t z = stack.back();
      stack.pop_back();
      depth[z] += shift;
      for (uint32_t ch : children[z]) stack.push_back(ch);
    }
    uint32_t hgt = height[u] + 1;
    for (size_t x = v;; x -= h.ref[x], ++hgt) {
      if (height[x] >= hgt) break;
      height[x] = hgt;
      if (!h.ref[x]) break;
    }
  }
  return h;
}

// Baseline: nodes in increasing order take their best candidate whose own
// chain is still shorter than R (the classic WebGraph strategy).
inline ReferenceForest greedy_bounded(const CandidateArcs& c,
                                      uint32_t max_chain) {
  ReferenceForest f(c.size());
  std::vector<uint32_t> chain(c.size(), 0);
  for (size_t u = 0; u < c.size(); ++u) {
    for (const Candidate& a : c[u]) {
      if (chain[u - a.r] < max_chain && a.gain > f.weight[u]) {
        f.ref[u] = a.r;
        f.weight[u] = a.gain;
      }
    }
    if (f.ref[u]) chain[u] = chain[u - f.ref[u]] + 1;
  }
  return f;
}

// Reference-context selector each node sees given a reference assignment:
// the reference of the previous nonempty list in the same chunk.
inline std::vector<uint32_t> reference_selectors(const Graph& g,
                                                 std::span<const uint32_t> refs,
                                                 uint32_t chunk_size) {
  std::vector<uint32_t> sel(g.num_nodes(), 0);
  uint32_t prev = 0;
  for (size_t u = 0; u < g.num_nodes(); ++u) {
    if (chunk_size != 0 && u % chunk_size == 0) prev = 0;
    sel[u] = prev;
    if (g.degree(u) > 0) prev = refs.empty() ? 0 : refs[u];
  }
  return sel;
}

inline ContextSet build_context_set(const Graph& g,
                                    std::span<const uint32_t> refs,
                                    const EncoderParams& p) {
  return ContextSet::build(p.backend(), collect_histograms(g, refs, p));
}

inline ReferenceForest choose_references(const CandidateArcs& c,
                                         const EncoderParams& p) {
  ReferenceForest f = greedy_forest(c);
  if (p.mode == Mode::kFull || p.max_chain == 0) return f;
  if (p.selection == Selection::kGreedyBounded) {
    return greedy_bounded(c, p.max_chain);
  }
  return greedy_extend(bounded_dp(f, p.max_chain), f, c, p.max_chain);
}

// Iterated selection: the first round prices every symbol uniformly; later
// rounds price symbols with the distributions produced by the previous
// round's choices.
inline ReferenceForest select_references(const Graph& g,
                                         const EncoderParams& p) {
  p.validate();
  const size_t n = g.num_nodes();
  if (p.window == 0 || n == 0) return ReferenceForest(n);
  const unsigned bits = std::max<unsigned>(std::bit_width(n) + 1, p.hybrid.k + 1);
  CostModel model = CostModel::uniform(
      p.hybrid, stored_context_count(p.contexts), bits);
  std::vector<uint32_t> selectors;
  ReferenceForest forest(n);
  for (uint32_t it = 1; it <= p.iterations; ++it) {
    CandidateArcs c = build_candidates(g, p.window, p.hybrid, model,
                                       p.contexts, selectors, p.threads);
    forest = choose_references(c, p);
    if (it < p.iterations) {
      model = CostModel::from(build_context_set(g, forest.ref, p));
      selectors = reference_selectors(g, forest.ref, p.chunk_size);
    }
  }
  return forest;
}

}  // namespace zkr
