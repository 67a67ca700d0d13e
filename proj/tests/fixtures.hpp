#pragma once

// Graph fixtures shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <random>
#include <vector>

#include "zkr/graph.hpp"

namespace zkr::fixtures {

// Node 6 and node 7 of the worked two-list example; every other list empty.
inline Graph fig1_graph() {
  std::vector<std::vector<NodeId>> lists(14);
  lists[6] = {1, 2, 4, 5, 7, 10, 11, 12};
  lists[7] = {1, 2, 3, 4, 8, 9, 10, 11, 12, 13};
  return Graph::from_lists(lists);
}

inline Graph random_uniform_graph(size_t n, double avg, std::mt19937_64& rng) {
  std::vector<std::vector<NodeId>> lists(n);
  std::poisson_distribution<size_t> deg(avg);
  for (auto& l : lists) {
    const size_t d = std::min(deg(rng), n);
    for (size_t k = 0; k < d; ++k) l.push_back(static_cast<NodeId>(rng() % n));
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
  return Graph::from_lists(lists);
}

// Heavy-tailed out-degrees with targets clustered around the source.
inline Graph random_powerlaw_graph(size_t n, std::mt19937_64& rng) {
  std::vector<std::vector<NodeId>> lists(n);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (size_t u = 0; u < n; ++u) {
    const size_t d = std::min<size_t>(
        n, static_cast<size_t>(std::pow(1.0 - u01(rng), -1.0 / 1.3)) - 1);
    auto& l = lists[u];
    for (size_t k = 0; k < d; ++k) {
      const int64_t off = static_cast<int64_t>(std::round(
          (u01(rng) < 0.5 ? -1 : 1) * std::exp(u01(rng) * std::log(double(n)))));
      const int64_t v = static_cast<int64_t>(u) + off;
      l.push_back(static_cast<NodeId>(((v % int64_t(n)) + int64_t(n)) % int64_t(n)));
    }
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
  return Graph::from_lists(lists);
}

inline Graph clique(size_t n) {
  std::vector<std::vector<NodeId>> lists(n);
  for (size_t u = 0; u < n; ++u)
    for (size_t v = 0; v < n; ++v) lists[u].push_back(static_cast<NodeId>(v));
  return Graph::from_lists(lists);
}

inline Graph single_long_list(size_t n, size_t source) {
  std::vector<std::vector<NodeId>> lists(n);
  for (size_t v = 0; v < n; ++v) lists[source].push_back(static_cast<NodeId>(v));
  return Graph::from_lists(lists);
}

// Every list is a long run of consecutive ids plus a few strays, which
// exercises zero runs and copy blocks at once.
inline Graph runs_graph(size_t n, std::mt19937_64& rng) {
  std::vector<std::vector<NodeId>> lists(n);
  for (size_t u = 0; u < n; ++u) {
    if (rng() % 5 == 0) continue;
    const size_t start = rng() % n, len = 1 + rng() % std::min<size_t>(n, 40);
    auto& l = lists[u];
    for (size_t v = start; v < std::min(n, start + len); ++v) l.push_back(NodeId(v));
    for (int k = 0; k < 3; ++k) l.push_back(static_cast<NodeId>(rng() % n));
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
  return Graph::from_lists(lists);
}

// Fixture `index` of the mixed roundtrip corpus (n <= max_n).
inline Graph corpus_graph(size_t index, size_t max_n = 2000) {
  std::mt19937_64 rng(1000 + index);
  const size_t n = 1 + rng() % max_n;
  switch (index % 8) {
    case 0: return generate_copying_graph(n, index);
    case 1: return random_uniform_graph(n, 1 + rng() % 20, rng);
    case 2: return random_powerlaw_graph(n, rng);
    case 3: return runs_graph(n, rng);
    case 4: {
      GeneratorOptions o;
      o.avg_degree = 30;
      o.copy_probability = 0.95;
      o.keep_probability = 0.99;
      return generate_copying_graph(n, index, o);
    }
    case 5: return clique(1 + rng() % 60);
    case 6: return single_long_list(n, rng() % n);
    default: {
      std::vector<std::vector<NodeId>> lists(n);  // sparse with empty lists
      for (size_t u = 0; u < n; ++u) {
        if (rng() % 4 == 0) lists[u] = {static_cast<NodeId>(rng() % n)};
      }
      return Graph::from_lists(lists);
    }
  }
}

}  // namespace zkr::fixtures
