#pragma once
// Random small networks with rational conductances, shared by the unit and
// acceptance tests.

#include <algorithm>
#include <random>
#include <tuple>
#include <vector>

#include "augtree/exact_reduction.hpp"
#include "augtree/linalg.hpp"

namespace augtree::testing {

struct CorpusGraph {
  std::size_t n = 0;
  std::vector<RationalEdge> edges;
  std::vector<std::size_t> F, G;

  [[nodiscard]] ConductanceGraph graph() const {
    std::vector<std::tuple<std::size_t, std::size_t, double>> e;
    for (const auto& r : edges) e.emplace_back(r.u, r.v, static_cast<double>(r.conductance));
    return ConductanceGraph::from_edges(n, e);
  }
};

/// Graphs on 2..max_n vertices with conductances p/q (1 <= p <= 9, 1 <= q <= 4)
/// and disjoint terminal sets. Some are disconnected on purpose.
inline std::vector<CorpusGraph> rational_corpus(std::size_t count, std::size_t max_n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](std::size_t lo, std::size_t hi) { return lo + rng() % (hi - lo + 1); };
  std::vector<CorpusGraph> out;
  while (out.size() < count) {
    CorpusGraph c;
    c.n = uniform(2, max_n);
    const double density = 0.2 + 0.6 * static_cast<double>(rng() % 1000) / 1000.0;
    for (std::size_t u = 0; u < c.n; ++u)
      for (std::size_t v = u + 1; v < c.n; ++v)
        if (static_cast<double>(rng() % 1000) / 1000.0 < density)
          c.edges.push_back({u, v, Rational(static_cast<long>(uniform(1, 9)), static_cast<long>(uniform(1, 4)))});
    if (c.edges.empty()) continue;
    std::vector<std::size_t> perm(c.n);
    for (std::size_t i = 0; i < c.n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::size_t nf = uniform(1, std::max<std::size_t>(1, c.n / 3));
    const std::size_t ng = uniform(1, std::max<std::size_t>(1, (c.n - nf) / 2));
    c.F.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(nf));
    c.G.assign(perm.begin() + static_cast<std::ptrdiff_t>(nf), perm.begin() + static_cast<std::ptrdiff_t>(nf + ng));
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace augtree::testing
