#pragma once
/**
 * @file exact_reduction.hpp
 * @brief Exact effective resistance of small networks in rational arithmetic.
 *
 * Terminal sets are merged into two nodes s and t, then the network is
 * reduced with parallel merges, removal of dangling vertices, series merges
 * and Delta-Y transforms. Whatever remains is eliminated vertex by vertex
 * (star-mesh, i.e. Gaussian elimination on the Laplacian), which always
 * terminates. Every step is exact.
 */

#include <boost/multiprecision/cpp_int.hpp>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "augtree/errors.hpp"

namespace augtree {

using Rational = boost::multiprecision::cpp_rational;

/// Parses "p/q", an integer, or a finite decimal ("0.25", "-1.5e-3") exactly.
inline Rational parse_rational(const std::string& text) {
  using boost::multiprecision::cpp_int;
  require(!text.empty(), "empty rational");
  const auto slash = text.find('/');
  auto parse_int = [&](const std::string& s) {
    require(!s.empty(), "malformed rational: " + text);
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    require(i < s.size(), "malformed rational: " + text);
    for (std::size_t k = i; k < s.size(); ++k) require(std::isdigit(static_cast<unsigned char>(s[k])) != 0, "not a rational number: " + text);
    // cpp_int reads a leading 0 as octal
    std::string digits = s.substr(i);
    digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
    return s[0] == '-' ? cpp_int(-cpp_int(digits)) : cpp_int(digits);
  };
  if (slash != std::string::npos) {
    const cpp_int den = parse_int(text.substr(slash + 1));
    require(den != 0, "zero denominator: " + text);
    return Rational(parse_int(text.substr(0, slash)), den);
  }
  std::string mant = text;
  long exp10 = 0;
  const auto e = text.find_first_of("eE");
  if (e != std::string::npos) {
    mant = text.substr(0, e);
    const std::string es = text.substr(e + 1);
    require(!es.empty() && es.size() < 6, "malformed exponent: " + text);
    exp10 = std::stol(std::string(parse_int(es).str()));
  }
  const auto dot = mant.find('.');
  if (dot != std::string::npos) {
    const std::string frac = mant.substr(dot + 1);
    exp10 -= static_cast<long>(frac.size());
    mant = mant.substr(0, dot) + frac;
    if (mant.empty() || mant == "-" || mant == "+") mant += "0";
  }
  Rational r(parse_int(mant));
  const cpp_int scale = boost::multiprecision::pow(cpp_int(10), static_cast<unsigned>(std::labs(exp10)));
  return exp10 >= 0 ? Rational(r * scale) : Rational(r / scale);
}

/// Exact value of a finite double (every finite double is a dyadic rational).
inline Rational exact_rational(double x) {
  require(std::isfinite(x), "non-finite weights have no exact rational value");
  int e = 0;
  const double m = std::frexp(x, &e);
  const auto mant = static_cast<long long>(std::ldexp(m, 53));
  Rational r(mant);
  e -= 53;
  const boost::multiprecision::cpp_int p = boost::multiprecision::pow(boost::multiprecision::cpp_int(2), static_cast<unsigned>(std::abs(e)));
  return e >= 0 ? Rational(r * p) : Rational(r / p);
}

struct RationalEdge {
  std::size_t u, v;
  Rational conductance;
};

struct ReductionResult {
  std::optional<Rational> resistance;  ///< nullopt: terminals disconnected (infinite resistance)
  std::size_t series = 0, parallel = 0, pruned = 0, delta_y = 0, eliminated = 0;
};

/**
 * Effective resistance between vertex sets F and G of the graph on
 * {0, ..., n-1}. Returns 0 when F and G intersect.
 */
inline ReductionResult reduce_network(std::size_t n, const std::vector<RationalEdge>& edges, const std::vector<std::size_t>& F,
                                      const std::vector<std::size_t>& G, std::size_t delta_y_budget = 64) {
  require(!F.empty() && !G.empty(), "terminal sets must be nonempty");
  ReductionResult res;
  std::set<std::size_t> fs(F.begin(), F.end()), gs(G.begin(), G.end());
  for (std::size_t v : fs) require(v < n, "terminal out of range");
  for (std::size_t v : gs) require(v < n, "terminal out of range");
  for (std::size_t v : fs)
    if (gs.contains(v)) {
      res.resistance = Rational(0);
      return res;
    }

  // Node ids: 0 = s, 1 = t, others shifted; a fresh id per Delta-Y centre.
  std::vector<std::size_t> id(n);
  std::size_t next = 2;
  for (std::size_t v = 0; v < n; ++v) id[v] = fs.contains(v) ? 0 : gs.contains(v) ? 1 : next++;
  std::map<std::size_t, std::map<std::size_t, Rational>> adj;
  adj[0];
  adj[1];
  auto add = [&](std::size_t a, std::size_t b, const Rational& c) {
    if (a == b) return;
    auto& ab = adj[a][b];
    if (ab != 0) ++res.parallel;
    ab += c;
    adj[b][a] = ab;
  };
  auto remove_vertex = [&](std::size_t v) {
    for (const auto& [w, c] : adj[v]) adj[w].erase(v);
    adj.erase(v);
  };
  for (const auto& e : edges) {
    require(e.u < n && e.v < n, "edge endpoint out of range");
    require(e.conductance > 0, "conductances must be positive");
    if (id[e.u] == id[e.v]) continue;
    adj[id[e.u]];
    adj[id[e.v]];
    add(id[e.u], id[e.v], e.conductance);
  }
  for (std::size_t v = 2; v < next; ++v) adj[v];

  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = adj.begin(); it != adj.end();) {
      const std::size_t v = it->first;
      const std::size_t deg = it->second.size();
      if (v < 2 || deg > 2) {
        ++it;
        continue;
      }
      ++it;
      if (deg <= 1) {
        ++res.pruned;
      } else {
        auto nb = adj[v].begin();
        const auto [a, ca] = *nb++;
        const auto [b, cb] = *nb;
        add(a, b, ca * cb / (ca + cb));
        ++res.series;
      }
      remove_vertex(v);
      changed = true;
    }
    if (changed || res.delta_y >= delta_y_budget) continue;
    // Delta-Y on a triangle through a degree-3 internal vertex; afterwards
    // that vertex has degree 2 and the series rule fires.
    for (const auto& [v, nbrs] : adj) {
      if (v < 2 || nbrs.size() != 3) continue;
      std::optional<std::tuple<std::size_t, std::size_t, std::size_t>> tri;
      for (auto i = nbrs.begin(); i != nbrs.end() && !tri; ++i)
        for (auto j = std::next(i); j != nbrs.end(); ++j)
          if (adj[i->first].contains(j->first)) {
            tri = std::make_tuple(v, i->first, j->first);
            break;
          }
      if (!tri) continue;
      const auto [a, b, c] = *tri;
      const Rational cab = adj[a][b], cbc = adj[b][c], cca = adj[c][a];
      const Rational sum = cab * cbc + cbc * cca + cca * cab;
      for (auto [x, y] : {std::pair{a, b}, std::pair{b, c}, std::pair{c, a}}) {
        adj[x].erase(y);
        adj[y].erase(x);
      }
      const std::size_t o = next++;
      adj[o];
      add(a, o, sum / cbc);
      add(b, o, sum / cca);
      add(c, o, sum / cab);
      ++res.delta_y;
      changed = true;
      break;
    }
  }

  // Star-mesh elimination of the remaining internal vertices.
  while (adj.size() > 2) {
    std::size_t v = 0;
    std::size_t best = static_cast<std::size_t>(-1);
    for (const auto& [w, nbrs] : adj)
      if (w >= 2 && nbrs.size() < best) {
        best = nbrs.size();
        v = w;
      }
    const std::vector<std::pair<std::size_t, Rational>> nbrs(adj[v].begin(), adj[v].end());
    Rational total = 0;
    for (const auto& [w, c] : nbrs) total += c;
    remove_vertex(v);
    for (std::size_t i = 0; i < nbrs.size(); ++i)
      for (std::size_t j = i + 1; j < nbrs.size(); ++j) {
        auto& ab = adj[nbrs[i].first][nbrs[j].first];
        ab += nbrs[i].second * nbrs[j].second / total;
        adj[nbrs[j].first][nbrs[i].first] = ab;
      }
    ++res.eliminated;
  }
  const auto it = adj[0].find(1);
  if (it == adj[0].end() || it->second == 0) return res;
  res.resistance = 1 / it->second;
  return res;
}

}  // namespace augtree
