#pragma once
/**
 * @file network.hpp
 * @brief lambda-natural conductance networks on augmented trees.
 *
 *     c(x, x^-) = lambda^{-|x|} mu(x),
 *     c(x, y)   = c(x, x^-) c(y, y^-) / (c(x, x^-) + c(y, y^-))   for (x, y) in E_h.
 *
 * Conductances are formed in log space. When they would leave the safe
 * double range the whole network is divided by one constant e^{shift};
 * transition probabilities and conductance ratios are unaffected, and a
 * resistance computed from stored values converts back as
 * R_true = R_stored * e^{-shift}.
 */

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "augtree/augmented_tree.hpp"
#include "augtree/errors.hpp"
#include "augtree/linalg.hpp"

namespace augtree {

class Network {
 public:
  [[nodiscard]] const AugmentedTree& augmented() const { return *at_; }
  [[nodiscard]] const IndexTree& tree() const { return at_->tree(); }
  [[nodiscard]] std::shared_ptr<const AugmentedTree> augmented_ptr() const { return at_; }
  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] int trunc_level() const { return at_->tree().max_level(); }
  [[nodiscard]] std::size_t size() const { return graph_.size(); }

  /// Stored linear conductances are the true ones times e^{-log_shift()}.
  [[nodiscard]] double log_shift() const { return shift_; }

  /// Stored (possibly rescaled) conductance; 0 for non-edges.
  [[nodiscard]] double conductance(VertexId x, VertexId y) const { return graph_.weight(x, y); }

  /// True conductance in log space; -inf for non-edges.
  [[nodiscard]] double log_conductance(VertexId x, VertexId y) const {
    const auto& t = tree();
    if (x != IndexTree::root() && t.parent(x) == y) return log_up_[x];
    if (y != IndexTree::root() && t.parent(y) == x) return log_up_[y];
    if (t.level(x) == t.level(y) && x != y && at_->has_horizontal_edge(x, y)) return log_horizontal(log_up_[x], log_up_[y]);
    return -std::numeric_limits<double>::infinity();
  }

  /// Stored c(x, x^-).
  [[nodiscard]] double up_conductance(VertexId x) const {
    require(x != IndexTree::root(), "the root has no parent edge");
    return std::exp(log_up_[x] - shift_);
  }

  /// Total m(x) in the truncation at trunc_level (stored scale).
  [[nodiscard]] double total(VertexId x) const { return totals_[x]; }

  [[nodiscard]] const ConductanceGraph& graph() const { return graph_; }

  /// The network restricted to X_n (vertex ids [0, count_through(n))).
  [[nodiscard]] ConductanceGraph graph(int n) const {
    require(n >= 0 && n <= trunc_level(), "truncation level exceeds the network");
    return graph_.prefix(tree().count_through(n));
  }

  /// P(x, y) = c(x, y) / m(x) in the full truncation.
  [[nodiscard]] double transition_prob(VertexId x, VertexId y) const { return conductance(x, y) / totals_[x]; }

  /// lambda(x) = sum of conductances to x^- over sum of conductances to children.
  [[nodiscard]] double return_ratio(VertexId x) const {
    const auto& t = tree();
    require(x != IndexTree::root(), "return ratio is undefined at the root");
    require(!t.children(x).empty() && t.level(x) < trunc_level(), "return ratio needs children inside the truncation");
    double down = 0.0;
    for (VertexId y : t.children(x)) down += graph_.weight(x, y);
    return graph_.weight(x, t.parent(x)) / down;
  }

  /// Copy with c(x, y) multiplied by `factor` (negative controls).
  [[nodiscard]] Network with_scaled_edge(VertexId x, VertexId y, double factor) const {
    Network n = *this;
    bool found = false;
    for (auto [a, b] : {std::pair{x, y}, std::pair{y, x}})
      for (std::size_t k = n.graph_.start[a]; k < n.graph_.start[a + 1]; ++k)
        if (n.graph_.neighbor[k] == b) {
          n.graph_.conductance[k] *= factor;
          found = true;
        }
    require(found, "no such edge");
    n.totals_[x] = n.graph_.total(x);
    n.totals_[y] = n.graph_.total(y);
    return n;
  }

  static double log_horizontal(double la, double lb) {
    // log(ab/(a+b)) = la + lb - logaddexp(la, lb)
    const double hi = std::max(la, lb), lo = std::min(la, lb);
    return la + lb - (hi + std::log1p(std::exp(lo - hi)));
  }

 private:
  friend Network build_nrw(std::shared_ptr<const AugmentedTree>, double);

  std::shared_ptr<const AugmentedTree> at_;
  double lambda_ = 0.5;
  double shift_ = 0.0;
  std::vector<double> log_up_;
  std::vector<double> totals_;
  ConductanceGraph graph_;
};

/// Largest |log c| tolerated before the network is rescaled.
inline constexpr double max_log_conductance = 600.0;

inline Network build_nrw(std::shared_ptr<const AugmentedTree> at, double lambda) {
  require(lambda > 0.0 && lambda < 1.0 && std::isfinite(lambda), "lambda must lie in (0,1)");
  const auto& t = at->tree();
  Network n;
  n.at_ = std::move(at);
  n.lambda_ = lambda;
  n.log_up_.assign(t.size(), -std::numeric_limits<double>::infinity());
  const double ll = std::log(lambda);
  double lmin = std::numeric_limits<double>::infinity(), lmax = -lmin;
  for (VertexId x = 1; x < t.size(); ++x) {
    require(t.measure(x) > 0.0, "cell " + t.label(x) + " has zero measure; lambda-NRW needs positive measures");
    n.log_up_[x] = -t.level(x) * ll + std::log(t.measure(x));
    lmin = std::min(lmin, n.log_up_[x]);
    lmax = std::max(lmax, n.log_up_[x]);
  }
  if (t.size() > 1 && std::max(std::abs(lmin), std::abs(lmax)) > max_log_conductance) {
    n.shift_ = 0.5 * (lmin + lmax);
    if (lmax - lmin > 2.0 * max_log_conductance)
      throw NumericalError("conductance range exceeds double precision; lower the truncation level");
  }
  std::vector<std::tuple<std::size_t, std::size_t, double>> edges;
  edges.reserve(2 * t.size());
  for (VertexId x = 1; x < t.size(); ++x) {
    edges.emplace_back(x, t.parent(x), std::exp(n.log_up_[x] - n.shift_));
    for (VertexId y : n.at_->horizontal_neighbors(x))
      if (y > x) edges.emplace_back(x, y, std::exp(Network::log_horizontal(n.log_up_[x], n.log_up_[y]) - n.shift_));
  }
  n.graph_ = ConductanceGraph::from_edges(t.size(), edges);
  n.totals_.resize(t.size());
  for (VertexId x = 0; x < t.size(); ++x) n.totals_[x] = n.graph_.total(x);
  return n;
}

inline Network build_nrw(const AugmentedTree& at, double lambda) {
  return build_nrw(std::make_shared<const AugmentedTree>(at), lambda);
}

enum class IsoperimetryFamily { level_truncations, single_cells, random_connected };

struct IsoperimetryProfile {
  std::vector<double> values;      ///< m(F) / c(boundary F) per accepted set
  double max_value = 0.0;
  std::size_t skipped = 0;         ///< sets touching the truncation boundary
};

/// m(F)/c(dF) over a family of finite sets F. Sets containing a vertex of the
/// deepest level are skipped because part of their boundary is cut off.
inline IsoperimetryProfile isoperimetry_profile(const Network& net, IsoperimetryFamily family, std::size_t samples = 50,
                                                std::uint64_t seed = 1) {
  const auto& t = net.tree();
  const auto& g = net.graph();
  const int deepest = net.trunc_level();
  IsoperimetryProfile prof;
  auto evaluate = [&](const std::vector<char>& in) {
    double mass = 0.0, boundary = 0.0;
    for (VertexId v = 0; v < g.size(); ++v) {
      if (!in[v]) continue;
      if (t.level(v) == deepest) {
        ++prof.skipped;
        return;
      }
      mass += net.total(v);
      for (std::size_t k = g.start[v]; k < g.start[v + 1]; ++k)
        if (!in[g.neighbor[k]]) boundary += g.conductance[k];
    }
    prof.values.push_back(mass / boundary);
    prof.max_value = std::max(prof.max_value, prof.values.back());
  };
  switch (family) {
    case IsoperimetryFamily::level_truncations:
      for (int k = 0; k <= deepest; ++k) {
        std::vector<char> in(g.size(), 0);
        std::fill(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(t.count_through(k)), 1);
        evaluate(in);
      }
      break;
    case IsoperimetryFamily::single_cells:
      for (VertexId v = 0; v < g.size(); ++v) {
        std::vector<char> in(g.size(), 0);
        in[v] = 1;
        evaluate(in);
      }
      break;
    case IsoperimetryFamily::random_connected: {
      std::mt19937_64 rng(seed);
      const std::size_t interior = t.count_through(deepest - 1);
      std::uniform_int_distribution<std::size_t> pick(0, interior - 1);
      for (std::size_t s = 0; s < samples; ++s) {
        std::vector<char> in(g.size(), 0);
        std::vector<std::size_t> members{pick(rng)};
        in[members[0]] = 1;
        const std::size_t target = 1 + pick(rng) % std::max<std::size_t>(1, interior / 2);
        for (std::size_t step = 0; members.size() < target && step < 20 * target; ++step) {
          const std::size_t v = members[pick(rng) % members.size()];
          if (g.degree(v) == 0) break;
          const std::size_t w = g.neighbor[g.start[v] + pick(rng) % g.degree(v)];
          if (in[w] || t.level(w) == deepest) continue;
          in[w] = 1;
          members.push_back(w);
        }
        evaluate(in);
      }
      break;
    }
  }
  return prof;
}

}  // namespace augtree
