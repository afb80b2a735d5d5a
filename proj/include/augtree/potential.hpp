#pragma once
/**
 * @file potential.hpp
 * @brief Hitting distributions, random-walk simulation and the Green,
 * ever-visiting, Martin and Naim kernels of a network on finite truncations.
 *
 * All kernels on the truncation X_N come from one object: with Q = X_{N-1}
 * free, J_N absorbing and L = M - C (M the full totals), the column
 * z^y = L_QQ^{-1} e_y gives
 *
 *     G(x, y) = z^y_x m(y),   F(x, y) = z^y_x / z^y_y,   K(x, y) = z^y_x / z^y_o,
 *     Theta(x, y) = z^y_x / (z^o_x z^y_o m(o)),
 *
 * where o is the root. Theta is symmetric because L is.
 */

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <vector>

#include "augtree/errors.hpp"
#include "augtree/linalg.hpp"
#include "augtree/network.hpp"

namespace augtree {

/// Absorption law of the walk from the root on J_m, indexed by
/// v - level_begin(m). Exact: pre-hitting paths never leave X_{m-1}.
inline std::vector<double> hitting_distribution(const Network& net, int m) {
  const auto& t = net.tree();
  require(m >= 0 && m <= net.trunc_level(), "hitting level exceeds the network truncation");
  if (m == 0) return {1.0};
  const ConductanceGraph g = net.graph(m);
  std::vector<char> fixed(g.size(), 0);
  for (VertexId v = t.level_begin(m); v < t.level_end(m); ++v) fixed[v] = 1;
  const DirichletSolver solver(g, fixed);
  const auto y = solver.green_column(IndexTree::root());
  std::vector<double> dist(t.level_size(m), 0.0);
  for (VertexId a = t.level_begin(m); a < t.level_end(m); ++a) {
    double s = 0.0;
    for (std::size_t k = g.start[a]; k < g.start[a + 1]; ++k)
      if (!fixed[g.neighbor[k]]) s += y[g.neighbor[k]] * g.conductance[k];
    dist[a - t.level_begin(m)] = s;
  }
  return dist;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

enum class StopReason { hit_level, max_steps, truncation };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::hit_level: return "hit_level";
    case StopReason::max_steps: return "max_steps";
    case StopReason::truncation: return "truncation";
  }
  return "?";
}

struct WalkStop {
  int level = -1;                   ///< stop on first arrival at this level (< 0: never)
  std::size_t max_steps = 1'000'000;
  bool reflect = false;             ///< keep walking on the truncated graph at the deepest level
};

struct WalkPath {
  std::vector<VertexId> states;
  std::uint64_t seed = 0;
  StopReason stopped_reason = StopReason::max_steps;
};

namespace detail {

inline VertexId step(const ConductanceGraph& g, VertexId x, double total, std::mt19937_64& rng) {
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  for (std::size_t k = g.start[x]; k < g.start[x + 1]; ++k) {
    acc += g.conductance[k];
    if (u < acc) return g.neighbor[k];
  }
  return g.neighbor[g.start[x + 1] - 1];
}

}  // namespace detail

/// One trajectory with P(x, y) = c(x, y)/m(x), reproducible per seed. Without
/// `reflect`, reaching the deepest level before the stop level ends the walk
/// with reason `truncation`, since the true walk would continue downwards.
inline WalkPath simulate_walk(const Network& net, VertexId x0, const WalkStop& stop, std::uint64_t seed) {
  const auto& t = net.tree();
  const auto& g = net.graph();
  require(x0 < g.size(), "start vertex is not in the network");
  require(stop.level <= net.trunc_level(), "stop level exceeds the network truncation");
  WalkPath path;
  path.seed = seed;
  path.states.push_back(x0);
  std::mt19937_64 rng(seed);
  VertexId x = x0;
  if (stop.level >= 0 && t.level(x) == stop.level) {
    path.stopped_reason = StopReason::hit_level;
    return path;
  }
  for (std::size_t s = 0; s < stop.max_steps; ++s) {
    if (!stop.reflect && t.level(x) == net.trunc_level()) {
      path.stopped_reason = StopReason::truncation;
      return path;
    }
    x = detail::step(g, x, net.total(x), rng);
    path.states.push_back(x);
    if (stop.level >= 0 && t.level(x) == stop.level) {
      path.stopped_reason = StopReason::hit_level;
      return path;
    }
  }
  path.stopped_reason = StopReason::max_steps;
  return path;
}

/// Empirical law of the first arrival on J_m from the root over `trials`
/// walks; trial i uses seed splitmix64(seed + i).
inline std::vector<double> monte_carlo_hitting(const Network& net, int m, std::size_t trials, std::uint64_t seed) {
  const auto& t = net.tree();
  require(m >= 1 && m <= net.trunc_level(), "hitting level out of range");
  require(trials > 0, "need at least one trial");
  std::vector<double> counts(t.level_size(m), 0.0);
  const auto& g = net.graph();
  for (std::size_t i = 0; i < trials; ++i) {
    std::mt19937_64 rng(splitmix64(seed + i));
    VertexId x = IndexTree::root();
    // Levels change by at most one per step, so J_m is reached before any deeper level.
    while (t.level(x) != m) x = detail::step(g, x, net.total(x), rng);
    counts[x - t.level_begin(m)] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(trials);
  return counts;
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  require(p.size() == q.size(), "distributions have different supports");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

/// Kernels on one truncation X_N (N = trunc) with J_N absorbing.
class KernelSolver {
 public:
  KernelSolver(const Network& net, int trunc) : net_(&net), trunc_(trunc) {
    require(trunc >= 1 && trunc <= net.trunc_level(), "kernel truncation out of range");
    graph_ = std::make_unique<ConductanceGraph>(net.graph(trunc));
    std::vector<char> fixed(graph_->size(), 0);
    const auto& t = net.tree();
    for (VertexId v = t.level_begin(trunc); v < t.level_end(trunc); ++v) fixed[v] = 1;
    solver_ = std::make_unique<DirichletSolver>(*graph_, std::move(fixed));
  }

  [[nodiscard]] int trunc() const { return trunc_; }
  [[nodiscard]] const IndexTree& tree() const { return net_->tree(); }

  /// z^y = L_QQ^{-1} e_y, cached per y.
  [[nodiscard]] const std::vector<double>& column(VertexId y) const {
    check(y);
    auto it = cache_.find(y);
    if (it == cache_.end()) it = cache_.emplace(y, solver_->green_column(y)).first;
    return it->second;
  }

  [[nodiscard]] double green(VertexId x, VertexId y) const {
    check(x);
    return column(y)[x] * graph_->total(y);
  }

  [[nodiscard]] double ever_visit(VertexId x, VertexId y) const {
    check(x);
    if (x == y) return 1.0;
    const auto& z = column(y);
    return z[x] / z[y];
  }

  [[nodiscard]] double martin(VertexId x, VertexId y) const {
    check(x);
    const auto& z = column(y);
    if (!(z[IndexTree::root()] > std::numeric_limits<double>::min()))
      throw NumericalError("G(root, y) underflows; Martin kernel undefined");
    return z[x] / z[IndexTree::root()];
  }

  [[nodiscard]] double naim(VertexId x, VertexId y) const {
    require(x != IndexTree::root() && y != IndexTree::root(), "Naim kernel needs non-root vertices");
    check(x);
    const auto& zy = column(y);
    const auto& zo = column(IndexTree::root());
    const double denom = zo[x] * zy[IndexTree::root()] * graph_->total(IndexTree::root());
    if (!(denom > 0.0)) throw NumericalError("Naim kernel denominator underflows");
    return zy[x] / denom;
  }

 private:
  void check(VertexId v) const {
    require(v < graph_->size() && net_->tree().level(v) < trunc_, "vertex must lie strictly above the truncation level");
  }

  const Network* net_;
  int trunc_;
  std::unique_ptr<ConductanceGraph> graph_;
  std::unique_ptr<DirichletSolver> solver_;
  mutable std::map<VertexId, std::vector<double>> cache_;  // not synchronized; one solver per thread
};

struct KernelEstimate {
  double value = 0.0;
  int trunc_level = 0;
  double convergence_gap = std::numeric_limits<double>::infinity();  ///< |value_N - value_{N-1}|
};

enum class Kernel { ever_visit, green, martin, naim };

/// Kernel values at truncations N and N-1 sharing a network. The gap is +inf
/// when N-1 does not contain both arguments strictly above its deepest level.
class KernelEstimator {
 public:
  KernelEstimator(const Network& net, int trunc) : current_(net, trunc) {
    if (trunc >= 2) previous_ = std::make_unique<KernelSolver>(net, trunc - 1);
  }

  [[nodiscard]] const KernelSolver& current() const { return current_; }

  [[nodiscard]] KernelEstimate estimate(Kernel k, VertexId x, VertexId y) const {
    KernelEstimate e;
    e.trunc_level = current_.trunc();
    e.value = eval(current_, k, x, y);
    const auto& t = current_.tree();
    if (previous_ && t.level(x) < previous_->trunc() && t.level(y) < previous_->trunc())
      e.convergence_gap = std::abs(e.value - eval(*previous_, k, x, y));
    return e;
  }

 private:
  static double eval(const KernelSolver& s, Kernel k, VertexId x, VertexId y) {
    switch (k) {
      case Kernel::ever_visit: return s.ever_visit(x, y);
      case Kernel::green: return s.green(x, y);
      case Kernel::martin: return s.martin(x, y);
      case Kernel::naim: return s.naim(x, y);
    }
    return 0.0;
  }

  KernelSolver current_;
  std::unique_ptr<KernelSolver> previous_;
};

inline KernelEstimate ever_visit(const Network& net, VertexId x, VertexId y, int trunc) {
  return KernelEstimator(net, trunc).estimate(Kernel::ever_visit, x, y);
}
inline KernelEstimate green(const Network& net, VertexId x, VertexId y, int trunc) {
  return KernelEstimator(net, trunc).estimate(Kernel::green, x, y);
}
inline KernelEstimate martin_kernel(const Network& net, VertexId x, VertexId y, int trunc) {
  return KernelEstimator(net, trunc).estimate(Kernel::martin, x, y);
}
inline KernelEstimate naim_kernel(const Network& net, VertexId x, VertexId y, int trunc) {
  return KernelEstimator(net, trunc).estimate(Kernel::naim, x, y);
}

}  // namespace augtree
