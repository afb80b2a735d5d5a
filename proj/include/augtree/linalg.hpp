#pragma once
/**
 * @file linalg.hpp
 * @brief Compressed conductance graphs and Dirichlet problems for their
 * Laplacians, solved by sparse LDL^T on the free block.
 */

#include <Eigen/Sparse>
#include <algorithm>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <tuple>
#include <vector>

#include "augtree/errors.hpp"

namespace augtree {

/// Symmetric conductance graph in CSR form; neighbor lists sorted by id.
struct ConductanceGraph {
  std::vector<std::size_t> start{0};
  std::vector<std::size_t> neighbor;
  std::vector<double> conductance;

  [[nodiscard]] std::size_t size() const { return start.size() - 1; }
  [[nodiscard]] std::size_t degree(std::size_t v) const { return start[v + 1] - start[v]; }
  [[nodiscard]] double total(std::size_t v) const {
    double s = 0.0;
    for (std::size_t k = start[v]; k < start[v + 1]; ++k) s += conductance[k];
    return s;
  }
  [[nodiscard]] double weight(std::size_t u, std::size_t v) const {
    const auto b = neighbor.begin() + static_cast<std::ptrdiff_t>(start[u]);
    const auto e = neighbor.begin() + static_cast<std::ptrdiff_t>(start[u + 1]);
    const auto it = std::lower_bound(b, e, v);
    return it != e && *it == v ? conductance[static_cast<std::size_t>(it - neighbor.begin())] : 0.0;
  }

  /// Builds the graph from an undirected edge list (u, v, c); parallel edges add up.
  static ConductanceGraph from_edges(std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, double>>& edges) {
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
    for (const auto& [u, v, c] : edges) {
      require(u < n && v < n && u != v, "edge endpoints out of range or equal");
      require(c > 0.0 && std::isfinite(c), "conductances must be positive and finite");
      adj[u].emplace_back(v, c);
      adj[v].emplace_back(u, c);
    }
    ConductanceGraph g;
    for (auto& a : adj) {
      std::sort(a.begin(), a.end());
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (k > 0 && a[k].first == a[k - 1].first) {
          g.conductance.back() += a[k].second;
          continue;
        }
        g.neighbor.push_back(a[k].first);
        g.conductance.push_back(a[k].second);
      }
      g.start.push_back(g.neighbor.size());
    }
    return g;
  }

  /// Induced subgraph on the vertex prefix [0, n).
  [[nodiscard]] ConductanceGraph prefix(std::size_t n) const {
    require(n <= size(), "prefix larger than the graph");
    ConductanceGraph g;
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t k = start[v]; k < start[v + 1]; ++k) {
        if (neighbor[k] >= n) continue;
        g.neighbor.push_back(neighbor[k]);
        g.conductance.push_back(conductance[k]);
      }
      g.start.push_back(g.neighbor.size());
    }
    return g;
  }
};

/// 1/2 sum over ordered pairs of c(x,y) |f(x) - f(y)|^2.
inline double graph_energy(const ConductanceGraph& g, const std::vector<double>& f) {
  require(f.size() == g.size(), "function size does not match the graph");
  double e = 0.0;
  for (std::size_t v = 0; v < g.size(); ++v)
    for (std::size_t k = g.start[v]; k < g.start[v + 1]; ++k) {
      const std::size_t w = g.neighbor[k];
      if (w > v) e += g.conductance[k] * (f[v] - f[w]) * (f[v] - f[w]);
    }
  return e;
}

/// Vertices reachable from `sources` without passing through `blocked`.
inline std::vector<char> reachable(const ConductanceGraph& g, const std::vector<std::size_t>& sources,
                                   const std::vector<char>& blocked) {
  std::vector<char> seen(g.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t s : sources)
    if (!seen[s]) {
      seen[s] = 1;
      stack.push_back(s);
    }
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    if (blocked[v]) continue;
    for (std::size_t k = g.start[v]; k < g.start[v + 1]; ++k) {
      const std::size_t w = g.neighbor[k];
      if (!seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
    }
  }
  return seen;
}

/**
 * Factorization of the Laplacian block L_QQ = (M - C)_QQ on the free set Q,
 * where M holds the totals of the whole graph. Fixed vertices act as
 * Dirichlet data (absorbing states for the walk).
 */
class DirichletSolver {
 public:
  DirichletSolver(const ConductanceGraph& g, std::vector<char> fixed) : g_(&g), fixed_(std::move(fixed)) {
    require(fixed_.size() == g.size(), "fixed mask size does not match the graph");
    // Free vertices that cannot reach any fixed vertex carry no information
    // about the Dirichlet data; they are pinned to 0 and reported.
    std::vector<std::size_t> anchors;
    for (std::size_t v = 0; v < g.size(); ++v)
      if (fixed_[v]) anchors.push_back(v);
    const auto seen = reachable(g, anchors, std::vector<char>(g.size(), 0));
    for (std::size_t v = 0; v < g.size(); ++v)
      if (!seen[v]) {
        fixed_[v] = 1;
        isolated_.push_back(v);
      }
    index_.assign(g.size(), npos);
    for (std::size_t v = 0; v < g.size(); ++v)
      if (!fixed_[v]) {
        index_[v] = free_.size();
        free_.push_back(v);
      }
    if (free_.empty()) return;
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t i = 0; i < free_.size(); ++i) {
      const std::size_t v = free_[i];
      trip.emplace_back(static_cast<int>(i), static_cast<int>(i), g.total(v));
      for (std::size_t k = g.start[v]; k < g.start[v + 1]; ++k) {
        const std::size_t j = index_[g.neighbor[k]];
        if (j != npos) trip.emplace_back(static_cast<int>(i), static_cast<int>(j), -g.conductance[k]);
      }
    }
    const auto n = static_cast<Eigen::Index>(free_.size());
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(trip.begin(), trip.end());
    solver_.compute(a);
    if (solver_.info() != Eigen::Success) throw NumericalError("Laplacian block factorization failed");
    if (!(solver_.vectorD().minCoeff() > 0.0)) throw NumericalError("Laplacian block is not positive definite");
  }

  [[nodiscard]] const std::vector<std::size_t>& free_vertices() const { return free_; }
  [[nodiscard]] bool is_fixed(std::size_t v) const { return fixed_[v] != 0; }
  /// Free vertices with no path to the Dirichlet set (pinned to 0).
  [[nodiscard]] const std::vector<std::size_t>& isolated() const { return isolated_; }

  /// Solves L u = source on free vertices with u given on fixed vertices.
  /// `u` carries the fixed values in and the full solution out.
  void solve(std::vector<double>& u, const std::vector<double>* source = nullptr) const {
    require(u.size() == g_->size(), "value vector size does not match the graph");
    if (free_.empty()) return;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(free_.size()));
    for (std::size_t i = 0; i < free_.size(); ++i) {
      const std::size_t v = free_[i];
      double s = source ? (*source)[v] : 0.0;
      for (std::size_t k = g_->start[v]; k < g_->start[v + 1]; ++k)
        if (fixed_[g_->neighbor[k]]) s += g_->conductance[k] * u[g_->neighbor[k]];
      b(static_cast<Eigen::Index>(i)) = s;
    }
    const Eigen::VectorXd x = solver_.solve(b);
    if (solver_.info() != Eigen::Success || !x.allFinite()) throw NumericalError("Laplacian solve failed");
    for (std::size_t i = 0; i < free_.size(); ++i) u[free_[i]] = x(static_cast<Eigen::Index>(i));
    for (std::size_t v : isolated_) u[v] = 0.0;
  }

  /// Green column: z = L_QQ^{-1} e_y (zero on fixed vertices).
  [[nodiscard]] std::vector<double> green_column(std::size_t y) const {
    require(!fixed_[y], "Green column requested at a fixed vertex");
    std::vector<double> u(g_->size(), 0.0), src(g_->size(), 0.0);
    src[y] = 1.0;
    solve(u, &src);
    return u;
  }

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  const ConductanceGraph* g_;
  std::vector<char> fixed_;
  std::vector<std::size_t> free_;
  std::vector<std::size_t> index_;
  std::vector<std::size_t> isolated_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

}  // namespace augtree
