#pragma once
/**
 * @file energy.hpp
 * @brief Graph energy of harmonic extensions versus the discretized Besov
 * double sum on K.
 *
 * For u sampled on J_n, Hu is the Dirichlet solution on X_n with the J_n
 * values fixed, and the Besov sum is
 *
 *     sum_{x != y in J_n} |u_x - u_y|^2 mu(x) mu(y) / (V(x, y) rho(x, y)^beta),
 *
 * with rho the distance of representative points and V(x, y) the measure
 * of the level-n cells whose representative lies within rho(x, y) of x.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "augtree/errors.hpp"
#include "augtree/linalg.hpp"
#include "augtree/network.hpp"
#include "augtree/resistance.hpp"

namespace augtree {

enum class SampleMode { rep_point, cell_average };

struct SampledFunction {
  int level = 0;
  std::vector<double> values;  ///< indexed by v - level_begin(level)
  std::string source = "closed_form";
};

/// u evaluated at representative points (or averaged over cell samples) of J_n.
inline SampledFunction sample_function(const IndexTree& t, int n, const std::function<double(const Point&)>& u,
                                       SampleMode mode = SampleMode::rep_point) {
  require(n >= 0 && n <= t.max_level(), "sampling level exceeds the tree");
  SampledFunction f;
  f.level = n;
  for (VertexId v = t.level_begin(n); v < t.level_end(n); ++v) {
    double val = 0.0;
    if (mode == SampleMode::rep_point) {
      val = u(t.rep_point(v));
    } else {
      const Eigen::MatrixXd s = t.samples(v);
      for (Eigen::Index i = 0; i < s.cols(); ++i) val += u(s.col(i));
      val /= static_cast<double>(s.cols());
    }
    require(std::isfinite(val), "sampled function has a non-finite value");
    f.values.push_back(val);
  }
  return f;
}

/// Neumaier-compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0, comp_ = 0.0;
};

/// Graph energy in true units on the truncation X_n.
inline double graph_energy(const Network& net, int n, const std::vector<double>& f) {
  return graph_energy(net.graph(n), f) * std::exp(net.log_shift());
}

/// ||f||^2 = sum_x |f(x)|^2 w^{|x|} + E_X[f] on X_n; w <= 0 selects r0^{dbar}/2.
inline double energy_norm(const Network& net, int n, const std::vector<double>& f, double w = 0.0) {
  const auto& t = net.tree();
  if (w <= 0.0) w = 0.5 * std::pow(t.r0(), t.kind() == ModelKind::ifs && t.model().uniform_ratio() ? upper_dimension(t.model()) : 1.0);
  require(f.size() == t.count_through(n), "function must cover X_n");
  CompensatedSum s;
  for (VertexId v = 0; v < f.size(); ++v) s.add(f[v] * f[v] * std::pow(w, t.level(v)));
  return std::sqrt(s.value() + graph_energy(net, n, f));
}

/// Harmonic function on X_{n-1} with the given values on J_n.
inline std::vector<double> harmonic_extension(const Network& net, const SampledFunction& boundary) {
  const auto& t = net.tree();
  const int n = boundary.level;
  require(n >= 0 && n <= net.trunc_level(), "boundary level exceeds the network");
  require(boundary.values.size() == t.level_size(n), "boundary data must cover J_n");
  const ConductanceGraph g = net.graph(n);
  std::vector<char> fixed(g.size(), 0);
  std::vector<double> u(g.size(), 0.0);
  for (VertexId v = t.level_begin(n); v < t.level_end(n); ++v) {
    fixed[v] = 1;
    u[v] = boundary.values[v - t.level_begin(n)];
  }
  DirichletSolver(g, fixed).solve(u);
  return u;
}

struct TraceValue {
  double value = 0.0;
  double gap = 0.0;  ///< oscillation over the last three chain vertices
  VertexId vertex = 0;
};

/// f at the deepest vertex of xi's descent chain inside the domain of f.
inline TraceValue trace(const IndexTree& t, const std::vector<double>& f, const Point& xi) {
  int n = 0;
  while (n < t.max_level() && t.count_through(n + 1) <= f.size()) ++n;
  require(t.count_through(n) == f.size(), "function must be defined on a whole truncation X_n");
  const auto chain = t.descent(xi, n);
  TraceValue tv;
  tv.vertex = chain.back();
  tv.value = f[tv.vertex];
  double lo = tv.value, hi = tv.value;
  for (std::size_t k = chain.size() >= 3 ? chain.size() - 3 : 0; k < chain.size(); ++k) {
    lo = std::min(lo, f[chain[k]]);
    hi = std::max(hi, f[chain[k]]);
  }
  tv.gap = hi - lo;
  return tv;
}

struct BesovResult {
  double value = 0.0;
  std::size_t skipped_pairs = 0;  ///< distinct cells with coincident representatives
};

inline BesovResult besov_seminorm_detailed(const IndexTree& t, const SampledFunction& u, double beta) {
  require(beta > 0.0, "beta must be positive");
  const int n = u.level;
  require(u.values.size() == t.level_size(n), "function must cover J_n");
  const std::size_t N = t.level_size(n);
  const VertexId b = t.level_begin(n);
  BesovResult res;
  CompensatedSum total;
  std::vector<std::pair<double, std::size_t>> by_dist(N);
  std::vector<double> prefix(N + 1);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) by_dist[j] = {point_distance(t.rep_point(b + i), t.rep_point(b + j)), j};
    std::sort(by_dist.begin(), by_dist.end());
    prefix[0] = 0.0;
    for (std::size_t k = 0; k < N; ++k) prefix[k + 1] = prefix[k] + t.measure(b + by_dist[k].second);
    for (std::size_t k = 0; k < N;) {
      std::size_t e = k;  // tie group [k, e)
      while (e < N && by_dist[e].first == by_dist[k].first) ++e;
      const double rho = by_dist[k].first;
      const double vol = prefix[e];
      for (std::size_t q = k; q < e; ++q) {
        const std::size_t j = by_dist[q].second;
        if (j == i) continue;
        if (rho == 0.0) {
          ++res.skipped_pairs;
          continue;
        }
        const double du = u.values[i] - u.values[j];
        if (du == 0.0) continue;
        total.add(du * du * t.measure(b + i) * t.measure(b + j) / (vol * std::pow(rho, beta)));
      }
      k = e;
    }
  }
  res.value = total.value();
  return res;
}

inline double besov_seminorm(const IndexTree& t, const SampledFunction& u, double beta) {
  return besov_seminorm_detailed(t, u, beta).value;
}

struct EnergyReport {
  int level = 0;
  double graph_energy = 0.0;
  double besov = 0.0;
  double ratio = std::numeric_limits<double>::quiet_NaN();  ///< NaN when besov == 0
  double beta = 0.0;
  double norm = 0.0;  ///< ||Hu|| with the default weight
  bool degenerate = false;
};

/// Energy of the harmonic extension against the Besov sum, level by level.
inline std::vector<EnergyReport> comparability_report(std::shared_ptr<const AugmentedTree> at, double lambda,
                                                      const std::function<double(const Point&)>& u,
                                                      const std::vector<int>& levels, SampleMode mode = SampleMode::rep_point) {
  const auto& t = at->tree();
  const Network net = build_nrw(at, lambda);
  const double beta = beta_from_lambda(lambda, t.r0());
  std::vector<EnergyReport> out;
  for (int n : levels) {
    require(n >= 1 && n <= t.max_level(), "level " + std::to_string(n) + " exceeds the tree");
    const auto f = sample_function(t, n, u, mode);
    EnergyReport r;
    r.level = n;
    r.beta = beta;
    const auto hu = harmonic_extension(net, f);
    r.graph_energy = graph_energy(net, n, hu);
    r.norm = energy_norm(net, n, hu);
    r.besov = besov_seminorm(t, f, beta);
    r.degenerate = !(r.besov > 0.0);
    if (!r.degenerate) r.ratio = r.graph_energy / r.besov;
    out.push_back(r);
  }
  return out;
}

}  // namespace augtree
