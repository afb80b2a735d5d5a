#pragma once
/**
 * @file resistance.hpp
 * @brief Effective resistances on truncations, level-n and limit resistances
 * between closed subsets of K, and bisection for the critical return ratios.
 *
 * R^{(lambda)}(A, B) is positive for lambda above lambda_* and zero below
 * lambda_#; beta = log(lambda) / log(r0) converts ratios to exponents.
 */

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "augtree/errors.hpp"
#include "augtree/linalg.hpp"
#include "augtree/network.hpp"

namespace augtree {

struct ResistanceResult {
  double resistance = 0.0;            ///< +inf when the terminals are disconnected
  double energy = 0.0;                ///< energy of the minimizer, 1/resistance
  std::vector<double> potential;      ///< minimizer: 1 on F, 0 on G
  bool disconnected = false;
};

/// R(F, G) = 1 / min{E[f] : f = 1 on F, f = 0 on G} on the graph g.
inline ResistanceResult effective_resistance(const ConductanceGraph& g, const std::vector<std::size_t>& F,
                                             const std::vector<std::size_t>& G) {
  require(!F.empty() && !G.empty(), "terminal sets must be nonempty");
  ResistanceResult r;
  std::vector<char> in_f(g.size(), 0), fixed(g.size(), 0);
  for (std::size_t v : F) {
    require(v < g.size(), "terminal vertex out of range");
    in_f[v] = fixed[v] = 1;
  }
  for (std::size_t v : G) {
    require(v < g.size(), "terminal vertex out of range");
    if (in_f[v]) {
      r.potential.assign(g.size(), 0.0);
      for (std::size_t w : F) r.potential[w] = 1.0;
      r.energy = std::numeric_limits<double>::infinity();
      return r;  // overlapping terminals: R = 0 by convention
    }
    fixed[v] = 1;
  }
  const auto seen = reachable(g, F, std::vector<char>(g.size(), 0));
  if (std::none_of(G.begin(), G.end(), [&](std::size_t v) { return seen[v] != 0; })) {
    r.disconnected = true;
    r.resistance = std::numeric_limits<double>::infinity();
    r.potential.assign(g.size(), 0.0);
    for (std::size_t w : F) r.potential[w] = 1.0;
    return r;
  }
  std::vector<double> u(g.size(), 0.0);
  for (std::size_t v : F) u[v] = 1.0;
  const DirichletSolver solver(g, fixed);
  solver.solve(u);
  // The current leaving F equals the minimal energy.
  double current = 0.0;
  for (std::size_t v : F)
    for (std::size_t k = g.start[v]; k < g.start[v + 1]; ++k)
      if (!in_f[g.neighbor[k]]) current += g.conductance[k] * (1.0 - u[g.neighbor[k]]);
  r.energy = current;
  r.resistance = 1.0 / current;
  r.potential = std::move(u);
  return r;
}

/// Closed subset of K given by points (resolved along their descent chains)
/// and/or cell labels (resolved to all level-n descendants of the cell).
struct SetDescriptor {
  std::vector<Point> points;
  std::vector<std::string> words;
};

/// Parses "0.5", "0;0", "w:12", joined with '+' (e.g. "0+w:22").
inline SetDescriptor parse_descriptor(const std::string& text, int dim) {
  SetDescriptor d;
  std::stringstream parts(text);
  std::string item;
  while (std::getline(parts, item, '+')) {
    require(!item.empty(), "empty set descriptor item in '" + text + "'");
    if (item.starts_with("w:")) {
      d.words.push_back(item.substr(2));
      continue;
    }
    std::vector<double> coords;
    std::stringstream cs(item);
    std::string c;
    while (std::getline(cs, c, ';')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        throw ValidationError("bad coordinate '" + c + "' in set descriptor");
      }
      require(used == c.size() && std::isfinite(v), "bad coordinate '" + c + "' in set descriptor");
      coords.push_back(v);
    }
    require(static_cast<int>(coords.size()) == dim, "point '" + item + "' has wrong dimension");
    d.points.emplace_back(Eigen::Map<const Point>(coords.data(), static_cast<Eigen::Index>(coords.size())));
  }
  require(!d.points.empty() || !d.words.empty(), "empty set descriptor");
  return d;
}

/// kappa_n(A): level-n vertex set approximating A.
inline std::vector<VertexId> resolve_descriptor(const IndexTree& t, const SetDescriptor& a, int n) {
  std::vector<VertexId> out;
  for (const auto& p : a.points) out.push_back(t.locate(p, n));
  for (const auto& w : a.words) {
    const VertexId v = t.find(w);
    const auto cells = t.level(v) <= n ? t.descendants_at(v, n) : std::vector<VertexId>{t.ancestor(v, n)};
    out.insert(out.end(), cells.begin(), cells.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  require(!out.empty(), "set descriptor resolves to no vertex at level " + std::to_string(n));
  return out;
}

/// Effective resistance on X_n in true (unshifted) units.
inline ResistanceResult effective_resistance(const Network& net, int n, const std::vector<VertexId>& F, const std::vector<VertexId>& G) {
  auto r = effective_resistance(net.graph(n), F, G);
  const double back = std::exp(-net.log_shift());
  r.resistance *= back;
  r.energy /= back;
  return r;
}

/// R_n^{(lambda)}(A, B) = R_{X_n}(kappa_n(A), kappa_n(B)).
inline double level_resistance(const Network& net, int n, const SetDescriptor& a, const SetDescriptor& b) {
  const auto& t = net.tree();
  return effective_resistance(net, n, resolve_descriptor(t, a, n), resolve_descriptor(t, b, n)).resistance;
}

/// Harmonic minimizer on X_n with u = 1 on kappa_n(A), u = 0 on kappa_n(B).
inline std::vector<double> variational_minimizer(const Network& net, int n, const SetDescriptor& a, const SetDescriptor& b) {
  const auto& t = net.tree();
  const auto r = effective_resistance(net, n, resolve_descriptor(t, a, n), resolve_descriptor(t, b, n));
  if (r.disconnected) throw NumericalError("terminals are disconnected in the truncation");
  return r.potential;
}

enum class Classification { positive, vanishing, undecided };

inline const char* to_string(Classification c) {
  switch (c) {
    case Classification::positive: return "positive";
    case Classification::vanishing: return "vanishing";
    case Classification::undecided: return "undecided";
  }
  return "?";
}

struct CurveVerdict {
  Classification classification = Classification::undecided;
  /// Asymptotic R_{n+1}/R_n implied by the fit (1/s); 0 when converged.
  double decay_ratio = std::numeric_limits<double>::quiet_NaN();
  /// Dominant growth factor s of the conductance increments.
  double growth = std::numeric_limits<double>::quiet_NaN();
  int order = 0;
};

struct ClassifierOptions {
  double tol = 0.015;         ///< dead zone around s = 1
  int max_order = 4;          ///< recurrence order cap
  double roundoff = 1e-10;    ///< increments below this fraction of C_n count as converged
  double max_phase = 0.25;    ///< largest |Im s| / |s| still read as a real root
  int turning_window = 3;     ///< a sign change among this many last increments means undecided
};

namespace detail {

/// Dominant root of an order-k recurrence fitted to the last k + rows
/// increments (rows >= k+1 equations). NaN for an oscillating or negative
/// dominant root; `resid` receives the scaled residual norm.
inline double recurrence_root(const std::vector<double>& d, int k, std::size_t rows, double max_phase, double* resid = nullptr) {
  const std::size_t ku = static_cast<std::size_t>(k);
  const std::size_t off = d.size() - rows - ku;
  double scale = 0.0;
  for (std::size_t i = off; i < d.size(); ++i) scale = std::max(scale, std::abs(d[i]));
  Eigen::MatrixXd A(static_cast<Eigen::Index>(rows), k);
  Eigen::VectorXd b(static_cast<Eigen::Index>(rows));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < ku; ++j) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d[off + i + j] / scale;
    b(static_cast<Eigen::Index>(i)) = d[off + i + ku] / scale;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-12);
  const Eigen::VectorXd a = svd.solve(b);
  if (resid) *resid = (A * a - b).norm();
  // companion matrix of s^k - a_{k-1} s^{k-1} - ... - a_0
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(k, k);
  for (int j = 0; j < k; ++j) comp(0, j) = a(k - 1 - j);
  for (int j = 1; j < k; ++j) comp(j, j - 1) = 1.0;
  const Eigen::VectorXcd ev = comp.eigenvalues();
  Eigen::Index imax = 0;
  ev.cwiseAbs().maxCoeff(&imax);
  const std::complex<double> root = ev(imax);
  // a conjugate pair close to the positive axis is read as its modulus
  if (root.real() <= 0.0 || std::abs(root.imag()) > max_phase * std::abs(root)) return std::numeric_limits<double>::quiet_NaN();
  return std::abs(root);
}

}  // namespace detail

/**
 * Classifies a resistance curve R_1..R_n from its values alone.
 *
 * With C_n = 1/R_n and increments d_n = C_{n+1} - C_n, the increments of a
 * self-similar network obey (asymptotically) a linear recurrence whose
 * dominant root s decides the limit: s > 1 means C_n -> infinity (R -> 0,
 * vanishing), s < 1 means C_n converges (R > 0, positive).
 *
 * If some order k <= K fits its last 2k+1 increments to round-off, that
 * root is used. Otherwise the curve still carries finite-level transients and
 * s is the median of three estimates: orders K and K-1 on their minimal
 * windows and order K on every increment, where K = min(max_order, (#d-1)/2).
 * Single high-order fits on short curves regularly produce spurious roots;
 * the median suppresses them. A sign change among the last few increments
 * (the curve is still turning) leaves the curve undecided.
 */
inline CurveVerdict classify_curve(const std::vector<double>& R, const ClassifierOptions& opt = {}) {
  CurveVerdict v;
  if (R.size() < 4) return v;
  std::vector<double> C(R.size());
  for (std::size_t i = 0; i < R.size(); ++i) {
    if (!(R[i] > 0.0) || !std::isfinite(R[i])) return v;
    C[i] = 1.0 / R[i];
  }
  std::vector<double> d(C.size() - 1);
  for (std::size_t i = 0; i + 1 < C.size(); ++i) d[i] = C[i + 1] - C[i];
  const int K = std::min(opt.max_order, static_cast<int>((d.size() - 1) / 2));
  double dscale = 0.0;
  for (std::size_t i = d.size() - std::min<std::size_t>(d.size(), 2 * static_cast<std::size_t>(K) + 1); i < d.size(); ++i)
    dscale = std::max(dscale, std::abs(d[i]));
  if (dscale <= opt.roundoff * std::abs(C.back())) {
    v.classification = Classification::positive;
    v.decay_ratio = 0.0;
    v.growth = 0.0;
    return v;
  }
  const std::size_t window = std::min<std::size_t>(d.size(), static_cast<std::size_t>(std::max(opt.turning_window, 1)));
  for (std::size_t i = d.size() - window; i < d.size(); ++i)
    if (i > 0 && (d[i] > 0.0) != (d[i - 1] > 0.0)) return v;

  double s = std::numeric_limits<double>::quiet_NaN();
  for (int k = 1; k <= K; ++k) {
    double resid = 0.0;
    const double root = detail::recurrence_root(d, k, static_cast<std::size_t>(k) + 1, opt.max_phase, &resid);
    if (resid <= 1e-9) {
      s = root;
      v.order = k;
      break;
    }
  }
  if (v.order == 0) {
    std::vector<double> est;
    for (const double e : {detail::recurrence_root(d, K, static_cast<std::size_t>(K) + 1, opt.max_phase),
                           K > 1 ? detail::recurrence_root(d, K - 1, static_cast<std::size_t>(K), opt.max_phase)
                                 : std::numeric_limits<double>::quiet_NaN(),
                           detail::recurrence_root(d, K, d.size() - static_cast<std::size_t>(K), opt.max_phase)})
      if (std::isfinite(e)) est.push_back(e);
    if (est.empty()) return v;
    std::sort(est.begin(), est.end());
    s = est.size() % 2 == 1 ? est[est.size() / 2] : 0.5 * (est[est.size() / 2 - 1] + est[est.size() / 2]);
    v.order = K;
  }
  if (!std::isfinite(s)) return v;
  v.growth = s;
  v.decay_ratio = 1.0 / s;
  if (s > 1.0 + opt.tol) v.classification = Classification::vanishing;
  else if (s < 1.0 - opt.tol) v.classification = Classification::positive;
  return v;
}

struct ResistanceCurve {
  double lambda = 0.0;
  int n_min = 1;
  std::vector<double> values;  ///< R_n for n = n_min .. n_min + size - 1
  Classification classification = Classification::undecided;
  double decay_ratio = std::numeric_limits<double>::quiet_NaN();
  double growth = std::numeric_limits<double>::quiet_NaN();
};

/// R_n for n = n_min..n_max on one network (the tree must reach n_max), then classified.
inline ResistanceCurve limit_resistance(const Network& net, const SetDescriptor& a, const SetDescriptor& b, int n_max,
                                        const ClassifierOptions& opt = {}, int n_min = 1) {
  require(n_min >= 1 && n_min <= n_max, "need 1 <= n_min <= n_max");
  require(n_max <= net.trunc_level(), "n_max exceeds the tree depth");
  ResistanceCurve c;
  c.lambda = net.lambda();
  c.n_min = n_min;
  for (int n = n_min; n <= n_max; ++n) c.values.push_back(level_resistance(net, n, a, b));
  const auto v = classify_curve(c.values, opt);
  c.classification = v.classification;
  c.decay_ratio = v.decay_ratio;
  c.growth = v.growth;
  return c;
}

inline double beta_from_lambda(double lambda, double r0) {
  require(lambda > 0.0 && lambda < 1.0, "lambda must lie in (0,1)");
  require(r0 > 0.0 && r0 < 1.0, "r0 must lie in (0,1)");
  return std::log(lambda) / std::log(r0);
}

/// max_i log p_i / log r0 for an IFS with one common ratio r0.
inline double upper_dimension(const ModelSpec& spec) {
  require(spec.kind == ModelKind::ifs, "upper dimension needs an IFS model");
  require(spec.uniform_ratio(), "upper dimension is only supported for a uniform contraction ratio");
  const double lr = std::log(spec.maps.front().ratio);
  double d = 0.0;
  for (double p : spec.weights) d = std::max(d, std::log(p) / lr);
  return d;
}

enum class CriticalMode { sharp, star };

struct CriticalProbe {
  double lambda;
  Classification state;  ///< aggregated over pairs: vanishing = below, positive = above
  std::vector<ResistanceCurve> curves;
};

struct CriticalSearchResult {
  CriticalMode mode = CriticalMode::sharp;
  double lambda_lo = 0.0, lambda_hi = 0.0;  ///< lo classified below, hi above
  double beta_lo = 0.0, beta_hi = 0.0;      ///< beta(hi) <= beta(lo)
  std::vector<std::pair<SetDescriptor, SetDescriptor>> pairs;
  std::vector<CriticalProbe> probes;
  int iterations = 0;
  bool stalled = false;                     ///< stopped early on undecided probes
  [[nodiscard]] double width() const { return lambda_hi - lambda_lo; }
};

struct CriticalOptions {
  int n_max = 14;
  int iterations = 12;
  ClassifierOptions classifier{};
  double lo = 0.0, hi = 0.0;  ///< initial bracket; 0 picks 5% and 98% of the admissible range
};

namespace detail {

inline Classification aggregate(CriticalMode mode, const std::vector<ResistanceCurve>& curves) {
  bool any_pos = false, any_van = false, any_und = false;
  for (const auto& c : curves) {
    any_pos |= c.classification == Classification::positive;
    any_van |= c.classification == Classification::vanishing;
    any_und |= c.classification == Classification::undecided;
  }
  if (mode == CriticalMode::sharp) {
    // below lambda_#: every pair vanishes
    if (any_pos) return Classification::positive;
    return any_und ? Classification::undecided : Classification::vanishing;
  }
  // above lambda_*: every pair is positive
  if (any_van) return Classification::vanishing;
  return any_und ? Classification::undecided : Classification::positive;
}

}  // namespace detail

/// Boundary pairs used by the searches: fixed points of the maps (sharp) or
/// the given V0 (star), all unordered pairs of distinct points.
inline std::vector<std::pair<SetDescriptor, SetDescriptor>> point_pairs(const std::vector<Point>& pts) {
  std::vector<std::pair<SetDescriptor, SetDescriptor>> out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if ((pts[i] - pts[j]).norm() > 1e-12) out.push_back({SetDescriptor{{pts[i]}, {}}, SetDescriptor{{pts[j]}, {}}});
  return out;
}

inline std::vector<Point> fixed_points(const ModelSpec& spec) {
  std::vector<Point> pts;
  for (const auto& s : spec.maps) pts.push_back(s.fixed_point());
  return pts;
}

/**
 * Bisection for lambda_# (sharp) or lambda_* (star) on (0, r0^{dbar}).
 * Each probe classifies the curves of every pair. An undecided midpoint
 * triggers probes at the two quarter points; if neither decides, the search
 * stops with the current bracket.
 */
inline CriticalSearchResult critical_search(std::shared_ptr<const AugmentedTree> at, CriticalMode mode,
                                            std::vector<std::pair<SetDescriptor, SetDescriptor>> pairs,
                                            const CriticalOptions& opt = {}) {
  const auto& t = at->tree();
  require(t.kind() == ModelKind::ifs, "critical search needs an IFS model");
  require(!pairs.empty(), "critical search needs at least one pair");
  require(opt.n_max >= 4 && opt.n_max <= t.max_level(), "n_max must lie in [4, tree depth]");
  require(opt.iterations >= 0, "iterations must be >= 0");
  const double upper = std::pow(t.r0(), upper_dimension(t.model()));
  CriticalSearchResult res;
  res.mode = mode;
  res.pairs = pairs;
  auto probe = [&](double lambda) {
    const Network net = build_nrw(at, lambda);
    CriticalProbe p{lambda, Classification::undecided, {}};
    for (const auto& [a, b] : pairs) p.curves.push_back(limit_resistance(net, a, b, opt.n_max, opt.classifier));
    p.state = detail::aggregate(mode, p.curves);
    res.probes.push_back(p);
    return p.state;
  };
  double lo = opt.lo > 0.0 ? opt.lo : 0.05 * upper;
  double hi = opt.hi > 0.0 ? opt.hi : 0.98 * upper;
  require(lo < hi && hi < 1.0, "initial bracket must satisfy 0 < lo < hi < 1");
  if (probe(lo) != Classification::vanishing)
    throw NumericalError("lower end of the bracket (lambda = " + std::to_string(lo) + ") is not classified below the critical value");
  if (probe(hi) != Classification::positive)
    throw NumericalError("upper end of the bracket (lambda = " + std::to_string(hi) + ") is not classified above the critical value");
  for (int it = 0; it < opt.iterations; ++it) {
    ++res.iterations;
    const double mid = 0.5 * (lo + hi);
    const auto s = probe(mid);
    if (s == Classification::vanishing) {
      lo = mid;
      continue;
    }
    if (s == Classification::positive) {
      hi = mid;
      continue;
    }
    const double q1 = 0.5 * (lo + mid), q3 = 0.5 * (mid + hi);
    const auto s1 = probe(q1);
    const auto s3 = probe(q3);
    const double lo0 = lo, hi0 = hi;
    if (s1 == Classification::vanishing) lo = q1;
    if (s3 == Classification::positive) hi = q3;
    if (s1 == Classification::positive) hi = q1;
    else if (s3 == Classification::vanishing) lo = q3;
    if (lo == lo0 && hi == hi0) {
      res.stalled = true;
      break;
    }
  }
  res.lambda_lo = lo;
  res.lambda_hi = hi;
  res.beta_lo = beta_from_lambda(lo, t.r0());
  res.beta_hi = beta_from_lambda(hi, t.r0());
  return res;
}

/// lambda_#: sup of lambda with R(i^inf, j^inf) = 0 for all map fixed points.
inline CriticalSearchResult critical_lambda_sharp(std::shared_ptr<const AugmentedTree> at, const CriticalOptions& opt = {}) {
  return critical_search(at, CriticalMode::sharp, point_pairs(fixed_points(at->tree().model())), opt);
}

/// lambda_*: inf of lambda with R(xi, eta) > 0 for all distinct xi, eta in V0.
inline CriticalSearchResult critical_lambda_star(std::shared_ptr<const AugmentedTree> at, const std::vector<Point>& v0,
                                                 const CriticalOptions& opt = {}) {
  return critical_search(at, CriticalMode::star, point_pairs(v0), opt);
}

/// Post-critical boundary of the built-in p.c.f. models.
inline std::vector<Point> builtin_boundary(const ModelSpec& spec) {
  if (spec.name == "gasket") return fixed_points(spec);
  if (spec.name == "interval" || spec.name == "rotated-interval") return {Point::Constant(1, 0.0), Point::Constant(1, 1.0)};
  throw ValidationError("no built-in boundary V0 for model '" + spec.name + "'; pass the boundary points explicitly");
}

}  // namespace augtree
