#pragma once
/**
 * @file augmented_tree.hpp
 * @brief Augmented trees: index trees plus horizontal edges between nearby
 * same-level cells, with their graph metric and Gromov geometry.
 *
 * Every augmented tree is pre-augmented (a horizontal edge between x and y
 * implies x^- = y^- or a horizontal edge between x^- and y^-), so a geodesic
 * between x and y can be taken to go up from x to some level l, run
 * horizontally inside J_l, and go down to y:
 *
 *     d(x, y) = min_l (|x| - l) + h_l(x_l, y_l) + (|y| - l)
 *
 * with x_l, y_l the level-l ancestors and h_l the distance in the level-l
 * horizontal graph. The canonical geodesic uses the smallest such l.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "augtree/errors.hpp"
#include "augtree/index_tree.hpp"

namespace augtree {

struct GeodesicPath {
  std::vector<VertexId> vertices;
  int up_len = 0;
  int horiz_len = 0;
  int down_len = 0;
  int horiz_level = 0;
  [[nodiscard]] int length() const { return up_len + horiz_len + down_len; }
};

struct HyperbolicityReport {
  int max_horiz_geodesic = 0;          ///< over all scanned levels
  std::vector<int> per_level;          ///< max horizontal geodesic segment inside J_m, m = 0..levels_scanned
  double delta_sample = 0.0;           ///< empirical Gromov delta over sampled triples
  int levels_scanned = 0;
  bool exhaustive = true;              ///< false when some level was sampled instead of scanned
  std::size_t max_degree = 0;
};

class AugmentedTree {
 public:
  AugmentedTree(std::shared_ptr<const IndexTree> tree, double gamma, std::vector<std::vector<VertexId>> horizontal)
      : tree_(std::move(tree)), gamma_(gamma), horiz_(std::move(horizontal)) {}

  [[nodiscard]] const IndexTree& tree() const { return *tree_; }
  [[nodiscard]] std::shared_ptr<const IndexTree> tree_ptr() const { return tree_; }
  [[nodiscard]] double gamma() const { return gamma_; }
  [[nodiscard]] std::span<const VertexId> horizontal_neighbors(VertexId v) const { return horiz_[v]; }
  [[nodiscard]] bool has_horizontal_edge(VertexId x, VertexId y) const {
    const auto& n = horiz_[x];
    return std::binary_search(n.begin(), n.end(), y);
  }
  [[nodiscard]] std::size_t horizontal_edge_count() const {
    std::size_t k = 0;
    for (const auto& n : horiz_) k += n.size();
    return k / 2;
  }
  [[nodiscard]] std::size_t degree(VertexId v) const {
    return horiz_[v].size() + tree_->children(v).size() + (v == IndexTree::root() ? 0 : 1);
  }

  /// Distance inside the horizontal graph of level(u); nullopt if it exceeds cap.
  [[nodiscard]] std::optional<int> horizontal_distance(VertexId u, VertexId v, int cap) const {
    if (u == v) return 0;
    std::unordered_map<VertexId, int> dist{{u, 0}};
    std::deque<VertexId> queue{u};
    while (!queue.empty()) {
      const VertexId a = queue.front();
      queue.pop_front();
      const int da = dist[a];
      if (da >= cap) continue;
      for (VertexId b : horiz_[a]) {
        if (dist.contains(b)) continue;
        if (b == v) return da + 1;
        dist.emplace(b, da + 1);
        queue.push_back(b);
      }
    }
    return std::nullopt;
  }

  /// Shortest horizontal path u -> v; BFS scans neighbors in increasing id
  /// order and keeps the first predecessor found.
  [[nodiscard]] std::vector<VertexId> horizontal_path(VertexId u, VertexId v) const {
    if (u == v) return {u};
    std::unordered_map<VertexId, VertexId> pred{{u, u}};
    std::deque<VertexId> queue{u};
    while (!queue.empty()) {
      const VertexId a = queue.front();
      queue.pop_front();
      for (VertexId b : horiz_[a]) {
        if (pred.contains(b)) continue;
        pred.emplace(b, a);
        if (b == v) {
          std::vector<VertexId> path{v};
          for (VertexId w = v; w != u;) path.push_back(w = pred.at(w));
          std::reverse(path.begin(), path.end());
          return path;
        }
        queue.push_back(b);
      }
    }
    throw NumericalError("vertices are not horizontally connected");
  }

  /// Canonical geodesic between x and y.
  [[nodiscard]] GeodesicPath canonical_geodesic(VertexId x, VertexId y) const {
    const auto& t = *tree_;
    const int lx = t.level(x), ly = t.level(y);
    int best = lx + ly;  // via the root
    int best_level = 0;
    int best_h = 0;
    for (int l = std::min(lx, ly); l >= 0; --l) {
      const int vertical = lx + ly - 2 * l;
      if (vertical > best) break;
      const VertexId xl = t.ancestor(x, l), yl = t.ancestor(y, l);
      const auto h = horizontal_distance(xl, yl, best - vertical);
      if (h && vertical + *h <= best) {
        best = vertical + *h;
        best_level = l;
        best_h = *h;
      }
    }
    GeodesicPath g;
    g.horiz_level = best_level;
    g.up_len = lx - best_level;
    g.down_len = ly - best_level;
    g.horiz_len = best_h;
    for (VertexId v = x; t.level(v) > best_level; v = t.parent(v)) g.vertices.push_back(v);
    const auto mid = horizontal_path(t.ancestor(x, best_level), t.ancestor(y, best_level));
    g.vertices.insert(g.vertices.end(), mid.begin(), mid.end());
    std::vector<VertexId> down;
    for (VertexId v = y; t.level(v) > best_level; v = t.parent(v)) down.push_back(v);
    g.vertices.insert(g.vertices.end(), down.rbegin(), down.rend());
    return g;
  }

  [[nodiscard]] int graph_distance(VertexId x, VertexId y) const {
    if (x == y) return 0;
    const auto& t = *tree_;
    const int lx = t.level(x), ly = t.level(y);
    int best = lx + ly;
    for (int l = std::min(lx, ly); l >= 0; --l) {
      const int vertical = lx + ly - 2 * l;
      if (vertical >= best) break;
      const auto h = horizontal_distance(t.ancestor(x, l), t.ancestor(y, l), best - vertical);
      if (h) best = std::min(best, vertical + *h);
    }
    return best;
  }

  /// (x|y) = (|x| + |y| - d(x,y)) / 2, a half-integer.
  [[nodiscard]] double gromov_product(VertexId x, VertexId y) const {
    const auto& t = *tree_;
    return 0.5 * static_cast<double>(t.level(x) + t.level(y) - graph_distance(x, y));
  }

  /// (x_n | y_n) for the depth-n descent cells of xi and eta; within 1 of
  /// the supremum over geodesic rays once the value has stabilized.
  [[nodiscard]] double boundary_gromov_product(const Point& xi, const Point& eta, int depth) const {
    require(depth <= tree_->max_level(), "depth exceeds the tree's max level");
    return gromov_product(tree_->locate(xi, depth), tree_->locate(eta, depth));
  }

  [[nodiscard]] double gromov_metric(double a, VertexId x, VertexId y) const {
    require(a > 0.0, "Gromov metric parameter must be positive");
    if (x == y) return 0.0;
    return std::exp(-a * gromov_product(x, y));
  }

  /// max measure over the vertices of the canonical geodesic between x and y.
  [[nodiscard]] double p_mu(VertexId x, VertexId y) const {
    require(x != y, "p_mu needs distinct vertices");
    double best = 0.0;
    for (VertexId z : canonical_geodesic(x, y).vertices) best = std::max(best, tree_->measure(z));
    return best;
  }

  /// mu(B(xi, r)) estimated by the cells of the resolution level whose
  /// representative point lies within r of xi.
  [[nodiscard]] double ball_volume(const Point& xi, double r, int resolution_level) const {
    require(r > 0.0, "ball radius must be positive");
    require(resolution_level >= 0 && resolution_level <= tree_->max_level(), "resolution level exceeds the tree's max level");
    const auto& t = *tree_;
    double v = 0.0;
    for (VertexId x = t.level_begin(resolution_level); x < t.level_end(resolution_level); ++x)
      if (point_distance(t.rep_point(x), xi) <= r) v += t.measure(x);
    return v;
  }

 private:
  std::shared_ptr<const IndexTree> tree_;
  double gamma_;
  std::vector<std::vector<VertexId>> horiz_;
};

namespace detail {

struct GridKeyHash {
  std::size_t operator()(const std::vector<long>& k) const {
    std::size_t h = 1469598103934665603ull;
    for (long v : k) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ull;
    return h;
  }
};

}  // namespace detail

/**
 * Adds E_h = {(x, y) in J_m x J_m : x != y, dist(Phi(x), Phi(y)) <= gamma r0^m}
 * using sampled set distances. Candidate pairs are found by hashing
 * representative points into a grid whose spacing covers the largest cell
 * radius at that level. Throws if the result is not pre-augmented.
 */
inline AugmentedTree build_augmented_tree(std::shared_ptr<const IndexTree> tree, double gamma) {
  require(gamma > 0.0 && std::isfinite(gamma), "gamma must be positive");
  const auto& t = *tree;
  std::vector<std::vector<VertexId>> horiz(t.size());

  for (int m = 1; m <= t.max_level(); ++m) {
    const double threshold = gamma * std::pow(t.r0(), m);
    const double tol = 1e-12 * std::pow(t.r0(), m);
    const VertexId begin = t.level_begin(m), end = t.level_end(m);
    double rmax = 0.0;
    std::vector<Eigen::MatrixXd> samples;
    samples.reserve(end - begin);
    for (VertexId v = begin; v < end; ++v) {
      rmax = std::max(rmax, t.cell_radius(v));
      samples.push_back(t.samples(v));
    }
    const double spacing = 2.0 * rmax + threshold + tol;
    std::unordered_map<std::vector<long>, std::vector<VertexId>, detail::GridKeyHash> grid;
    auto key_of = [&](const Point& p) {
      std::vector<long> k(static_cast<std::size_t>(p.size()));
      for (Eigen::Index i = 0; i < p.size(); ++i) k[static_cast<std::size_t>(i)] = static_cast<long>(std::floor(p(i) / spacing));
      return k;
    };
    for (VertexId v = begin; v < end; ++v) grid[key_of(t.rep_point(v))].push_back(v);

    const int d = t.dim();
    std::vector<long> offset(static_cast<std::size_t>(d));
    for (VertexId x = begin; x < end; ++x) {
      const auto base = key_of(t.rep_point(x));
      long combos = 1;
      for (int i = 0; i < d; ++i) combos *= 3;
      for (long c = 0; c < combos; ++c) {
        long r = c;
        auto key = base;
        for (int i = 0; i < d; ++i) {
          key[static_cast<std::size_t>(i)] += r % 3 - 1;
          r /= 3;
        }
        const auto it = grid.find(key);
        if (it == grid.end()) continue;
        for (VertexId y : it->second) {
          if (y <= x) continue;
          const double center = point_distance(t.rep_point(x), t.rep_point(y));
          if (center - t.cell_radius(x) - t.cell_radius(y) > threshold + tol) continue;
          if (set_distance(samples[x - begin], samples[y - begin]) <= threshold + tol) {
            horiz[x].push_back(y);
            horiz[y].push_back(x);
          }
        }
      }
    }
  }
  for (auto& n : horiz) std::sort(n.begin(), n.end());

  for (VertexId x = 0; x < t.size(); ++x) {
    if (t.level(x) < 2) continue;
    for (VertexId y : horiz[x]) {
      const VertexId px = t.parent(x), py = t.parent(y);
      if (px != py && !std::binary_search(horiz[px].begin(), horiz[px].end(), py))
        throw ValidationError("augmented tree is not pre-augmented: edge " + t.label(x) + " -- " + t.label(y) +
                              " has non-adjacent parents (gamma or sampling inconsistent across levels)");
    }
  }
  return AugmentedTree(std::move(tree), gamma, std::move(horiz));
}

inline AugmentedTree build_augmented_tree(IndexTree tree, double gamma) {
  return build_augmented_tree(std::make_shared<const IndexTree>(std::move(tree)), gamma);
}

/**
 * Maximal length of horizontal geodesic segments per level, and an empirical
 * Gromov delta from random triples.
 *
 * A horizontal segment between u, v in J_m is geodesic iff h_m(u,v) = d(u,v),
 * and d(u,v) = min(h_m(u,v), 2 + d(u^-, v^-)). Levels with at most
 * `exhaustive_limit` ordered pairs are scanned completely from this
 * recursion; larger levels fall back to canonical geodesics of `sample_size`
 * random pairs.
 */
inline HyperbolicityReport hyperbolicity_report(const AugmentedTree& at, int max_level, std::size_t sample_size,
                                                std::uint64_t seed = 1, std::size_t exhaustive_limit = 25'000'000) {
  const auto& t = at.tree();
  require(max_level >= 0 && max_level <= t.max_level(), "max_level exceeds the tree");
  HyperbolicityReport rep;
  rep.levels_scanned = max_level;
  rep.per_level.assign(static_cast<std::size_t>(max_level) + 1, 0);
  std::mt19937_64 rng(seed);

  constexpr std::uint8_t far = 255;
  std::vector<std::uint8_t> prev{0};  // d on J_0 x J_0
  bool table_valid = true;
  for (int m = 1; m <= max_level; ++m) {
    const std::size_t n = t.level_size(m);
    const VertexId begin = t.level_begin(m);
    int level_max = 0;
    if (table_valid && n * n <= exhaustive_limit && 2 * m + 2 < far) {
      const std::size_t np = t.level_size(m - 1);
      const VertexId pbegin = t.level_begin(m - 1);
      std::vector<std::uint8_t> cur(n * n, far);
      std::vector<int> dist(n, -1);
      std::vector<VertexId> touched;
      const int cap = 2 * m;  // d(u, v) <= 2m via the root
      for (std::size_t iu = 0; iu < n; ++iu) {
        for (VertexId w : touched) dist[w - begin] = -1;
        touched.clear();
        std::deque<VertexId> queue{begin + iu};
        dist[iu] = 0;
        touched.push_back(begin + iu);
        while (!queue.empty()) {
          const VertexId a = queue.front();
          queue.pop_front();
          const int da = dist[a - begin];
          if (da >= cap) continue;
          for (VertexId b : at.horizontal_neighbors(a)) {
            if (dist[b - begin] >= 0) continue;
            dist[b - begin] = da + 1;
            touched.push_back(b);
            queue.push_back(b);
          }
        }
        const std::size_t pu = t.parent(begin + iu) - pbegin;
        for (std::size_t iv = 0; iv < n; ++iv) {
          if (iv == iu) {
            cur[iu * n + iv] = 0;
            continue;
          }
          const std::size_t pv = t.parent(begin + iv) - pbegin;
          const int up = 2 + prev[pu * np + pv];
          const int h = dist[iv] < 0 ? far : dist[iv];
          const int dd = std::min(h, up);
          cur[iu * n + iv] = static_cast<std::uint8_t>(std::min(dd, static_cast<int>(far)));
          if (h == dd) level_max = std::max(level_max, h);
        }
      }
      prev = std::move(cur);
    } else {
      table_valid = false;
      rep.exhaustive = false;
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (std::size_t s = 0; s < sample_size; ++s) {
        const auto g = at.canonical_geodesic(begin + pick(rng), begin + pick(rng));
        if (g.up_len == 0) level_max = std::max(level_max, g.horiz_len);
      }
    }
    rep.per_level[static_cast<std::size_t>(m)] = level_max;
    rep.max_horiz_geodesic = std::max(rep.max_horiz_geodesic, level_max);
  }

  const std::size_t total = t.count_through(max_level);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  for (std::size_t s = 0; s < sample_size; ++s) {
    const VertexId x = pick(rng), y = pick(rng), z = pick(rng);
    const double xy = at.gromov_product(x, y), xz = at.gromov_product(x, z), zy = at.gromov_product(z, y);
    rep.delta_sample = std::max({rep.delta_sample, std::min(xz, zy) - xy, std::min(xy, zy) - xz, std::min(xy, xz) - zy});
  }
  for (VertexId v = 0; v < total; ++v) rep.max_degree = std::max(rep.max_degree, at.degree(v));
  return rep;
}

}  // namespace augtree
