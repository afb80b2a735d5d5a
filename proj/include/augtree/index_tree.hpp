#pragma once
/**
 * @file index_tree.hpp
 * @brief Index trees (trees of partitions) of a compact space of homogeneous type.
 *
 * An index tree is a rooted, leveled tree whose vertices x carry a compact
 * cell Phi(x) of K. Children partition their parent's cell, every cell at
 * level m sits between two balls of radius ~ r0^m around a representative
 * point, and cells at the same level overlap only on null sets.
 *
 * Cells are represented by finite sample sets. For self-similar sets the
 * sample of Phi(x) = S_x(K) is the image under S_x of a fixed base sample of
 * K (all refinement points S_w(z) for |w| = sample_depth and z ranging over
 * the fixed points of the maps), so set distances carry an error of at most
 * 2 * r0^(|x| + sample_depth). For point clouds a cell is the set of cloud
 * points assigned to it.
 *
 * Vertex ids are contiguous per level, levels in increasing order, so the
 * truncation X_n = J_0 u ... u J_n is the id range [0, count_through(n)).
 */

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "augtree/errors.hpp"
#include "augtree/model.hpp"

namespace augtree {

using VertexId = std::size_t;
inline constexpr VertexId no_vertex = std::numeric_limits<VertexId>::max();

/// Label of an IFS word using 1-based symbols, e.g. {0,1} -> "12". The empty
/// word (the root) is labelled "o". Alphabets with more than nine symbols use
/// dot separators.
inline std::string word_label(const std::vector<int>& word, std::size_t alphabet) {
  if (word.empty()) return "o";
  std::string s;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (alphabet > 9 && i > 0) s += '.';
    s += std::to_string(word[i] + 1);
  }
  return s;
}

inline double point_distance(const Point& a, const Point& b) { return (a - b).norm(); }

/// Minimal distance between two finite sample sets stored as columns.
inline double set_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < a.cols(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) best = std::min(best, (a.col(i) - b.col(j)).squaredNorm());
  return std::sqrt(best);
}

inline double point_set_distance(const Point& p, const Eigen::MatrixXd& set) {
  return std::sqrt((set.colwise() - p).colwise().squaredNorm().minCoeff());
}

class IndexTree {
 public:
  [[nodiscard]] ModelKind kind() const { return model_.kind; }
  [[nodiscard]] const ModelSpec& model() const { return model_; }
  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] double r0() const { return r0_; }
  [[nodiscard]] int max_level() const { return static_cast<int>(level_offset_.size()) - 2; }
  [[nodiscard]] std::size_t size() const { return level_.size(); }
  [[nodiscard]] std::size_t level_size(int m) const { return level_end(m) - level_begin(m); }
  [[nodiscard]] VertexId level_begin(int m) const { return level_offset_.at(static_cast<std::size_t>(m)); }
  [[nodiscard]] VertexId level_end(int m) const { return level_offset_.at(static_cast<std::size_t>(m) + 1); }
  /// Number of vertices in the truncation X_n.
  [[nodiscard]] std::size_t count_through(int n) const { return level_end(n); }
  [[nodiscard]] static constexpr VertexId root() { return 0; }

  [[nodiscard]] int level(VertexId v) const { return level_[v]; }
  [[nodiscard]] VertexId parent(VertexId v) const { return parent_[v]; }
  [[nodiscard]] std::span<const VertexId> children(VertexId v) const { return children_[v]; }
  [[nodiscard]] const std::string& label(VertexId v) const { return label_[v]; }
  [[nodiscard]] const std::vector<int>& word(VertexId v) const { return word_[v]; }
  [[nodiscard]] double measure(VertexId v) const { return measure_[v]; }
  [[nodiscard]] const Point& rep_point(VertexId v) const { return rep_[v]; }
  /// Max distance from the representative point to the cell sample.
  [[nodiscard]] double cell_radius(VertexId v) const { return radius_[v]; }
  /// max_x cell_radius(x) / r0^|x|, reported by the builder.
  [[nodiscard]] double radius_constant() const {
    double c = 0.0;
    for (VertexId v = 0; v < size(); ++v) c = std::max(c, radius_[v] / std::pow(r0_, level_[v]));
    return c;
  }
  /// IFS only: contraction ratio r_x of the word of v.
  [[nodiscard]] double word_ratio(VertexId v) const { return ratio_.empty() ? 0.0 : ratio_[v]; }

  /// Finite sample of the cell Phi(v), one point per column.
  [[nodiscard]] Eigen::MatrixXd samples(VertexId v) const {
    if (model_.kind == ModelKind::ifs) {
      return (linear_[v] * base_sample_).colwise() + offset_[v];
    }
    const auto& mem = members_[v];
    Eigen::MatrixXd out(dim_, static_cast<Eigen::Index>(mem.size()));
    for (std::size_t i = 0; i < mem.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = model_.points[mem[i]];
    return out;
  }

  /// Point-cloud only: cloud indices assigned to the cell of v.
  [[nodiscard]] const std::vector<std::size_t>& members(VertexId v) const { return members_.at(v); }

  [[nodiscard]] const Eigen::MatrixXd& base_sample() const { return base_sample_; }

  [[nodiscard]] VertexId ancestor(VertexId v, int m) const {
    require(m >= 0 && m <= level_[v], "ancestor level out of range");
    while (level_[v] > m) v = parent_[v];
    return v;
  }

  [[nodiscard]] VertexId find(const std::string& label) const {
    if (label_index_.empty()) {
      for (VertexId v = 0; v < size(); ++v) label_index_.emplace(label_[v] + "@" + std::to_string(level_[v]), v);
    }
    // A label may occur at several levels for non-uniform ratios; prefer the shallowest.
    for (int m = 0; m <= max_level(); ++m) {
      const auto it = label_index_.find(label + "@" + std::to_string(m));
      if (it != label_index_.end()) return it->second;
    }
    throw ValidationError("no vertex labelled " + label);
  }

  [[nodiscard]] VertexId find(const std::string& label, int m) const {
    for (VertexId v = level_begin(m); v < level_end(m); ++v)
      if (label_[v] == label) return v;
    throw ValidationError("no vertex labelled " + label + " at level " + std::to_string(m));
  }

  /// Descent chain [root, x_1, ..., x_level] of cells nearest to xi; at each
  /// step the child whose sample set is closest to xi is chosen (ties: lowest id).
  [[nodiscard]] std::vector<VertexId> descent(const Point& xi, int to_level) const {
    require(to_level >= 0 && to_level <= max_level(), "descent level out of range");
    require(xi.size() == dim_, "point has wrong dimension");
    std::vector<VertexId> chain{root()};
    VertexId v = root();
    for (int m = 1; m <= to_level; ++m) {
      VertexId best = no_vertex;
      double best_d = std::numeric_limits<double>::infinity();
      for (VertexId c : children(v)) {
        const double d = point_set_distance(xi, samples(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      // A point of K lies within the sampling resolution of its cell.
      const double slack = 2.0 * std::max(radius_[best], std::pow(r0_, m));
      if (best_d > slack) throw ValidationError("point is not resolvable in the tree at level " + std::to_string(m));
      v = best;
      chain.push_back(v);
    }
    return chain;
  }

  [[nodiscard]] VertexId locate(const Point& xi, int m) const { return descent(xi, m).back(); }

  /// All level-m descendants of v (v itself if m == level(v)).
  [[nodiscard]] std::vector<VertexId> descendants_at(VertexId v, int m) const {
    require(m >= level_[v] && m <= max_level(), "descendant level out of range");
    std::vector<VertexId> frontier{v};
    for (int k = level_[v]; k < m; ++k) {
      std::vector<VertexId> next;
      for (VertexId u : frontier)
        for (VertexId c : children(u)) next.push_back(c);
      frontier = std::move(next);
    }
    return frontier;
  }

  /// Copy with one cell measure replaced (negative controls in diagnostics).
  [[nodiscard]] IndexTree with_measure(VertexId v, double value) const {
    IndexTree t = *this;
    t.measure_.at(v) = value;
    return t;
  }

 private:
  friend IndexTree build_ifs_tree(const ModelSpec&, int, int);
  friend IndexTree build_net_tree(const ModelSpec&, double, double, int);

  VertexId add_vertex(int lvl, VertexId par, double mu, std::string label) {
    const VertexId id = level_.size();
    level_.push_back(lvl);
    parent_.push_back(par);
    children_.emplace_back();
    measure_.push_back(mu);
    label_.push_back(std::move(label));
    if (par != no_vertex) children_[par].push_back(id);
    return id;
  }

  void finish_geometry() {
    radius_.resize(size());
    for (VertexId v = 0; v < size(); ++v) {
      const Eigen::MatrixXd s = samples(v);
      radius_[v] = std::sqrt((s.colwise() - rep_[v]).colwise().squaredNorm().maxCoeff());
    }
  }

  ModelSpec model_;
  int dim_ = 1;
  double r0_ = 0.5;
  std::vector<VertexId> level_offset_;
  std::vector<int> level_;
  std::vector<VertexId> parent_;
  std::vector<std::vector<VertexId>> children_;
  std::vector<std::string> label_;
  std::vector<std::vector<int>> word_;
  std::vector<double> measure_;
  std::vector<double> ratio_;
  std::vector<Point> rep_;
  std::vector<double> radius_;
  // IFS cells: Phi(x) sampled as linear_[x] * base_sample_ + offset_[x]
  Eigen::MatrixXd base_sample_;
  std::vector<Eigen::MatrixXd> linear_;
  std::vector<Point> offset_;
  // point-cloud cells
  std::vector<std::vector<std::size_t>> members_;
  mutable std::unordered_map<std::string, VertexId> label_index_;
};

namespace detail {

/// All S_w(z), |w| = depth, z a fixed point of some map; duplicates removed.
inline Eigen::MatrixXd ifs_base_sample(const ModelSpec& spec, int depth) {
  std::vector<Point> pts;
  for (const auto& s : spec.maps) pts.push_back(s.fixed_point());
  for (int k = 0; k < depth; ++k) {
    std::vector<Point> next;
    for (const auto& s : spec.maps)
      for (const auto& p : pts) next.push_back(s.apply(p));
    pts = std::move(next);
  }
  std::vector<Point> unique;
  for (const auto& p : pts) {
    const bool seen = std::any_of(unique.begin(), unique.end(), [&](const Point& q) { return (p - q).norm() <= 1e-12; });
    if (!seen) unique.push_back(p);
  }
  Eigen::MatrixXd out(spec.ambient_dim, static_cast<Eigen::Index>(unique.size()));
  for (std::size_t i = 0; i < unique.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = unique[i];
  return out;
}

}  // namespace detail

/**
 * Symbolic index tree of a self-similar set: J_m holds the words x with
 * r_x <= r0^m < r_{x^-}, r0 = min_i r_i, the parent of x is its unique prefix
 * in J_{m-1}, measure(x) is the product of the weights along x, and the
 * representative point is S_x(z0) with z0 the base-sample point closest to
 * the sample barycenter (lowest index on ties).
 */
inline IndexTree build_ifs_tree(const ModelSpec& spec, int max_level, int sample_depth = 3) {
  require(spec.kind == ModelKind::ifs, "build_ifs_tree needs an IFS model");
  spec.validate();
  require(max_level >= 1, "max_level must be >= 1");
  require(sample_depth >= 0, "sample_depth must be >= 0");

  IndexTree t;
  t.model_ = spec;
  t.dim_ = spec.ambient_dim;
  t.r0_ = spec.min_ratio();
  t.base_sample_ = detail::ifs_base_sample(spec, sample_depth);

  const Point barycenter = t.base_sample_.rowwise().mean();
  Eigen::Index z0_index = 0;
  (t.base_sample_.colwise() - barycenter).colwise().squaredNorm().minCoeff(&z0_index);
  const Point z0 = t.base_sample_.col(z0_index);

  const auto d = spec.ambient_dim;
  auto push = [&](int lvl, VertexId par, std::vector<int> word, double mu, double ratio, Eigen::MatrixXd lin, Point off) {
    const VertexId id = t.add_vertex(lvl, par, mu, word_label(word, spec.maps.size()));
    t.word_.push_back(std::move(word));
    t.ratio_.push_back(ratio);
    t.rep_.push_back(lin * z0 + off);
    t.linear_.push_back(std::move(lin));
    t.offset_.push_back(std::move(off));
    return id;
  };

  t.level_offset_ = {0};
  push(0, no_vertex, {}, 1.0, 1.0, Eigen::MatrixXd::Identity(d, d), Point::Zero(d));
  t.level_offset_.push_back(t.size());

  for (int m = 1; m <= max_level; ++m) {
    const double threshold = std::pow(t.r0_, m);
    for (VertexId v = t.level_begin(m - 1); v < t.level_end(m - 1); ++v) {
      // Depth-first expansion of v's word until r_x <= r0^m.
      struct Item {
        std::vector<int> word;
        double mu, ratio;
        Eigen::MatrixXd lin;
        Point off;
      };
      std::vector<Item> stack{{t.word_[v], t.measure_[v], t.ratio_[v], t.linear_[v], t.offset_[v]}};
      std::vector<Item> found;
      while (!stack.empty()) {
        Item it = std::move(stack.back());
        stack.pop_back();
        if (it.ratio <= threshold * (1.0 + 1e-12)) {
          found.push_back(std::move(it));
          continue;
        }
        for (int i = static_cast<int>(spec.maps.size()) - 1; i >= 0; --i) {
          const auto& s = spec.maps[static_cast<std::size_t>(i)];
          Item child{it.word, it.mu * spec.weights[static_cast<std::size_t>(i)], it.ratio * s.ratio,
                     it.lin * s.linear(), it.lin * s.offset + it.off};
          child.word.push_back(i);
          stack.push_back(std::move(child));
        }
      }
      for (auto& it : found) push(m, v, std::move(it.word), it.mu, it.ratio, std::move(it.lin), std::move(it.off));
    }
    t.level_offset_.push_back(t.size());
  }
  t.finish_geometry();
  return t;
}

/**
 * Index tree of a point cloud from nested greedy r0^m-nets: Xi_0 is the
 * first point, Xi_m extends Xi_{m-1} by scanning points in index order and
 * keeping those at distance >= r0^m from all chosen ones. The parent of a net
 * point at level m is its nearest point in Xi_{m-1} (lowest index on ties).
 * Each cloud point is assigned to its nearest net point at the deepest level
 * and cells of shallower vertices are unions of their children's cells, so
 * every point lies in exactly one cell per level.
 */
inline IndexTree build_net_tree(const ModelSpec& spec, double r0, double b, int max_level) {
  require(spec.kind == ModelKind::pointcloud, "build_net_tree needs a point-cloud model");
  spec.validate();
  require(max_level >= 1, "max_level must be >= 1");
  require(r0 > 0.0 && r0 < 1.0, "r0 must lie in (0,1)");
  require(b > 0.0, "b must be positive");
  const double c = spec.c_rho;
  require(c * r0 < 1.0, "r0 too large for the quasi-metric constant");
  require(c * c * c * r0 / (1.0 - c * r0) + c * c * b <= 0.5,
          "(r0, b) violate C^3 r0 / (1 - C r0) + C^2 b <= 1/2");

  const auto& pts = spec.points;
  const std::size_t n_points = pts.size();

  // nested nets
  std::vector<std::vector<std::size_t>> nets{{0}};
  std::vector<char> in_net(n_points, 0);
  in_net[0] = 1;
  for (int m = 1; m <= max_level; ++m) {
    const double eps = std::pow(r0, m);
    auto net = nets.back();
    for (std::size_t i = 0; i < n_points; ++i) {
      if (in_net[i]) continue;
      const bool separated = std::all_of(net.begin(), net.end(), [&](std::size_t j) { return point_distance(pts[i], pts[j]) >= eps; });
      if (separated) {
        net.push_back(i);
        in_net[i] = 1;
      }
    }
    std::sort(net.begin(), net.end());
    require(!net.empty(), "empty net at level " + std::to_string(m));
    nets.push_back(std::move(net));
  }

  auto nearest = [&](const Point& p, const std::vector<std::size_t>& candidates) {
    std::size_t best = candidates.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j : candidates) {  // candidates are sorted, so strict < keeps the lowest index
      const double dd = point_distance(p, pts[j]);
      if (dd < best_d) {
        best_d = dd;
        best = j;
      }
    }
    return best;
  };

  IndexTree t;
  t.model_ = spec;
  t.dim_ = static_cast<int>(pts.front().size());
  t.r0_ = r0;
  t.level_offset_ = {0};
  t.add_vertex(0, no_vertex, 0.0, "p" + std::to_string(nets[0][0]));
  t.word_.push_back({static_cast<int>(nets[0][0])});
  t.rep_.push_back(pts[nets[0][0]]);
  t.level_offset_.push_back(1);

  std::vector<std::unordered_map<std::size_t, VertexId>> vertex_of(static_cast<std::size_t>(max_level) + 1);
  vertex_of[0][nets[0][0]] = 0;
  for (int m = 1; m <= max_level; ++m) {
    const auto& net = nets[static_cast<std::size_t>(m)];
    const auto& prev = nets[static_cast<std::size_t>(m) - 1];
    std::vector<std::pair<VertexId, std::size_t>> order;
    for (std::size_t i : net) order.emplace_back(vertex_of[static_cast<std::size_t>(m) - 1].at(nearest(pts[i], prev)), i);
    std::sort(order.begin(), order.end());
    for (const auto& [par, i] : order) {
      const VertexId id = t.add_vertex(m, par, 0.0, "p" + std::to_string(i));
      t.word_.push_back({static_cast<int>(i)});
      t.rep_.push_back(pts[i]);
      vertex_of[static_cast<std::size_t>(m)][i] = id;
    }
    t.level_offset_.push_back(t.size());
  }

  // cells: assign at the deepest level, then take unions upward
  t.members_.assign(t.size(), {});
  const auto& deepest = nets.back();
  for (std::size_t i = 0; i < n_points; ++i) {
    const VertexId leaf = vertex_of.back().at(nearest(pts[i], deepest));
    for (VertexId v = leaf; v != no_vertex; v = t.parent_[v]) t.members_[v].push_back(i);
  }
  for (VertexId v = 0; v < t.size(); ++v) {
    double mu = 0.0;
    for (std::size_t i : t.members_[v]) mu += spec.masses[i];
    t.measure_[v] = mu;
  }
  t.finish_geometry();
  return t;
}

struct PartitionReport {
  double child_sum_defect = 0.0;   ///< max |sum of child measures - measure| over non-leaves
  double max_radius_ratio = 0.0;   ///< max cell radius / r0^|x|
  std::vector<std::string> violations;
  [[nodiscard]] bool ok() const { return violations.empty(); }
};

/// Diagnostic check of the index-tree axioms on the truncated tree.
inline PartitionReport verify_partition(const IndexTree& t, double tolerance = 1e-9) {
  PartitionReport rep;
  if (std::abs(t.measure(IndexTree::root()) - 1.0) > tolerance) rep.violations.push_back("(i) root measure differs from 1");
  for (VertexId v = 0; v < t.size(); ++v) {
    if (t.level(v) < t.max_level()) {
      double sum = 0.0;
      for (VertexId c : t.children(v)) sum += t.measure(c);
      if (t.children(v).empty()) {
        rep.violations.push_back("(i) vertex " + t.label(v) + " has no children");
        continue;
      }
      const double defect = std::abs(sum - t.measure(v));
      rep.child_sum_defect = std::max(rep.child_sum_defect, defect);
      if (defect > tolerance)
        rep.violations.push_back("(i)+(iii) child measures of " + t.label(v) + " at level " + std::to_string(t.level(v)) +
                                 " do not sum to its measure");
    }
    rep.max_radius_ratio = std::max(rep.max_radius_ratio, t.cell_radius(v) / std::pow(t.r0(), t.level(v)));
  }
  // (ii): for IFS cells r_x <= r0^|x| and diam K = 1, so the ratio is at most 1.
  // Net cells: the parent chain contributes at most r0^|x| / (1 - r0), the
  // leaf assignment at most one more r0^|x|.
  const double bound = t.kind() == ModelKind::ifs ? 1.0 + tolerance : 1.0 / (1.0 - t.r0()) + 1.0 + tolerance;
  if (rep.max_radius_ratio > bound) rep.violations.push_back("(ii) cell radius exceeds c * r0^|x|");
  if (t.kind() == ModelKind::pointcloud) {
    for (int m = 0; m <= t.max_level(); ++m) {
      std::vector<int> count(t.model().points.size(), 0);
      for (VertexId v = t.level_begin(m); v < t.level_end(m); ++v)
        for (std::size_t i : t.members(v)) ++count[i];
      if (std::any_of(count.begin(), count.end(), [](int k) { return k != 1; }))
        rep.violations.push_back("(iii) cells at level " + std::to_string(m) + " are not an exact partition");
    }
  }
  return rep;
}

}  // namespace augtree
