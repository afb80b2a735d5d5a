#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "augtree/augtree.hpp"

namespace augtree::testing {

inline std::shared_ptr<const AugmentedTree> make_tree(const ModelSpec& m, int levels, double gamma = 0.25, int sample_depth = 3) {
  TreeParams p;
  p.levels = levels;
  p.gamma = gamma;
  p.sample_depth = sample_depth;
  return build_from_params(m, p);
}

inline Point pt(double x) { return Point::Constant(1, x); }
inline Point pt(double x, double y) { return Point{{x, y}}; }

/// max/min of a set of positive values.
struct Band {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  std::size_t count = 0;
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    ++count;
  }
  [[nodiscard]] double width() const { return hi / lo; }
};

}  // namespace augtree::testing
