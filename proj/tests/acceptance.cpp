// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "common.hpp"
#include "corpus.hpp"

using namespace augtree;
using augtree::testing::Band;
using augtree::testing::make_tree;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Detail {
 public:
  template <class T>
  Detail& operator()(const std::string& key, const T& value) {
    if (!s_.str().empty()) s_ << ' ';
    s_ << key << '=' << value;
    return *this;
  }
  Detail& operator()(const std::string& key, double value) {
    if (!s_.str().empty()) s_ << ' ';
    s_ << key << '=' << fmt(value);
    return *this;
  }
  [[nodiscard]] std::string str() const { return s_.str(); }

 private:
  std::ostringstream s_;
};

std::string interval_text(double lo, double hi) { return "[" + fmt(lo) + "," + fmt(hi) + "]"; }

// ---------------------------------------------------------------------------

Outcome hitting_identity() {
  Outcome o;
  Detail d;
  for (const auto& [name, model] : {std::pair{"interval", interval_model()}, std::pair{"rotated_p1/3", rotated_interval_model(1.0 / 3.0)}}) {
    const auto at = make_tree(model, 8);
    double err = 0.0;
    for (double lambda : {0.2, 0.25, 0.5}) {
      const auto net = build_nrw(at, lambda);
      const auto& t = net.tree();
      for (int m = 1; m <= 8; ++m) {
        const auto h = hitting_distribution(net, m);
        for (VertexId v = t.level_begin(m); v < t.level_end(m); ++v) err = std::max(err, std::abs(h[v - t.level_begin(m)] - t.measure(v)));
      }
    }
    o.pass = o.pass && err <= 1e-9;
    d(std::string(name) + "_max_err", err);
  }
  o.detail = d.str();
  return o;
}

Outcome return_ratio_identity() {
  Outcome o;
  Detail d;
  for (const auto& [name, model] : {std::pair{"interval", interval_model()}, std::pair{"rotated_p1/3", rotated_interval_model(1.0 / 3.0)},
                                    std::pair{"gasket", gasket_model()}}) {
    const auto at = make_tree(model, 9);  // level-8 vertices need children
    double err = 0.0;
    for (double lambda : {0.2, 0.25, 0.5}) {
      const auto net = build_nrw(at, lambda);
      for (VertexId x = 1; x < net.tree().count_through(8); ++x) err = std::max(err, std::abs(net.return_ratio(x) - lambda));
    }
    o.pass = o.pass && err <= 1e-12;
    d(std::string(name) + "_max_err", err);
  }
  o.detail = d.str();
  return o;
}

Outcome ever_visit_to_root() {
  const auto net = build_nrw(make_tree(interval_model(), 14), 0.25);
  const auto& t = net.tree();
  const std::size_t count = t.count_through(4);
  // F_N(x, o) for 1 <= |x| <= 4 and N = 7..14
  std::vector<std::vector<double>> vals;
  for (int n = 7; n <= 14; ++n) {
    KernelSolver ks(net, n);
    std::vector<double> v;
    for (VertexId x = 1; x < count; ++x) v.push_back(ks.ever_visit(x, IndexTree::root()));
    vals.push_back(std::move(v));
  }
  double err = 0.0;
  for (VertexId x = 1; x < count; ++x) err = std::max(err, std::abs(vals.back()[x - 1] - std::pow(0.25, t.level(x))));
  std::vector<double> gap;  // max_x |F_N - F_{N-1}|
  for (std::size_t k = 1; k < vals.size(); ++k) {
    double g = 0.0;
    for (std::size_t i = 0; i < vals[k].size(); ++i) g = std::max(g, std::abs(vals[k][i] - vals[k - 1][i]));
    gap.push_back(g);
  }
  double worst_ratio = 0.0;
  for (std::size_t k = 1; k < gap.size(); ++k) worst_ratio = std::max(worst_ratio, gap[k] / gap[k - 1]);
  Outcome o;
  o.pass = err <= 1e-3 && worst_ratio < 1.0;
  o.detail = Detail()("max_err_trunc14", err)("gap_trunc14", gap.back())("worst_gap_ratio", worst_ratio).str();
  return o;
}

struct SearchSpec {
  std::string name;
  ModelSpec model;
  CriticalMode mode;
  int n_max;
  double lambda_target;
  double lambda_width;  // <= 0: unchecked
  double beta_width;    // <= 0: unchecked
};

Outcome critical_searches(const std::vector<SearchSpec>& specs) {
  Outcome o;
  Detail d;
  for (const auto& s : specs) {
    const auto at = make_tree(s.model, s.n_max);
    CriticalOptions opt;
    opt.n_max = s.n_max;
    CriticalSearchResult r;
    try {
      r = s.mode == CriticalMode::sharp ? critical_lambda_sharp(at, opt) : critical_lambda_star(at, builtin_boundary(s.model), opt);
    } catch (const std::exception& e) {
      o.pass = false;
      d(s.name, std::string("error:") + e.what());
      continue;
    }
    const double beta_target = -std::log(s.lambda_target) / std::log(2.0);
    bool ok = r.lambda_lo < s.lambda_target && s.lambda_target < r.lambda_hi && r.beta_hi < beta_target && beta_target < r.beta_lo;
    if (s.lambda_width > 0) ok = ok && r.lambda_hi - r.lambda_lo <= s.lambda_width;
    if (s.beta_width > 0) ok = ok && r.beta_lo - r.beta_hi <= s.beta_width;
    o.pass = o.pass && ok;
    d(s.name + "_lambda", interval_text(r.lambda_lo, r.lambda_hi))(s.name + "_beta", interval_text(r.beta_hi, r.beta_lo));
  }
  o.detail = d.str();
  return o;
}

Outcome hyperbolicity() {
  Outcome o;
  Detail d;
  for (const auto& [name, model, depth] :
       {std::tuple{"interval", interval_model(), 8}, std::tuple{"gasket", gasket_model(), 7}}) {
    const auto rep = hyperbolicity_report(*make_tree(model, depth, 0.25), depth, 200);
    std::string levels;
    bool constant = true;
    for (int m = 3; m <= depth; ++m) {
      constant = constant && rep.per_level[m] == rep.per_level[3];
      levels += (levels.empty() ? "" : ",") + std::to_string(rep.per_level[m]);
    }
    o.pass = o.pass && constant;
    d(std::string(name) + "_segments_3.." + std::to_string(depth), levels);
  }
  o.detail = d.str();
  return o;
}

// Four normalized kernel quantities on the gasket over every ordered pair of
// distinct vertices at one level (every interior geodesic vertex for the
// Ancona ratio). Exhaustive rather than sampled: sampled max/min ratios of
// 100 pairs moved by a factor of two between seeds.
struct KernelBands {
  Band martin, naim_pmu, naim_metric, ancona;
};

KernelBands kernel_bands(const AugmentedTree& at, const KernelSolver& ks, double lambda, int level) {
  const auto& t = at.tree();
  const double beta = beta_from_lambda(lambda, t.r0());
  KernelBands b;
  for (VertexId x = t.level_begin(level); x < t.level_end(level); ++x)
    for (VertexId y = t.level_begin(level); y < t.level_end(level); ++y) {
      if (x == y) continue;
      const auto g = at.canonical_geodesic(x, y);
      double pmu = 0.0;
      for (VertexId z : g.vertices) pmu = std::max(pmu, t.measure(z));
      const double gp = at.gromov_product(x, y);
      b.martin.add(ks.martin(x, y) * pmu * std::pow(lambda, gp - level));
      const double theta = ks.naim(x, y);
      b.naim_pmu.add(theta * pmu * std::pow(lambda, gp));
      const double rho = point_distance(t.rep_point(x), t.rep_point(y));
      b.naim_metric.add(theta * at.ball_volume(t.rep_point(x), rho, ks.trunc()) * std::pow(rho, beta));
      const double f = ks.ever_visit(x, y);
      for (std::size_t k = 1; k + 1 < g.vertices.size(); ++k)
        b.ancona.add(f / (ks.ever_visit(x, g.vertices[k]) * ks.ever_visit(g.vertices[k], y)));
    }
  return b;
}

Outcome kernel_band_stability() {
  constexpr double lambda = 0.2;
  constexpr int trunc = 9;
  const auto at = make_tree(gasket_model(), trunc);
  const auto net = build_nrw(at, lambda);
  const KernelSolver ks(net, trunc);
  const auto b5 = kernel_bands(*at, ks, lambda, 5);
  const auto b6 = kernel_bands(*at, ks, lambda, 6);
  Outcome o;
  Detail d;
  d("pairs_L5", b5.martin.count)("pairs_L6", b6.martin.count)("trunc", trunc);
  auto check = [&](const std::string& name, const Band& at5, const Band& at6) {
    const bool ok = at5.width() <= 100.0 && at6.width() <= 100.0 && at6.width() <= at5.width();
    o.pass = o.pass && ok;
    d(name + "_band_L5", at5.width())(name + "_band_L6", at6.width());
  };
  check("martin", b5.martin, b6.martin);
  check("naim_pmu", b5.naim_pmu, b6.naim_pmu);
  check("naim_metric", b5.naim_metric, b6.naim_metric);
  check("ancona", b5.ancona, b6.ancona);
  o.detail = d.str();
  return o;
}

Outcome energy_comparability() {
  const auto at = make_tree(interval_model(), 8);
  const std::vector<int> levels{4, 5, 6, 7, 8};
  std::vector<std::pair<std::string, std::function<double(const Point&)>>> fns;
  fns.emplace_back("linear", [](const Point& p) { return p(0); });
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < 5; ++i) {
    const double c = unif(rng);
    fns.emplace_back("dist(" + fmt(std::round(c * 1e4) / 1e4) + ")", [c](const Point& p) { return std::abs(p(0) - c); });
  }
  Outcome o;
  Detail d;
  double worst = 0.0;
  for (const auto& [name, u] : fns) {
    Band band;
    for (const auto& r : comparability_report(at, 0.125, u, levels)) band.add(r.ratio);
    worst = std::max(worst, band.width());
    d(name, band.width());
  }
  o.pass = worst <= 100.0;
  o.detail = "worst_band=" + fmt(worst) + " " + d.str();
  return o;
}

Outcome oracle_equivalence() {
  double worst = 0.0;
  std::size_t disconnected = 0;
  bool agree = true;
  for (const auto& c : augtree::testing::rational_corpus(50, 12, 20240601)) {
    const auto exact = reduce_network(c.n, c.edges, c.F, c.G);
    const auto approx = effective_resistance(c.graph(), c.F, c.G);
    if (!exact.resistance) {
      ++disconnected;
      agree = agree && approx.disconnected;
      continue;
    }
    worst = std::max(worst, std::abs(approx.resistance - static_cast<double>(*exact.resistance)));
  }
  const auto net = build_nrw(make_tree(interval_model(), 5), 0.25);
  const double tv = total_variation(monte_carlo_hitting(net, 4, 100000, 12345), hitting_distribution(net, 4));
  Outcome o;
  o.pass = agree && worst <= 1e-10 && tv <= 0.02;
  o.detail = Detail()("corpus", 50)("disconnected", disconnected)("max_abs_err", worst)("mc_trials", 100000)("mc_tv", tv).str();
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"hitting distribution equals cell measure", hitting_identity},
      {"return ratio equals lambda", return_ratio_identity},
      {"ever-visit probability to the root", ever_visit_to_root},
      {"rotated interval critical brackets",
       [] {
         return critical_searches({
             {"p1/2_sharp", rotated_interval_model(0.5), CriticalMode::sharp, 14, 0.25, 0.03, 0},
             {"p1/2_star", rotated_interval_model(0.5), CriticalMode::star, 14, 0.25, 0.03, 0},
             {"p1/3_sharp", rotated_interval_model(1.0 / 3.0), CriticalMode::sharp, 14, 2.0 / 9.0, 0.03, 0},
             {"p1/3_star", rotated_interval_model(1.0 / 3.0), CriticalMode::star, 14, 2.0 / 9.0, 0.03, 0},
         });
       }},
      {"gasket critical exponent",
       [] { return critical_searches({{"gasket_star", gasket_model(), CriticalMode::star, 8, 0.2, 0, 0.3}}); }},
      {"interval critical exponent",
       [] { return critical_searches({{"interval_star", interval_model(), CriticalMode::star, 14, 0.25, 0, 0.2}}); }},
      {"hyperbolicity segments constant in level", hyperbolicity},
      {"kernel bands on the gasket", kernel_band_stability},
      {"energy comparability on the interval", energy_comparability},
      {"oracle equivalence", oracle_equivalence},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("%s %2zu %s | %s | %.1fs\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
