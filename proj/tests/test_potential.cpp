#include <gtest/gtest.h>

#include <random>

#include "common.hpp"

using namespace augtree;
using augtree::testing::Band;
using augtree::testing::make_tree;

namespace {

double max_hd_error(const Network& net, int m) {
  const auto& t = net.tree();
  const auto d = hitting_distribution(net, m);
  double err = 0.0;
  for (VertexId v = t.level_begin(m); v < t.level_end(m); ++v) err = std::max(err, std::abs(d[v - t.level_begin(m)] - t.measure(v)));
  return err;
}

}  // namespace

TEST(Hitting, UniformIntervalLevelThree) {
  const auto net = build_nrw(make_tree(interval_model(), 4), 0.25);
  for (double p : hitting_distribution(net, 3)) EXPECT_NEAR(p, 0.125, 1e-12);
}

TEST(Hitting, RotatedIntervalWeightedCell) {
  const auto net = build_nrw(make_tree(rotated_interval_model(1.0 / 3.0), 3), 2.0 / 9.0);
  const auto& t = net.tree();
  const auto d = hitting_distribution(net, 2);
  EXPECT_NEAR(d[t.find("12") - t.level_begin(2)], 2.0 / 9.0, 1e-12);
}

TEST(Hitting, GasketFirstLevelIsUniform) {
  const auto net = build_nrw(make_tree(gasket_model(), 2), 0.2);
  for (double p : hitting_distribution(net, 1)) EXPECT_NEAR(p, 1.0 / 3.0, 1e-12);
}

TEST(Hitting, EqualsMeasureAtAllLevels) {
  for (const auto& m : {interval_model(), rotated_interval_model(1.0 / 3.0)}) {
    for (double lambda : {0.2, 0.5}) {
      const auto net = build_nrw(make_tree(m, 8), lambda);
      for (int lev = 1; lev <= 8; ++lev) EXPECT_LE(max_hd_error(net, lev), 1e-9);
    }
  }
}

TEST(Walk, ZeroStepsReturnsStart) {
  const auto net = build_nrw(make_tree(interval_model(), 4), 0.25);
  WalkStop stop;
  stop.max_steps = 0;
  const auto path = simulate_walk(net, 3, stop, 42);
  EXPECT_EQ(path.states, std::vector<VertexId>{3});
  EXPECT_EQ(path.stopped_reason, StopReason::max_steps);
}

TEST(Walk, TruncationIsRecorded) {
  const auto net = build_nrw(make_tree(interval_model(), 3), 0.25);
  WalkStop stop;
  stop.level = -1;
  const auto path = simulate_walk(net, IndexTree::root(), stop, 1);
  EXPECT_EQ(path.stopped_reason, StopReason::truncation);
  EXPECT_EQ(net.tree().level(path.states.back()), 3);
}

TEST(Walk, ReproduciblePerSeed) {
  const auto net = build_nrw(make_tree(gasket_model(), 4), 0.2);
  WalkStop stop;
  stop.level = 4;
  EXPECT_EQ(simulate_walk(net, 0, stop, 9).states, simulate_walk(net, 0, stop, 9).states);
  EXPECT_EQ(monte_carlo_hitting(net, 3, 500, 5), monte_carlo_hitting(net, 3, 500, 5));
}

TEST(Walk, MonteCarloMatchesExactHittingLaw) {
  const auto net = build_nrw(make_tree(interval_model(), 5), 0.25);
  const double tv = total_variation(monte_carlo_hitting(net, 4, 100000, 2024), hitting_distribution(net, 4));
  EXPECT_LE(tv, 0.02);
}

TEST(Walk, ReflectedWalkIsReversible) {
  const auto net = build_nrw(make_tree(interval_model(), 4), 0.5);
  WalkStop stop;
  stop.max_steps = 1'000'000;
  stop.reflect = true;
  const auto path = simulate_walk(net, IndexTree::root(), stop, 77);
  std::vector<double> freq(net.size(), 0.0), target(net.size(), 0.0);
  for (std::size_t i = 1; i < path.states.size(); ++i) freq[path.states[i]] += 1.0;
  double total = 0.0;
  for (VertexId v = 0; v < net.size(); ++v) total += net.total(v);
  for (VertexId v = 0; v < net.size(); ++v) {
    freq[v] /= static_cast<double>(path.states.size() - 1);
    target[v] = net.total(v) / total;
  }
  EXPECT_LE(total_variation(freq, target), 0.05);
}

TEST(Kernels, EverVisitBasics) {
  const auto net = build_nrw(make_tree(interval_model(), 14), 0.25);
  const auto& t = net.tree();
  EXPECT_EQ(ever_visit(net, 5, 5, 10).value, 1.0);
  const auto e = ever_visit(net, t.find("12"), IndexTree::root(), 14);
  EXPECT_NEAR(e.value, 1.0 / 16.0, 1e-3);
  EXPECT_LT(e.convergence_gap, 1e-3);
}

TEST(Kernels, EverVisitFromRootTracksMeasure) {
  const auto net = build_nrw(make_tree(gasket_model(), 8), 0.2);
  const auto& t = net.tree();
  KernelSolver ks(net, 8);
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<VertexId> pick(1, t.count_through(6) - 1);
  Band band;
  for (int i = 0; i < 50; ++i) {
    const VertexId x = pick(rng);
    band.add(ks.ever_visit(IndexTree::root(), x) / t.measure(x));
  }
  EXPECT_LE(band.width(), 20.0);
}

TEST(Kernels, GreenSymmetryAndFactorization) {
  const auto net = build_nrw(make_tree(gasket_model(), 6), 0.2);
  const auto& t = net.tree();
  KernelSolver ks(net, 6);
  const auto g6 = net.graph(6);
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<VertexId> pick(0, t.count_through(5) - 1);
  for (int i = 0; i < 60; ++i) {
    const VertexId x = pick(rng), y = pick(rng);
    const double a = ks.green(x, y) / g6.total(y), b = ks.green(y, x) / g6.total(x);
    EXPECT_NEAR(a, b, 1e-10 * std::abs(a));
    EXPECT_NEAR(ks.green(x, y), ks.ever_visit(x, y) * ks.green(y, y), 1e-12 * ks.green(x, y));
  }
}

TEST(Kernels, AnconaProductBand) {
  const auto at = make_tree(gasket_model(), 8);
  const auto net = build_nrw(at, 0.2);
  const auto& t = net.tree();
  KernelSolver ks(net, 8);
  std::mt19937_64 rng(19);
  std::uniform_int_distribution<VertexId> pick(t.level_begin(5), t.level_end(5) - 1);
  Band band;
  while (band.count < 100) {
    const VertexId x = pick(rng), y = pick(rng);
    const auto g = at->canonical_geodesic(x, y);
    if (g.vertices.size() < 3) continue;
    const VertexId z = g.vertices[1 + rng() % (g.vertices.size() - 2)];
    band.add(ks.ever_visit(x, y) / (ks.ever_visit(x, z) * ks.ever_visit(z, y)));
  }
  EXPECT_GE(band.lo, 1.0 - 1e-12);  // F(x,y) >= F(x,z)F(z,y) always
  EXPECT_LE(band.width(), 100.0);
}

TEST(Kernels, MartinKernel) {
  const auto net = build_nrw(make_tree(gasket_model(), 7), 0.2);
  const auto& t = net.tree();
  KernelSolver ks(net, 7);
  const VertexId target = t.find("1232");
  EXPECT_DOUBLE_EQ(ks.martin(IndexTree::root(), target), 1.0);
  // harmonic in x away from the target and the absorbing level
  const auto g = net.graph(7);
  for (VertexId x = 0; x < t.count_through(5); ++x) {
    if (x == target) continue;
    double s = 0.0;
    for (std::size_t k = g.start[x]; k < g.start[x + 1]; ++k) {
      const VertexId w = g.neighbor[k];
      if (t.level(w) < 7) s += g.conductance[k] / g.total(x) * ks.martin(w, target);
    }
    EXPECT_NEAR(s, ks.martin(x, target), 1e-8 * ks.martin(x, target));
  }
}

TEST(Kernels, NaimKernelSymmetric) {
  const auto net = build_nrw(make_tree(gasket_model(), 7), 0.2);
  const auto& t = net.tree();
  KernelSolver ks(net, 7);
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<VertexId> pick(1, t.count_through(6) - 1);
  for (int i = 0; i < 60; ++i) {
    const VertexId x = pick(rng), y = pick(rng);
    EXPECT_NEAR(ks.naim(x, y), ks.naim(y, x), 1e-8 * ks.naim(x, y));
  }
  EXPECT_THROW((void)ks.naim(IndexTree::root(), 3), ValidationError);
}

TEST(Kernels, MonotoneInTruncation) {
  const auto net = build_nrw(make_tree(gasket_model(), 8), 0.2);
  const auto& t = net.tree();
  const VertexId x = t.find("12"), y = t.find("312");
  double ev = 0.0, gr = 0.0;
  for (int n = 4; n <= 8; ++n) {
    KernelSolver ks(net, n);
    EXPECT_GE(ks.ever_visit(x, y), ev * (1 - 1e-12));
    EXPECT_GE(ks.green(x, y), gr * (1 - 1e-12));
    ev = ks.ever_visit(x, y);
    gr = ks.green(x, y);
  }
}

TEST(Kernels, ArgumentsMustLieAboveTruncation) {
  const auto net = build_nrw(make_tree(interval_model(), 5), 0.25);
  EXPECT_THROW((void)ever_visit(net, net.tree().level_begin(5), 0, 5), ValidationError);
  EXPECT_THROW(KernelSolver(net, 6), ValidationError);
}
