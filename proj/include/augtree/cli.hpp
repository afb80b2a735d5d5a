#pragma once
/**
 * @file cli.hpp
 * @brief Command-line front end. `run` parses argv-style arguments, writes
 * results to `out` (or --out) and diagnostics to `err`, and returns
 * 0 on success, 1 on invalid input, 2 on numerical failure.
 */

#include <CLI11.hpp>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "augtree/augmented_tree.hpp"
#include "augtree/energy.hpp"
#include "augtree/errors.hpp"
#include "augtree/model.hpp"
#include "augtree/network.hpp"
#include "augtree/potential.hpp"
#include "augtree/resistance.hpp"
#include "augtree/serialize.hpp"

#ifndef AUGTREE_VERSION
#define AUGTREE_VERSION "1.0.0"
#endif

namespace augtree::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_invalid = 1;
inline constexpr int exit_numerical = 2;

/// Echo of the effective configuration, written ahead of every output.
struct RunConfig {
  std::string command;
  std::map<std::string, std::string> params;

  void set(const std::string& k, const std::string& v) { params[k] = v; }
  void set(const std::string& k, double v) { params[k] = fmt(v); }
  void set(const std::string& k, int v) { params[k] = std::to_string(v); }

  void write_csv_header(std::ostream& os) const {
    os << "# augtree " << AUGTREE_VERSION << "\n# command: " << command << '\n';
    for (const auto& [k, v] : params) os << "# " << k << '=' << v << '\n';
  }
  [[nodiscard]] Json provenance() const {
    Json cfg = Json::object();
    for (const auto& [k, v] : params) cfg[k] = v;
    return {{"version", AUGTREE_VERSION}, {"command", command}, {"config", cfg}};
  }
};

namespace detail {

struct SourceOptions {
  std::string model, tree, net;
  int levels = -1;
  double gamma = 0.0;
  int sample_depth = 3;
  double r0 = 0.0, b = 0.0;
  double lambda = 0.0;
};

inline void add_source(CLI::App* app, SourceOptions& s, bool with_lambda, bool with_tree = true, bool with_net = true) {
  app->add_option("--model", s.model, "model file or builtin:interval | builtin:rotated-interval:p=P | builtin:gasket");
  if (with_tree) app->add_option("--tree", s.tree, "tree JSON written by 'tree build'");
  if (with_net) app->add_option("--net", s.net, "network JSON written by 'network build'");
  app->add_option("--levels", s.levels, "truncation depth of the tree");
  app->add_option("--gamma", s.gamma, "horizontal-edge threshold (default: the model's)");
  app->add_option("--sample-depth", s.sample_depth, "IFS base-sample depth")->check(CLI::Range(0, 8));
  app->add_option("--r0", s.r0, "net scale (point clouds)");
  app->add_option("--b", s.b, "net constant b (point clouds)");
  if (with_lambda) app->add_option("--lambda", s.lambda, "return ratio in (0,1)");
}

struct Source {
  std::shared_ptr<const AugmentedTree> tree;
  TreeParams params;
  std::optional<double> lambda;
};

inline Source resolve(const SourceOptions& s, int default_levels, RunConfig& cfg) {
  Source src;
  const int given = (s.model.empty() ? 0 : 1) + (s.tree.empty() ? 0 : 1) + (s.net.empty() ? 0 : 1);
  require(given == 1, "give exactly one of --model, --tree, --net");
  if (!s.tree.empty()) {
    const auto lt = tree_from_json(read_json_file(s.tree));
    src.tree = lt.tree;
    src.params = lt.params;
    cfg.set("tree", s.tree);
  } else if (!s.net.empty()) {
    const auto ln = network_from_json(read_json_file(s.net));
    src.tree = ln.tree;
    src.params = ln.params;
    src.lambda = ln.lambda;
    cfg.set("net", s.net);
  } else {
    const ModelSpec m = load_model(s.model);
    TreeParams p;
    p.levels = s.levels > 0 ? s.levels : default_levels;
    p.gamma = s.gamma > 0.0 ? s.gamma : m.gamma;
    p.sample_depth = s.sample_depth;
    p.r0 = s.r0;
    p.b = s.b;
    require(p.levels >= 1, "--levels must be >= 1");
    src.tree = build_from_params(m, p);
    src.params = p;
    cfg.set("model", s.model);
  }
  if (s.lambda != 0.0) src.lambda = s.lambda;
  cfg.set("levels", src.params.levels);
  cfg.set("gamma", src.params.gamma);
  if (src.lambda) cfg.set("lambda", *src.lambda);
  return src;
}

inline double need_lambda(const Source& src) {
  require(src.lambda.has_value(), "--lambda is required");
  require(*src.lambda > 0.0 && *src.lambda < 1.0, "--lambda must lie in (0,1)");
  return *src.lambda;
}

/// Writes to --out when given, else to the provided stream.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
      os_ = &fallback;
    } else {
      file_.open(path);
      require(file_.good(), "cannot write output file: " + path);
      os_ = &file_;
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

inline std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> out;
  const auto dots = text.find("..");
  try {
    if (dots != std::string::npos) {
      const int a = std::stoi(text.substr(0, dots)), b = std::stoi(text.substr(dots + 2));
      require(a <= b, "empty level range: " + text);
      for (int n = a; n <= b; ++n) out.push_back(n);
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    }
  } catch (const std::logic_error&) {
    throw ValidationError("bad level list: " + text);
  }
  require(!out.empty(), "bad level list: " + text);
  return out;
}

inline std::function<double(const Point&)> parse_function(const std::string& spec, int dim) {
  if (spec == "linear") return [](const Point& p) { return p(0); };
  if (spec == "indicator") return [](const Point& p) { return p(0) < 0.5 ? 1.0 : 0.0; };
  if (spec.starts_with("distance:")) {
    std::string coords = spec.substr(9);
    std::replace(coords.begin(), coords.end(), ',', ';');
    const auto d = parse_descriptor(coords, dim);
    require(d.points.size() == 1, "distance function needs one centre");
    const Point c = d.points.front();
    return [c](const Point& p) { return (p - c).norm(); };
  }
  throw ValidationError("unknown function '" + spec + "' (linear | indicator | distance:cx[,cy])");
}

inline std::pair<SetDescriptor, SetDescriptor> parse_pair(const std::string& text, int dim) {
  const auto comma = text.find(',');
  require(comma != std::string::npos, "pair must look like 'A,B'");
  return {parse_descriptor(text.substr(0, comma), dim), parse_descriptor(text.substr(comma + 1), dim)};
}

inline VertexId find_vertex(const IndexTree& t, const std::string& label) {
  std::string l = label;
  l.erase(0, l.find_first_not_of(" \t\r"));
  l.erase(l.find_last_not_of(" \t\r") + 1);
  return t.find(l);
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  using namespace detail;
  CLI::App app{"Augmented trees, lambda-natural random walks and induced energies on fractals"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("augtree ") + AUGTREE_VERSION);
  RunConfig cfg;
  std::string out_path, format = "json";
  std::function<void()> action;

  // tree build
  SourceOptions tb;
  auto* tree_cmd = app.add_subcommand("tree", "index and augmented trees")->require_subcommand(1);
  auto* tree_build = tree_cmd->add_subcommand("build", "build a tree and write it as JSON (or edge CSV)");
  add_source(tree_build, tb, false, false, false);
  tree_build->add_option("--out", out_path);
  tree_build->add_option("--format", format)->check(CLI::IsMember({"json", "csv"}));
  tree_build->callback([&] {
    action = [&] {
      cfg.command = "tree build";
      const auto src = resolve(tb, 6, cfg);
      Output o(out_path, out);
      if (format == "csv") {
        cfg.write_csv_header(*o);
        write_horizontal_edges_csv(*src.tree, *o);
      } else {
        Json j = tree_to_json(*src.tree, src.params);
        j["provenance"] = cfg.provenance();
        *o << j.dump(1) << '\n';
      }
    };
  });

  // network build
  SourceOptions nb;
  auto* net_cmd = app.add_subcommand("network", "lambda-natural networks")->require_subcommand(1);
  auto* net_build = net_cmd->add_subcommand("build", "build conductances and write JSON (or edge CSV)");
  add_source(net_build, nb, true, true, false);
  net_build->add_option("--out", out_path);
  net_build->add_option("--format", format)->check(CLI::IsMember({"json", "csv"}));
  net_build->callback([&] {
    action = [&] {
      cfg.command = "network build";
      const auto src = resolve(nb, 6, cfg);
      const Network net = build_nrw(src.tree, need_lambda(src));
      Output o(out_path, out);
      if (format == "csv") {
        cfg.set("log_shift", net.log_shift());
        cfg.write_csv_header(*o);
        write_network_edges_csv(net, *o);
      } else {
        Json j = network_to_json(net, src.params);
        j["provenance"] = cfg.provenance();
        *o << j.dump(1) << '\n';
      }
    };
  });

  // walk hitting / walk simulate
  SourceOptions wh, ws;
  int hit_level = 1, stop_level = -1;
  std::size_t mc_trials = 0, trials = 1, max_steps = 100000;
  std::uint64_t seed = 1;
  std::string start = "o";
  bool reflect = false, print_path = false;
  auto* walk_cmd = app.add_subcommand("walk", "random walks")->require_subcommand(1);
  auto* walk_hit = walk_cmd->add_subcommand("hitting", "exact hitting distribution on J_m from the root");
  add_source(walk_hit, wh, true);
  walk_hit->add_option("--level", hit_level)->required()->check(CLI::PositiveNumber);
  walk_hit->add_option("--mc-trials", mc_trials, "add a Monte Carlo column with this many walks");
  walk_hit->add_option("--seed", seed);
  walk_hit->add_option("--out", out_path);
  walk_hit->callback([&] {
    action = [&] {
      cfg.command = "walk hitting";
      const auto src = resolve(wh, hit_level, cfg);
      const Network net = build_nrw(src.tree, need_lambda(src));
      const auto& t = net.tree();
      const auto exact = hitting_distribution(net, hit_level);
      std::vector<double> mc;
      if (mc_trials > 0) {
        mc = monte_carlo_hitting(net, hit_level, mc_trials, seed);
        cfg.set("mc_trials", std::to_string(mc_trials));
        cfg.set("seed", std::to_string(seed));
        cfg.set("total_variation", total_variation(exact, mc));
      }
      double maxerr = 0.0;
      for (std::size_t i = 0; i < exact.size(); ++i) maxerr = std::max(maxerr, std::abs(exact[i] - t.measure(t.level_begin(hit_level) + i)));
      cfg.set("level", hit_level);
      cfg.set("max_abs_error_vs_measure", maxerr);
      Output o(out_path, out);
      cfg.write_csv_header(*o);
      *o << "vertex,label,measure,probability" << (mc.empty() ? "" : ",empirical") << '\n';
      for (std::size_t i = 0; i < exact.size(); ++i) {
        const VertexId v = t.level_begin(hit_level) + i;
        *o << v << ',' << t.label(v) << ',' << fmt(t.measure(v)) << ',' << fmt(exact[i]);
        if (!mc.empty()) *o << ',' << fmt(mc[i]);
        *o << '\n';
      }
    };
  });

  auto* walk_sim = walk_cmd->add_subcommand("simulate", "simulate walks; one CSV row per trial");
  add_source(walk_sim, ws, true);
  walk_sim->add_option("--start", start, "start vertex label (root: o)");
  walk_sim->add_option("--stop-level", stop_level);
  walk_sim->add_option("--max-steps", max_steps);
  walk_sim->add_option("--trials", trials)->check(CLI::PositiveNumber);
  walk_sim->add_option("--seed", seed);
  walk_sim->add_flag("--reflect", reflect, "continue on the truncated graph at the deepest level");
  walk_sim->add_flag("--path", print_path, "print the visited states of every trial");
  walk_sim->add_option("--out", out_path);
  walk_sim->callback([&] {
    action = [&] {
      cfg.command = "walk simulate";
      const auto src = resolve(ws, std::max(stop_level, 1), cfg);
      const Network net = build_nrw(src.tree, need_lambda(src));
      const auto& t = net.tree();
      const VertexId x0 = find_vertex(t, start);
      cfg.set("start", start);
      cfg.set("stop_level", stop_level);
      cfg.set("max_steps", std::to_string(max_steps));
      cfg.set("trials", std::to_string(trials));
      cfg.set("seed", std::to_string(seed));
      cfg.set("reflect", reflect ? "true" : "false");
      Output o(out_path, out);
      cfg.write_csv_header(*o);
      *o << (print_path ? "trial,step,vertex,label\n" : "trial,seed,steps,end_vertex,end_label,stopped_reason\n");
      for (std::size_t i = 0; i < trials; ++i) {
        const std::uint64_t s = splitmix64(seed + i);
        const auto path = simulate_walk(net, x0, WalkStop{stop_level, max_steps, reflect}, s);
        if (print_path) {
          for (std::size_t k = 0; k < path.states.size(); ++k) *o << i << ',' << k << ',' << path.states[k] << ',' << t.label(path.states[k]) << '\n';
        } else {
          *o << i << ',' << s << ',' << path.states.size() - 1 << ',' << path.states.back() << ',' << t.label(path.states.back()) << ','
             << to_string(path.stopped_reason) << '\n';
        }
      }
    };
  });

  // kernel naim | martin | green | ever-visit
  SourceOptions ks;
  std::string pairs_file;
  std::vector<std::string> pair_list;
  int trunc = 8;
  auto* kernel_cmd = app.add_subcommand("kernel", "Green, ever-visiting, Martin and Naim kernels")->require_subcommand(1);
  for (const std::string name : {"naim", "martin", "green", "ever-visit"}) {
    auto* sub = kernel_cmd->add_subcommand(name, name + " kernel on truncation --trunc; CSV x,y,value,gap");
    add_source(sub, ks, true);
    sub->add_option("--pairs", pairs_file, "CSV file of label pairs x,y");
    sub->add_option("--pair", pair_list, "label pair 'x,y' (repeatable)");
    sub->add_option("--trunc", trunc)->check(CLI::Range(2, 30));
    sub->add_option("--out", out_path);
    sub->callback([&, name] {
      action = [&, name] {
        cfg.command = "kernel " + name;
        const auto src = resolve(ks, trunc, cfg);
        const Network net = build_nrw(src.tree, need_lambda(src));
        const auto& t = net.tree();
        cfg.set("trunc", trunc);
        std::vector<std::pair<std::string, std::string>> pairs;
        auto add_line = [&](const std::string& line) {
          const auto c = line.find(',');
          require(c != std::string::npos, "pair line must look like 'x,y': " + line);
          pairs.emplace_back(line.substr(0, c), line.substr(c + 1));
        };
        if (!pairs_file.empty()) {
          std::ifstream in(pairs_file);
          require(in.good(), "cannot read pairs file: " + pairs_file);
          std::string line;
          bool first = true;
          while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            if (first && line.rfind("x,y", 0) == 0) {
              first = false;
              continue;
            }
            first = false;
            add_line(line);
          }
          cfg.set("pairs", pairs_file);
        }
        for (const auto& p : pair_list) add_line(p);
        require(!pairs.empty(), "no pairs given (--pairs or --pair)");
        const Kernel k = name == "naim" ? Kernel::naim : name == "martin" ? Kernel::martin : name == "green" ? Kernel::green : Kernel::ever_visit;
        const KernelEstimator est(net, trunc);
        std::ostringstream rows;
        for (const auto& [xs, ys] : pairs) {
          const VertexId x = find_vertex(t, xs), y = find_vertex(t, ys);
          const auto e = est.estimate(k, x, y);
          rows << t.label(x) << ',' << t.label(y) << ',' << fmt(e.value) << ',' << fmt(e.convergence_gap) << '\n';
        }
        Output o(out_path, out);
        cfg.write_csv_header(*o);
        *o << "x,y,value,gap\n" << rows.str();
      };
    });
  }

  // resistance curve / critical
  SourceOptions rc, rk;
  std::string pair_text, mode = "sharp", boundary;
  int nmax = 14, nmin = 1, iters = 12;
  double tol = 0.015, lo = 0.0, hi = 0.0;
  bool require_decided = false;
  auto* res_cmd = app.add_subcommand("resistance", "level-n resistances and critical values")->require_subcommand(1);
  auto* res_curve = res_cmd->add_subcommand("curve", "R_n for n = nmin..nmax; CSV n,R_n");
  add_source(res_curve, rc, true, true, false);
  res_curve->add_option("--pair", pair_text, "closed sets 'A,B': points ('0.5', '0;0'), cells ('w:12'), joined by '+'")->required();
  res_curve->add_option("--nmax", nmax)->check(CLI::Range(4, 30));
  res_curve->add_option("--nmin", nmin)->check(CLI::Range(1, 30));
  res_curve->add_option("--tol", tol, "classifier dead zone around growth 1")->check(CLI::Range(0.0, 0.5));
  res_curve->add_option("--format", format)->check(CLI::IsMember({"json", "csv"}));
  res_curve->add_flag("--require-decided", require_decided, "exit 2 when the curve is undecided");
  res_curve->add_option("--out", out_path);
  res_curve->callback([&] {
    action = [&] {
      cfg.command = "resistance curve";
      const auto src = resolve(rc, nmax, cfg);
      const Network net = build_nrw(src.tree, need_lambda(src));
      const auto [a, b] = parse_pair(pair_text, net.tree().dim());
      ClassifierOptions co;
      co.tol = tol;
      const auto c = limit_resistance(net, a, b, nmax, co, nmin);
      cfg.set("pair", pair_text);
      cfg.set("nmax", nmax);
      cfg.set("nmin", nmin);
      cfg.set("tol", tol);
      Output o(out_path, out);
      if (format == "csv") {
        cfg.set("classification", to_string(c.classification));
        cfg.set("growth", c.growth);
        cfg.set("decay_ratio", c.decay_ratio);
        cfg.write_csv_header(*o);
        *o << "n,R_n\n";
        for (std::size_t i = 0; i < c.values.size(); ++i) *o << c.n_min + static_cast<int>(i) << ',' << fmt(c.values[i]) << '\n';
      } else {
        Json j{{"provenance", cfg.provenance()},
               {"lambda", c.lambda},
               {"n_min", c.n_min},
               {"values", c.values},
               {"classification", to_string(c.classification)},
               {"growth", std::isnan(c.growth) ? Json(nullptr) : Json(c.growth)},
               {"decay_ratio", std::isnan(c.decay_ratio) ? Json(nullptr) : Json(c.decay_ratio)}};
        *o << j.dump(1) << '\n';
      }
      if (require_decided && c.classification == Classification::undecided) throw NumericalError("resistance curve is undecided");
    };
  });

  auto* res_crit = res_cmd->add_subcommand("critical", "bisection for lambda_# (sharp) or lambda_* (star); JSON report");
  add_source(res_crit, rk, false, true, false);
  res_crit->add_option("--mode", mode)->check(CLI::IsMember({"sharp", "star"}));
  res_crit->add_option("--nmax", nmax)->check(CLI::Range(4, 30));
  res_crit->add_option("--iters", iters)->check(CLI::Range(0, 60));
  res_crit->add_option("--tol", tol)->check(CLI::Range(0.0, 0.5));
  res_crit->add_option("--boundary", boundary, "V0 points joined by '+' (star mode; built-in models have a default)");
  res_crit->add_option("--lo", lo, "initial lower end of the lambda bracket");
  res_crit->add_option("--hi", hi, "initial upper end of the lambda bracket");
  res_crit->add_option("--out", out_path);
  res_crit->callback([&] {
    action = [&] {
      cfg.command = "resistance critical";
      const auto src = resolve(rk, nmax, cfg);
      const auto& t = src.tree->tree();
      CriticalOptions co;
      co.n_max = nmax;
      co.iterations = iters;
      co.classifier.tol = tol;
      co.lo = lo;
      co.hi = hi;
      cfg.set("mode", mode);
      cfg.set("nmax", nmax);
      cfg.set("iters", iters);
      cfg.set("tol", tol);
      CriticalSearchResult r;
      if (mode == "sharp") {
        r = critical_lambda_sharp(src.tree, co);
      } else {
        std::vector<Point> v0 = boundary.empty() ? builtin_boundary(t.model()) : parse_descriptor(boundary, t.dim()).points;
        if (!boundary.empty()) cfg.set("boundary", boundary);
        r = critical_lambda_star(src.tree, v0, co);
      }
      Json probes = Json::array();
      for (const auto& p : r.probes) {
        Json curves = Json::array();
        for (const auto& c : p.curves)
          curves.push_back({{"classification", to_string(c.classification)},
                            {"growth", std::isnan(c.growth) ? Json(nullptr) : Json(c.growth)},
                            {"values", c.values}});
        probes.push_back({{"lambda", p.lambda}, {"state", to_string(p.state)}, {"curves", curves}});
      }
      Json pairs = Json::array();
      for (const auto& [a, b] : r.pairs) pairs.push_back({std::vector<double>(a.points[0].data(), a.points[0].data() + a.points[0].size()),
                                                          std::vector<double>(b.points[0].data(), b.points[0].data() + b.points[0].size())});
      Json j{{"provenance", cfg.provenance()},
             {"mode", mode},
             {"lambda_bracket", {r.lambda_lo, r.lambda_hi}},
             {"beta_bracket", {r.beta_hi, r.beta_lo}},
             {"width", r.width()},
             {"iterations", r.iterations},
             {"stalled", r.stalled},
             {"pairs", pairs},
             {"probes", probes}};
      Output o(out_path, out);
      *o << j.dump(1) << '\n';
    };
  });

  // energy compare
  SourceOptions ec;
  std::string function = "linear", level_text = "4..8", sample = "rep";
  auto* energy_cmd = app.add_subcommand("energy", "graph energy versus Besov energy")->require_subcommand(1);
  auto* energy_cmp = energy_cmd->add_subcommand("compare", "CSV level,graph_energy,besov,ratio");
  energy_cmp->add_option("--model", ec.model)->required();
  energy_cmp->add_option("--lambda", ec.lambda)->required();
  energy_cmp->add_option("--gamma", ec.gamma);
  energy_cmp->add_option("--function", function, "linear | indicator | distance:cx[,cy]");
  energy_cmp->add_option("--levels", level_text, "level range 'a..b' or list 'a,b,c'");
  energy_cmp->add_option("--sample", sample, "rep (representative points) or average (cell samples)")->check(CLI::IsMember({"rep", "average"}));
  energy_cmp->add_option("--out", out_path);
  energy_cmp->callback([&] {
    action = [&] {
      cfg.command = "energy compare";
      const auto levels = parse_levels(level_text);
      SourceOptions s = ec;
      s.levels = *std::max_element(levels.begin(), levels.end());
      const auto src = resolve(s, s.levels, cfg);
      const double lambda = need_lambda(src);
      const auto u = parse_function(function, src.tree->tree().dim());
      const auto reports = comparability_report(src.tree, lambda, u, levels, sample == "rep" ? SampleMode::rep_point : SampleMode::cell_average);
      double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
      for (const auto& r : reports)
        if (!r.degenerate) rmin = std::min(rmin, r.ratio), rmax = std::max(rmax, r.ratio);
      cfg.set("function", function);
      cfg.set("level_range", level_text);
      cfg.set("sample", sample);
      cfg.set("beta", reports.front().beta);
      cfg.set("ratio_band", rmax > 0.0 ? rmax / rmin : std::numeric_limits<double>::quiet_NaN());
      Output o(out_path, out);
      cfg.write_csv_header(*o);
      *o << "level,graph_energy,besov,ratio\n";
      for (const auto& r : reports) *o << r.level << ',' << fmt(r.graph_energy) << ',' << fmt(r.besov) << ',' << fmt(r.ratio) << '\n';
    };
  });

  // verify all
  SourceOptions va;
  int verify_trunc = 0;
  auto* verify_cmd = app.add_subcommand("verify", "self-checks")->require_subcommand(1);
  auto* verify_all = verify_cmd->add_subcommand("all", "hitting distribution, return ratio and F(x,o) suites");
  verify_all->add_option("--model", va.model)->required();
  verify_all->add_option("--lambda", va.lambda)->required();
  verify_all->add_option("--levels", va.levels, "depth for the hitting and return-ratio suites (default 8)");
  verify_all->add_option("--gamma", va.gamma);
  verify_all->add_option("--trunc", verify_trunc, "truncation for F(x,o) (default: 14, or less for large trees)");
  verify_all->add_option("--out", out_path);
  verify_all->callback([&] {
    action = [&] {
      cfg.command = "verify all";
      const ModelSpec m = load_model(va.model);
      const int levels = va.levels > 0 ? va.levels : 8;
      int tr = verify_trunc;
      if (tr <= 0) {
        // deepest truncation <= 14 with at most ~3e5 vertices
        tr = 14;
        const double branching = m.kind == ModelKind::ifs ? static_cast<double>(m.maps.size()) : 2.0;
        while (tr > 6 && std::pow(branching, tr + 1) > 3e5) --tr;
      }
      SourceOptions s = va;
      s.levels = std::max(levels, tr);
      const auto src = resolve(s, s.levels, cfg);
      const double lambda = need_lambda(src);
      cfg.set("trunc", tr);
      const Network net = build_nrw(src.tree, lambda);
      const auto& t = net.tree();
      Output o(out_path, out);
      cfg.write_csv_header(*o);
      bool all = true;
      double hd_err = 0.0;
      for (int mm = 1; mm <= levels; ++mm) {
        const auto h = hitting_distribution(net, mm);
        for (std::size_t i = 0; i < h.size(); ++i) hd_err = std::max(hd_err, std::abs(h[i] - t.measure(t.level_begin(mm) + i)));
      }
      const bool hd_ok = hd_err <= 1e-9;
      *o << (hd_ok ? "PASS" : "FAIL") << " hitting_distribution levels=1.." << levels << " max_abs_error=" << fmt(hd_err) << '\n';
      double rr_err = 0.0;
      for (VertexId x = 1; x < t.count_through(levels - 1); ++x) rr_err = std::max(rr_err, std::abs(net.return_ratio(x) - lambda));
      const bool rr_ok = rr_err <= 1e-12;
      *o << (rr_ok ? "PASS" : "FAIL") << " return_ratio levels=1.." << levels - 1 << " max_abs_error=" << fmt(rr_err) << '\n';
      const KernelEstimator est(net, tr);
      double f_err = 0.0;
      for (VertexId x = 1; x < t.count_through(std::min(4, tr - 1)); ++x)
        f_err = std::max(f_err, std::abs(est.estimate(Kernel::ever_visit, x, IndexTree::root()).value - std::pow(lambda, t.level(x))));
      const bool f_ok = f_err <= 1e-3;
      *o << (f_ok ? "PASS" : "FAIL") << " ever_visit_to_root trunc=" << tr << " max_abs_error=" << fmt(f_err) << '\n';
      all = hd_ok && rr_ok && f_ok;
      if (!all) throw NumericalError("verification failed");
    };
  });

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_invalid;
  }
  try {
    if (action) action();
    return exit_ok;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return exit_invalid;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return exit_numerical;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return exit_numerical;
  }
}

}  // namespace augtree::cli
