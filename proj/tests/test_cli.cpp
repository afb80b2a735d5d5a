#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "augtree/cli.hpp"
#include "common.hpp"

using namespace augtree;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    if (!l.empty() && l[0] != '#') lines.push_back(l);
  return lines;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("augtree_test_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Cli, VerifyAllPasses) {
  const auto r = run({"verify", "all", "--model", "builtin:interval", "--lambda", "0.25"});
  EXPECT_EQ(r.code, cli::exit_ok) << r.err;
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 3u);
  for (const auto& l : lines) EXPECT_EQ(l.rfind("PASS ", 0), 0u) << l;
}

TEST(Cli, GasketHittingIsUniform) {
  const auto r = run({"walk", "hitting", "--model", "builtin:gasket", "--lambda", "0.2", "--level", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "vertex,label,measure,probability");
  for (std::size_t i = 1; i < 4; ++i) {
    const double p = std::stod(lines[i].substr(lines[i].rfind(',') + 1));
    EXPECT_NEAR(p, 1.0 / 3.0, 1e-12);
  }
}

TEST(Cli, SharpCriticalBracketContainsQuarter) {
  const auto r = run({"resistance", "critical", "--mode", "sharp", "--model", "builtin:rotated-interval:p=0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto start = r.out.find('{');
  ASSERT_NE(start, std::string::npos);
  const auto j = Json::parse(r.out.substr(start));
  const auto br = j.at("lambda_bracket").get<std::vector<double>>();
  EXPECT_LT(br[0], 0.25);
  EXPECT_GT(br[1], 0.25);
  EXPECT_EQ(j.at("mode"), "sharp");
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({"tree", "build", "--model", "builtin:interval", "--levels", "3"}).code, cli::exit_ok);
  EXPECT_EQ(run({}).code, cli::exit_invalid);
  EXPECT_EQ(run({"frobnicate"}).code, cli::exit_invalid);
  EXPECT_EQ(run({"tree", "build", "--model", "builtin:interval", "--no-such-flag"}).code, cli::exit_invalid);
  EXPECT_EQ(run({"tree", "build", "--model", "/nonexistent/model.json"}).code, cli::exit_invalid);
  EXPECT_EQ(run({"network", "build", "--model", "builtin:interval", "--lambda", "1.5"}).code, cli::exit_invalid);
  EXPECT_EQ(run({"network", "build", "--model", "builtin:interval"}).code, cli::exit_invalid);  // lambda missing
  EXPECT_EQ(run({"kernel", "naim", "--model", "builtin:gasket", "--lambda", "0.2", "--levels", "5", "--pair", "o,12"}).code,
            cli::exit_invalid);
  // numerical: undecided curve when a decision was demanded, and an unusable bracket
  EXPECT_EQ(run({"resistance", "curve", "--model", "builtin:interval", "--lambda", "0.25", "--pair", "0,1", "--nmax", "14",
                 "--require-decided"})
                .code,
            cli::exit_numerical);
  EXPECT_EQ(run({"resistance", "critical", "--mode", "star", "--model", "builtin:interval", "--lo", "0.3", "--hi", "0.4"}).code,
            cli::exit_numerical);
}

TEST(Cli, ValidationMessagesGoToStderr) {
  const auto r = run({"network", "build", "--model", "builtin:interval", "--lambda", "-1"});
  EXPECT_EQ(r.code, cli::exit_invalid);
  EXPECT_TRUE(r.out.empty());
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST(Cli, OutputIsReproducible) {
  const std::vector<std::vector<std::string>> runs = {
      {"walk", "simulate", "--model", "builtin:gasket", "--lambda", "0.2", "--levels", "5", "--stop-level", "4", "--trials", "20",
       "--seed", "7"},
      {"walk", "hitting", "--model", "builtin:interval", "--lambda", "0.25", "--level", "3", "--mc-trials", "2000", "--seed", "3"},
      {"kernel", "martin", "--model", "builtin:gasket", "--lambda", "0.2", "--levels", "6", "--pair", "12,31", "--trunc", "6"},
      {"network", "build", "--model", "builtin:rotated-interval:p=1/3", "--lambda", "0.3", "--levels", "4"},
      {"energy", "compare", "--model", "builtin:interval", "--lambda", "0.125", "--levels", "4..6"},
  };
  for (const auto& args : runs) {
    const auto a = run(args), b = run(args);
    EXPECT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out) << args[0] << " " << args[1];
  }
  const auto s1 = run(runs[0]), s2 = run({"walk", "simulate", "--model", "builtin:gasket", "--lambda", "0.2", "--levels", "5",
                                           "--stop-level", "4", "--trials", "20", "--seed", "8"});
  EXPECT_NE(s1.out, s2.out);
}

TEST(Cli, TreeAndNetworkFilesRoundTrip) {
  const auto tree_file = temp_path("tree.json"), net_file = temp_path("net.json");
  ASSERT_EQ(run({"tree", "build", "--model", "builtin:gasket", "--levels", "4", "--out", tree_file}).code, 0);
  ASSERT_EQ(run({"network", "build", "--model", "builtin:gasket", "--levels", "4", "--lambda", "0.2", "--out", net_file}).code, 0);
  const auto direct = run({"kernel", "ever-visit", "--model", "builtin:gasket", "--levels", "4", "--lambda", "0.2", "--pair", "1,23", "--trunc", "4"});
  const auto via_tree = run({"kernel", "ever-visit", "--tree", tree_file, "--lambda", "0.2", "--pair", "1,23", "--trunc", "4"});
  const auto via_net = run({"kernel", "ever-visit", "--net", net_file, "--pair", "1,23", "--trunc", "4"});
  ASSERT_EQ(direct.code, 0) << direct.err;
  ASSERT_EQ(via_tree.code, 0) << via_tree.err;
  ASSERT_EQ(via_net.code, 0) << via_net.err;
  EXPECT_EQ(data_lines(direct.out), data_lines(via_tree.out));
  EXPECT_EQ(data_lines(direct.out), data_lines(via_net.out));
  const auto j = Json::parse(slurp(tree_file));
  EXPECT_EQ(j.at("vertex_count").get<std::size_t>(), 1u + 3 + 9 + 27 + 81);
  std::remove(tree_file.c_str());
  std::remove(net_file.c_str());
}

TEST(Cli, ModelFilesMatchBuiltins) {
  const std::string dir = AUGTREE_MODELS_DIR;
  const auto a = run({"network", "build", "--model", dir + "/rotated_interval_p1_3.json", "--lambda", "0.3", "--levels", "3",
                      "--format", "csv"});
  const auto b = run({"network", "build", "--model", "builtin:rotated-interval:p=1/3", "--lambda", "0.3", "--levels", "3",
                      "--format", "csv"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(data_lines(a.out), data_lines(b.out));
}

TEST(Cli, KernelPairsFile) {
  const auto pairs = temp_path("pairs.csv");
  {
    std::ofstream f(pairs);
    f << "# pairs\nx,y\n1,23\n12,31\n";
  }
  const auto r = run({"kernel", "naim", "--model", "builtin:gasket", "--lambda", "0.2", "--levels", "6", "--pairs", pairs, "--trunc", "6"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "x,y,value,gap");
  EXPECT_EQ(lines[1].rfind("1,23,", 0), 0u);
  std::remove(pairs.c_str());
}

TEST(Cli, CsvColumnsAreStable) {
  auto header = [](const std::vector<std::string>& args) { return data_lines(run(args).out).at(0); };
  EXPECT_EQ(header({"tree", "build", "--model", "builtin:interval", "--levels", "3", "--format", "csv"}), "level,x_id,y_id");
  EXPECT_EQ(header({"network", "build", "--model", "builtin:interval", "--lambda", "0.25", "--levels", "3", "--format", "csv"}), "x,y,c");
  EXPECT_EQ(header({"walk", "simulate", "--model", "builtin:interval", "--lambda", "0.25", "--levels", "4", "--stop-level", "3"}),
            "trial,seed,steps,end_vertex,end_label,stopped_reason");
  EXPECT_EQ(header({"resistance", "curve", "--model", "builtin:interval", "--lambda", "0.3", "--pair", "0,1", "--nmax", "5",
                    "--format", "csv"}),
            "n,R_n");
  EXPECT_EQ(header({"energy", "compare", "--model", "builtin:interval", "--lambda", "0.125", "--levels", "4"}),
            "level,graph_energy,besov,ratio");
}
