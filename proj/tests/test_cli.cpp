#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "ldsc/cli.hpp"
#include "ldsc/harness.hpp"
#include "ldsc/textio.hpp"
#include "test_util.hpp"

namespace ldsc {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "ldsc-forge");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string golden(const std::string& name) { return std::string(LDSC_GOLDEN_DIR) + "/" + name; }

// Every regular file under `dir`, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = textio::read_file(e.path().string());
  return out;
}

std::string small_config(const testing::TempDir& dir) {
  ExperimentConfig c;
  c.seed = 5;
  c.replicates = 4;
  c.cov_a = ar1_blocks_spec(4, 10, {0.5, 0.2});
  c.cov_b = ar1_blocks_spec(4, 10, {0.3});
  c.n_a = c.n_b = 200;
  c.n_ra = c.n_rb = 100;
  c.sources = {ScoreSourceSpec::parse("estimated-cross"), ScoreSourceSpec::parse("pooled")};
  textio::write_file(dir.file("config.json"), c.to_json().dump(2));
  return dir.file("config.json");
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"fit", "--bogus"}).code, 1);
  EXPECT_EQ(run({"experiment", "--preset", "no-such-preset", "--out", "x"}).code, 1);
  EXPECT_EQ(run({"ldscore", "--out", "x"}).code, 1);
}

TEST(Cli, HelpListsFlags) {
  const auto r = run({"fit", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--sumstats"), std::string::npos);
  EXPECT_NE(r.out.find("--jackknife-groups"), std::string::npos);
  const auto top = run({"--help"});
  EXPECT_EQ(top.code, 0);
  for (const char* sub : {"simulate", "ldscore", "fit", "theory", "experiment"})
    EXPECT_NE(top.out.find(sub), std::string::npos) << sub;
}

TEST(Cli, MissingFileIsDataError) {
  const auto r = run({"fit", "--sumstats", "/nonexistent/a.tsv", "--ldscores", "/nonexistent/l.tsv"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
}

TEST(Cli, ConstantScoresAreNumericError) {
  testing::TempDir dir("cli");
  std::string l = "CHR\tSNP\tBP\tL2\n", s = "SNP\tN\tBETA\n";
  for (int j = 0; j < 6; ++j) {
    l += std::to_string(j / 3 + 1) + "\trs" + std::to_string(j) + "\t" + std::to_string(j + 1) + "\t2.5\n";
    s += "rs" + std::to_string(j) + "\t100\t0.0" + std::to_string(j + 1) + "\n";
  }
  textio::write_file(dir.file("l.tsv"), l);
  textio::write_file(dir.file("s.tsv"), s);
  const auto r = run({"fit", "--sumstats", dir.file("s.tsv"), "--ldscores", dir.file("l.tsv")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("degenerate design"), std::string::npos) << r.err;
}

nlohmann::json without_config(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  j.erase("config");
  return j;
}

TEST(Cli, UnivariateFitMatchesGoldenAndReference) {
  const auto r = run({"fit", "--sumstats", golden("sumstats_a.tsv"), "--ldscores", golden("ld_a.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = without_config(r.out);
  EXPECT_EQ(j, nlohmann::json::parse(textio::read_file(golden("fit_univariate.json"))));
  // Reference values from numpy.polyfit and explicit leave-one-block-out refits.
  EXPECT_NEAR(j["slope"].get<double>(), 0.0008889942176002343, 1e-15);
  EXPECT_NEAR(j["se_jackknife"].get<double>(), 0.0002971967785007731, 1e-15);
  EXPECT_NEAR(j["h2"].get<double>(), 0.05333965305601406, 1e-13);
  EXPECT_EQ(j["p"], 60);
  EXPECT_EQ(j["n"], 5000);
}

TEST(Cli, BivariateFitMatchesGoldenAndReference) {
  const auto r = run({"fit", "--mode", "bivariate", "--sumstats", golden("sumstats_a.tsv"), "--sumstats-b",
                      golden("sumstats_b.tsv"), "--ldscores", golden("ld_ab.tsv"), "--ldscores-a", golden("ld_a.tsv"),
                      "--ldscores-b", golden("ld_b.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = without_config(r.out);
  EXPECT_EQ(j, nlohmann::json::parse(textio::read_file(golden("fit_bivariate.json"))));
  EXPECT_NEAR(j["slope"].get<double>(), 0.0007784882144296006, 1e-15);
  EXPECT_NEAR(j["se_jackknife"].get<double>(), 0.0001722150787133533, 1e-15);
  EXPECT_NEAR(j["rg"].get<double>(), 0.48354424193590495, 1e-12);
  EXPECT_NEAR(j["se_rg"].get<double>(), 0.506866067054472, 1e-12);
  EXPECT_NEAR(j["h2_b"].get<double>(), 0.17493792319458942, 1e-13);
  EXPECT_TRUE(j["intercept"].is_null());
}

TEST(Cli, SimulateIsByteIdenticalAcrossRunsAndThreads) {
  testing::TempDir dir("cli");
  const std::string cfg = small_config(dir);
  ASSERT_EQ(run({"simulate", "--config", cfg, "--replicate", "2", "--out", dir.file("a")}).code, 0);
  ASSERT_EQ(run({"simulate", "--config", cfg, "--replicate", "2", "--out", dir.file("b"), "--threads", "3"}).code, 0);
  const auto a = snapshot(dir.file("a"));
  EXPECT_EQ(a, snapshot(dir.file("b")));
  for (const char* f : {"config.json", "covariance_a.tsv", "covariance_b.tsv", "effects_a.tsv", "effects_b.tsv",
                        "sumstats_a.tsv", "sumstats_b.tsv", "ldscores_true_a.tsv", "ldscores_true_ab.tsv",
                        "ldscores_true_ab.tsv.json", "reference_a.tsv", "reference_b.tsv"})
    EXPECT_EQ(a.count(f), 1u) << f;
  const auto meta = nlohmann::json::parse(a.at("ldscores_true_ab.tsv.json"));
  EXPECT_EQ(meta["kind"], "cross");
  EXPECT_EQ(meta["config"]["seed"], 5);
}

TEST(Cli, SimulatedFilesFeedLdscoreAndFit) {
  testing::TempDir dir("cli");
  const std::string cfg = small_config(dir);
  ASSERT_EQ(run({"simulate", "--config", cfg, "--out", dir.file("sim")}).code, 0);
  const auto sim = [&](const std::string& f) { return dir.file("sim/" + f); };
  auto r = run({"ldscore", "--panel", sim("reference_a.tsv"), "--panel-b", sim("reference_b.tsv"), "--block-size",
                "10", "--out", dir.file("ab.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"ldscore", "--panel", sim("reference_a.tsv"), "--structure", cfg, "--out", dir.file("a.tsv")});
  EXPECT_EQ(r.code, 2) << "a config is not a covariance spec";
  r = run({"ldscore", "--panel", sim("reference_a.tsv"), "--block-sizes", "10,10,10,10", "--out", dir.file("a.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"fit", "--mode", "bivariate", "--sumstats", sim("sumstats_a.tsv"), "--sumstats-b", sim("sumstats_b.tsv"),
           "--ldscores", dir.file("ab.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["p"], 40);
  r = run({"theory", "--config", cfg, "--out", dir.file("th")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto th = nlohmann::json::parse(r.out);
  EXPECT_GT(th["zeta2_a"].get<double>(), 0.0);
  EXPECT_GT(th["rho2_ab"].get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(dir.file("th/theory.json")));
}

TEST(Cli, ExperimentIsByteIdenticalAcrossThreadCounts) {
  testing::TempDir dir("cli");
  const std::string cfg = small_config(dir);
  ASSERT_EQ(run({"experiment", "--config", cfg, "--threads", "1", "--out", dir.file("one")}).code, 0);
  ASSERT_EQ(run({"experiment", "--config", cfg, "--threads", "3", "--out", dir.file("three")}).code, 0);
  ::setenv("LDSC_FORGE_THREADS", "2", 1);
  const auto env = run({"experiment", "--config", cfg, "--out", dir.file("env")});
  ::unsetenv("LDSC_FORGE_THREADS");
  ASSERT_EQ(env.code, 0) << env.err;
  const auto one = snapshot(dir.file("one"));
  EXPECT_EQ(one, snapshot(dir.file("three")));
  EXPECT_EQ(one, snapshot(dir.file("env")));
  EXPECT_EQ(one.count("replicates_estimated-cross.csv"), 1u);
  EXPECT_EQ(one.count("replicates_pooled.csv"), 1u);
  EXPECT_EQ(one.count("qq.csv"), 1u);
  const auto summary = nlohmann::json::parse(one.at("summary.json"));
  EXPECT_EQ(summary["summaries"].size(), 2u);
}

TEST(Cli, BadConfigIsDataError) {
  testing::TempDir dir("cli");
  textio::write_file(dir.file("c.json"), "{\"replicates\": ");
  EXPECT_EQ(run({"experiment", "--config", dir.file("c.json"), "--out", dir.file("o")}).code, 2);
  textio::write_file(dir.file("d.json"), R"({"preset":"s51-within","unknown_key":1})");
  EXPECT_EQ(run({"experiment", "--config", dir.file("d.json"), "--out", dir.file("o")}).code, 2);
}

}  // namespace
}  // namespace ldsc
