#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "glueshadow/csv.hpp"
#include "glueshadow/experiment.hpp"

using namespace glueshadow;
namespace fs = std::filesystem;
namespace ex = glueshadow::experiment;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("glueshadow_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ex::Config parse(const std::string& text) {
  std::istringstream in(text);
  return ex::Config::parse(in, "test.cfg");
}

int cli(const std::string& args) {
  int rc = std::system((std::string(GLUESHADOW_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::vector<std::string> summary_row(const fs::path& dir) {
  std::ifstream f(dir / "summary.csv");
  std::string header, row;
  std::getline(f, header);
  std::getline(f, row);
  return split(row);
}

}  // namespace

TEST(Csv, ShortestRoundTrip) {
  EXPECT_EQ(csv::number(0.1), "0.1");
  EXPECT_EQ(csv::number(1.0), "1");
  EXPECT_EQ(csv::number(1e-300), "1e-300");
  double v = 0.1 + 0.2;
  EXPECT_EQ(std::stod(csv::number(v)), v);
  EXPECT_EQ(csv::number(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Config, ParsesKeysCommentsAndBlanks) {
  auto c = parse("# header\n\ntask = glue   # trailing\nmap.kind=plin\nmap.e1 = 1 0\n");
  EXPECT_EQ(c.str("task"), "glue");
  EXPECT_EQ(c.str("map.kind"), "plin");
  EXPECT_EQ(c.line("map.kind"), 4);
  EXPECT_EQ(c.list("map.e1"), (std::vector<double>{1, 0}));
  EXPECT_DOUBLE_EQ(c.num("map.a", 2.0), 2.0);
}

TEST(Config, ErrorsCarryLineNumbers) {
  try {
    parse("task = glue\nmap.kind = plin\nmap.bogus = 3\n");
    FAIL();
  } catch (const ex::config_error& e) {
    EXPECT_NE(std::string(e.what()).find("test.cfg:3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse("task glue\n"), ex::config_error);
  EXPECT_THROW(parse("task = glue\ntask = shadow\n"), ex::config_error);
  EXPECT_THROW(parse("task =\n"), ex::config_error);
}

TEST(Config, BadNumbersAndMapParameters) {
  auto c = parse("task = glue\nmap.kind = plin\nmap.a = two\n");
  try {
    c.num("map.a");
    FAIL();
  } catch (const ex::config_error& e) {
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos);
  }
  EXPECT_THROW(ex::build_map(parse("map.kind = plin\nmap.a = 3\n")), ex::config_error);
  EXPECT_THROW(ex::build_map(parse("map.kind = torus\nmap.matrix = 1 1 0 1\n")), ex::config_error);
  EXPECT_THROW(ex::build_map(parse("map.kind = circle\n")), ex::config_error);
}

TEST(Config, StochasticTaskNeedsSeed) {
  auto c = parse("task = shadow\nmap.kind = plin\n");
  EXPECT_THROW(ex::perturbation(c, Space::interval), ex::config_error);
}

TEST(Run, GlueIdenticalTrajectoriesGiveZeroErrors) {
  auto dir = scratch("glue_same");
  auto c = parse("task = glue\nmap.kind = plin\nglue.x0 = 0.3\nglue.y0 = 0.3\nglue.back = 20\nglue.fwd = 20\n");
  std::ostringstream log;
  EXPECT_EQ(ex::run(c, dir, log), ex::kPass);
  std::ifstream f(dir / "glue.csv");
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line, "k,error,bound_strong,bound_weak");
  int rows = 0;
  while (std::getline(f, line)) {
    EXPECT_EQ(split(line)[1], "0");
    ++rows;
  }
  EXPECT_EQ(rows, 40);
}

TEST(Run, GluingFailureKeepsPartialOutputAndFailRow) {
  auto dir = scratch("glue_fail");
  auto c = parse("task = shadow\nmap.kind = plin\nmap.a = 1.8\nperturbation.kind = R\nperturbation.epsilon = 0.2\n"
                 "perturbation.pos_len = 400\nperturbation.seed = 1\n");
  std::ostringstream log;
  EXPECT_EQ(ex::run(c, dir, log), ex::kNumericalFailure);
  EXPECT_TRUE(fs::exists(dir / "pseudo.csv"));
  auto row = summary_row(dir);
  ASSERT_EQ(row.size(), 12u);
  EXPECT_EQ(row.back(), "fail");
  EXPECT_FALSE(log.str().empty());
}

TEST(Run, ShadowSummaryPassIsRecomputable) {
  auto dir = scratch("shadow_small");
  auto c = parse("task = shadow\nmap.kind = plin\nperturbation.kind = R\nperturbation.epsilon = 0.01\n"
                 "perturbation.neg_len = 5000\nperturbation.pos_len = 5000\nperturbation.seed = 7\n");
  std::ostringstream log;
  EXPECT_EQ(ex::run(c, dir, log), ex::kPass);
  auto row = summary_row(dir);
  ASSERT_EQ(row.size(), 12u);
  EXPECT_EQ(row[0], "shadow");
  EXPECT_EQ(row[1], "plin");
  EXPECT_EQ(row[11], "true");
  // Q_limsup recomputed from qn.csv: max over the final half
  std::ifstream q(dir / "qn.csv");
  std::string line;
  std::getline(q, line);
  std::vector<double> qn;
  while (std::getline(q, line)) qn.push_back(std::stod(split(line)[1]));
  double mx = 0;
  for (std::size_t n = qn.size() / 2; n < qn.size(); ++n) mx = std::max(mx, qn[n]);
  EXPECT_EQ(csv::number(mx), row[7]);
  EXPECT_LE(mx, std::stod(row[10]));
}

TEST(Run, ConsecutiveMethodAndAffineGlue) {
  auto dir = scratch("consecutive");
  auto c = parse("task = shadow\nmap.kind = plin\nshadow.method = consecutive\nperturbation.kind = U\n"
                 "perturbation.epsilon = 0.001\nperturbation.neg_len = 300\nperturbation.pos_len = 300\n"
                 "perturbation.seed = 3\n");
  std::ostringstream log;
  EXPECT_EQ(ex::run(c, dir, log), ex::kPass);
}

TEST(Run, UnknownTaskIsConfigError) {
  auto dir = scratch("unknown");
  std::ostringstream log;
  EXPECT_THROW(ex::run(parse("task = dance\n"), dir, log), ex::config_error);
}

TEST(Cli, MissingConfigFlagIsUsageError) { EXPECT_EQ(cli(""), 2); }

TEST(Cli, BadConfigFileIsUsageError) {
  auto dir = scratch("cli_bad");
  std::ofstream(dir / "bad.cfg") << "task = glue\nmap.kind = nope\n";
  EXPECT_EQ(cli("--config " + (dir / "bad.cfg").string() + " --out " + (dir / "o").string()), 2);
  EXPECT_EQ(cli("--config " + (dir / "missing.cfg").string()), 2);
}

TEST(Cli, CanonicalConfigsPass) {
  for (const char* name : {"glue_affine", "rates_neutral", "envelope"}) {
    auto dir = scratch(std::string("cli_") + name);
    std::string cfg = std::string(GLUESHADOW_CONFIGS) + "/" + name + ".cfg";
    EXPECT_EQ(cli("--quiet --config " + cfg + " --out " + dir.string()), 0) << name;
    EXPECT_TRUE(fs::exists(dir / "summary.csv")) << name;
  }
}

TEST(Cli, EnvelopeWritesBothTables) {
  auto dir = scratch("cli_envelope");
  ASSERT_EQ(cli("--config " + std::string(GLUESHADOW_CONFIGS) + "/envelope.cfg --out " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "envelope_phi.csv"));
  EXPECT_TRUE(fs::exists(dir / "envelope_tilde.csv"));
}

TEST(Cli, SeedOverrideAndDeterminism) {
  auto a = scratch("cli_det_a"), b = scratch("cli_det_b"), c = scratch("cli_det_c");
  std::ofstream(a / "run.cfg") << "task = shadow\nmap.kind = neutral\nperturbation.kind = R\n"
                                  "perturbation.epsilon = 0.01\nperturbation.neg_len = 2000\n"
                                  "perturbation.pos_len = 2000\nperturbation.seed = 5\n"
                                  "tolerance.bound_margin = 1.5\n";
  std::string cfg = (a / "run.cfg").string();
  cli("--quiet --config " + cfg + " --out " + (a / "o").string());
  cli("--quiet --config " + cfg + " --out " + (b / "o").string());
  cli("--quiet --config " + cfg + " --seed 6 --out " + (c / "o").string());
  for (const char* f : {"summary.csv", "pseudo.csv", "trajectory.csv", "levels.csv", "qn.csv"}) {
    EXPECT_EQ(slurp(a / "o" / f), slurp(b / "o" / f)) << f;
  }
  EXPECT_NE(slurp(a / "o" / "pseudo.csv"), slurp(c / "o" / "pseudo.csv"));
}
