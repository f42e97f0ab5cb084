#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const int status = std::system((std::string(PPSEL_CLI) + " " + args).c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path tmp(const std::string& name) { return fs::temp_directory_path() / name; }

}  // namespace

TEST(Cli, SimulateIsDeterministic) {
  const auto a = tmp("ppsel_cli_a.csv"), b = tmp("ppsel_cli_b.csv");
  ASSERT_EQ(run("simulate --mu 200 --seed 3 -o " + a.string()), 0);
  ASSERT_EQ(run("simulate --mu 200 --seed 3 -o " + b.string()), 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(slurp(a).substr(0, 4), "x,y\n");
  ASSERT_EQ(run("simulate --process thomas --mu 200 --seed 3 -o " + b.string()), 0);
  EXPECT_NE(slurp(a), slurp(b));
}

TEST(Cli, FitAndSelect) {
  const auto p = tmp("ppsel_cli_p.csv"), f = tmp("ppsel_cli_fit.csv"),
             s = tmp("ppsel_cli_sel.csv");
  ASSERT_EQ(run("simulate --mu 300 --seed 4 -o " + p.string()), 0);
  ASSERT_EQ(run("fit --pattern " + p.string() + " --model 1,2 -o " + f.string()), 0);
  const auto fit = slurp(f);
  EXPECT_EQ(fit.substr(0, fit.find('\n')), "model_id,label,b0,b1,b2,b3,b4,b5,b6,loglik,converged,iterations");
  ASSERT_EQ(run("select --pattern " + p.string() + " --criteria aic bic_n -o " + s.string() +
                " 2>/dev/null"),
            0);
  std::istringstream in(slurp(s));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 1u + 2u * 64u);
}

TEST(Cli, CheckGradient) { EXPECT_EQ(run("check --suite gradient > /dev/null"), 0); }

TEST(Cli, BadInputsExitNonzero) {
  const auto cfg = tmp("ppsel_cli_bad.cfg");
  std::ofstream(cfg) << "mu = 100\ncolour = blue\n";
  EXPECT_EQ(run("run --config " + cfg.string() + " 2>/dev/null"), 2);
  EXPECT_NE(run("run --config /nonexistent.cfg 2>/dev/null"), 0);
  EXPECT_NE(run("fit --pattern /nonexistent.csv 2>/dev/null"), 0);
  EXPECT_NE(run("frobnicate 2>/dev/null"), 0);
}

TEST(Cli, RunSmallStudy) {
  const auto out = tmp("ppsel_cli_run");
  fs::remove_all(out);
  const std::string cfg = std::string(PPSEL_CONFIG_DIR) + "/poisson_w500_mu200.cfg";
  ASSERT_EQ(run("run --config " + cfg + " --replicates 3 --set m_alt=none --out " + out.string() +
                " > /dev/null 2>&1"),
            0);
  for (const char* f : {"selection_long.csv", "metrics.csv", "summary.csv", "failures.csv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
}
