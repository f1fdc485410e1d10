#include "doctest.h"

#include <Eigen/Dense>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("partly_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Run run(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(PARTLY_BIN) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

double report_value(const std::string& text, const std::string& key) {
  const auto at = text.find(key + ": ");
  REQUIRE(at != std::string::npos);
  return std::stod(text.substr(at + key.size() + 2));
}

std::string data(const std::string& name) { return std::string(PARTLY_DATA) + "/" + name; }

fs::path intercept_only(const fs::path& dir) {
  std::mt19937_64 rng(3);
  std::exponential_distribution<double> life(1.0);
  std::uniform_real_distribution<double> cens(0.0, 2.0);
  const fs::path p = dir / "intercept.csv";
  std::ofstream out(p);
  out << "time,status,intercept\n";
  out.precision(17);
  for (int i = 0; i < 150; ++i) {
    const double t = life(rng), c = cens(rng);
    out << std::min(t, c) << ',' << (t <= c ? 1 : 0) << ",1\n";
  }
  return p;
}

}  // namespace

TEST_CASE("aalen fit of the three-subject file") {
  const fs::path dir = scratch("three");
  const Run r = run("fit --mode=aalen " + data("three_subjects.csv") + " --out " + dir.string(), dir);
  REQUIRE(r.code == 0);
  // Risk sets {1,2,3} at t=1 and {2,3} at t=2; increments solve G dA = dN.
  Eigen::Matrix2d G1, G2;
  G1 << 3, 1, 1, 1;
  G2 << 2, 1, 1, 1;
  const Eigen::Vector2d d1 = G1.fullPivLu().solve(Eigen::Vector2d(1, 0));
  const Eigen::Vector2d d2 = G2.fullPivLu().solve(Eigen::Vector2d(1, 1));
  const auto rows = read_csv(dir / "A.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][0] == 1.0);
  CHECK(std::abs(rows[1][1] - d1(0)) < 1e-12);
  CHECK(std::abs(rows[1][2] - d1(1)) < 1e-12);
  CHECK(std::abs(rows[2][1] - (d1 + d2)(0)) < 1e-12);
  CHECK(std::abs(rows[2][2] - (d1 + d2)(1)) < 1e-12);
  CHECK(fs::exists(dir / "manifest.yaml"));
}

TEST_CASE("usage and input errors exit with 2") {
  const fs::path dir = scratch("errors");
  Run r = run("fit --mode=partly " + data("three_subjects.csv"), dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("partly mode requires p ≥ 1") != std::string::npos);

  r = run("fit --mode=aalen " + (dir / "missing.csv").string() + " --out " + dir.string(), dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("missing.csv") != std::string::npos);

  r = run("efficiency --no-such-flag", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("Usage") != std::string::npos);

  r = run("simulate --config " + std::string(PARTLY_CONFIGS) + "/reference_scenario.yaml --seed 1 --reps 0", dir);
  CHECK(r.code == 2);

  const fs::path bad = dir / "bad.yaml";
  std::ofstream(bad) << "dataset:\n  path: x.csv\nfit:\n  mode: sideways\n";
  r = run("fit --config " + bad.string(), dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("fit.mode") != std::string::npos);
  CHECK(r.err.find("line 4") != std::string::npos);
}

TEST_CASE("efficiency curve from setup tokens") {
  const fs::path dir = scratch("eff");
  const Run r = run("efficiency --curve=are c=1 r=2 --out " + dir.string(), dir);
  REQUIRE(r.code == 0);
  CHECK(r.out == "are\n1.3333333333333333\n");
  CHECK(slurp(dir / "efficiency.csv") == r.out);
}

TEST_CASE("single-window chi-squared on an intercept-only file") {
  const fs::path dir = scratch("chisq");
  const fs::path csv = intercept_only(dir);
  const Run r = run("gof " + csv.string() +
                        " --parametric=intercept --families=constant --test=chisq --windows=1 --out " +
                        dir.string(),
                    dir);
  REQUIRE(r.code == 0);
  const auto inc = r.out.find("increments: [");
  REQUIRE(inc != std::string::npos);
  const double d = std::stod(r.out.substr(inc + 13));
  const auto sig = r.out.find("sigma:\n  - [");
  REQUIRE(sig != std::string::npos);
  const double s = std::stod(r.out.substr(sig + 12));
  CHECK(report_value(r.out, "df") == 1.0);
  CHECK(std::abs(report_value(r.out, "chi2") - d * d / s) < 1e-10 * d * d / s);
  // The single increment is R(tau), the last row of the monitoring path.
  const auto rows = read_csv(dir / "monitor_1.csv");
  CHECK(std::abs(rows.back()[1] - d) < 1e-12 * std::max(1.0, std::abs(d)));
}

TEST_CASE("randomized gof checks and determinism") {
  const fs::path dir = scratch("ks");
  const fs::path csv = intercept_only(dir);
  const std::string base = "gof " + csv.string() + " --parametric=intercept --families=constant";
  Run r = run(base + " --test=ks --B=50 --seed=1", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("B ≥ 100 required") != std::string::npos);
  r = run(base + " --test=ks", dir);
  CHECK(r.code == 2);

  const Run a = run(base + " --test=both --B=200 --seed=9 --out " + (dir / "a").string(), dir);
  const Run b = run(base + " --test=both --B=200 --seed=9 --out " + (dir / "b").string(), dir);
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(slurp(dir / "a" / "gof_report.txt") == slurp(dir / "b" / "gof_report.txt"));
  const Run c = run("gof --config " + (dir / "a" / "manifest.yaml").string() + " --out " + (dir / "c").string(), dir);
  REQUIRE(c.code == 0);
  CHECK(slurp(dir / "a" / "gof_report.txt") == slurp(dir / "c" / "gof_report.txt"));
}

TEST_CASE("partly fit manifest round trip") {
  const fs::path dir = scratch("partly");
  const Run a = run("fit --mode=partly " + data("power_linear_n500.csv") +
                        " --parametric=z1,z2 --families=power,linear --tau=0.9 --xi-times=0.3,0.6"
                        " --survival-z=10,2,1,5 --survival-times=0.2,0.5 --out " +
                        (dir / "a").string(),
                    dir);
  REQUIRE(a.code == 0);
  const Run b = run("fit --config " + (dir / "a" / "manifest.yaml").string() + " --out " + (dir / "b").string(), dir);
  REQUIRE(b.code == 0);
  for (const char* f : {"A.csv", "theta.csv", "A2.csv", "xi_t.csv", "survival.csv"}) {
    CHECK(fs::exists(dir / "a" / f));
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  std::istringstream theta(slurp(dir / "a" / "theta.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(theta, line)) ++lines;
  CHECK(lines == 4);  // header, two power parameters, one linear
}

TEST_CASE("simulate requires a seed and is reproducible") {
  const fs::path dir = scratch("sim");
  const std::string cfg = std::string(PARTLY_CONFIGS) + "/reference_scenario.yaml";
  Run r = run("simulate --scenario " + cfg + " --reps 2", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("--seed") != std::string::npos);

  const Run a = run("simulate --config " + cfg + " --reps 3 --threads 2 --out " + (dir / "a").string(), dir);
  REQUIRE(a.code == 0);
  const Run b = run("simulate --config " + (dir / "a" / "manifest.yaml").string() + " --threads 1 --out " +
                        (dir / "b").string(),
                    dir);
  REQUIRE(b.code == 0);
  CHECK(slurp(dir / "a" / "mc_table.csv") == slurp(dir / "b" / "mc_table.csv"));
  CHECK(slurp(dir / "a" / "mc_summary.csv") == slurp(dir / "b" / "mc_summary.csv"));
}
