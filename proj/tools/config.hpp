#pragma once

#include "partly/efficiency.hpp"
#include "partly/simgen.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace YAML {
class Node;
}

namespace partly::cli {

struct DatasetConfig {
  std::string path;
  std::string time = "time";
  std::string status = "status";
  std::vector<std::string> parametric;
  std::vector<std::string> nonparametric;
};

struct ModelConfig {
  std::vector<std::string> families;
  std::vector<double> theta_init;
};

struct FitConfig {
  std::string mode = "aalen";     // aalen | mle | partly
  std::string weights = "plain";  // plain | optimal
  std::string vn = "plain";       // plain | optimal
  std::optional<double> tau;
  std::optional<double> bandwidth;
  std::vector<double> xi_times;        // xi_t.csv rows
  std::vector<double> survival_z;      // one covariate vector for survival.csv
  std::vector<double> survival_times;
};

struct GofConfig {
  std::vector<Index> components;  // 1-based; empty means every parametric component
  std::string test = "both";      // chisq | ks | both
  Index windows = 4;
  std::vector<double> boundaries;
  std::string method = "gaussian";  // gaussian | bootstrap
  Index B = 1000;
  std::string weight = "unit";  // unit | estimating
  bool simultaneous = false;
};

struct SimulateConfig {
  Index reps = 200;
  std::vector<std::string> estimators{"aalen", "partly"};
  std::vector<double> times{0.5};
  std::optional<double> fit_tau;
  std::string vn = "plain";
  std::string se = "plugin";  // plugin | monte_carlo
  double level = 0.95;
};

struct EfficiencyConfig {
  GammaSetup setup;
  std::string curve = "are";  // are | param | backfit
  std::vector<double> u_grid{0.25, 0.5, 1.0, 2.0, 4.0};
  bool printed = false;
  bool sieve = false;
  std::vector<Index> K_grid{10, 20, 40, 80, 160, 320};
  std::string family = "constant";
  std::vector<double> theta;
  double tau = 1.0;
};

struct RunConfig {
  std::string command;
  DatasetConfig dataset;
  ModelConfig model;
  FitConfig fit;
  GofConfig gof;
  std::optional<Scenario> scenario;
  SimulateConfig simulate;
  EfficiencyConfig efficiency;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out = ".";
};

// Reads a config or manifest file. Relative paths inside it resolve
// against the file's directory. Throws InputError with the field and line.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const YAML::Node& root, const std::string& base_dir,
                       const std::string& source);

Scenario parse_scenario(const YAML::Node& node, const std::string& source);
Scenario load_scenario(const std::string& path);
SimulateConfig load_simulate_section(const std::string& path);

void validate(const RunConfig& config);

// The fully resolved config plus the command, versions and artifacts.
std::string manifest_text(const RunConfig& config, const std::vector<std::string>& artifacts);

std::string scenario_text(const Scenario& sc);

// "c=1,r=2" or separate "c=1" "r=2" tokens.
void apply_setup_tokens(GammaSetup& setup, const std::vector<std::string>& tokens);

}  // namespace partly::cli
