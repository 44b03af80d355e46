// Experiment CLI: `run` executes a config-driven study and writes per-method
// CSVs plus a summary; `budget` prints the measurement/power budget for a
// spectrum; `sparse-design` prints a cardinality-constrained measurement
// vector. Exit codes: 0 success, 2 config/usage error, 3 data error,
// 4 numerical failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "infogreedy/datasets.hpp"
#include "infogreedy/experiments.hpp"
#include "infogreedy/sparse_design.hpp"

namespace {

using namespace infogreedy;

Vec flatten(const Matrix& m) {
  Vec out;
  out.reserve(static_cast<std::size_t>(m.rows) * m.cols);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out.push_back(m(i, j));
  return out;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed, std::optional<int> trials) {
  auto cfg = load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (trials) cfg.trials = *trials;
  auto output = run_experiment(cfg);
  write_experiment_outputs(output, out_dir);
  for (const auto& [k, v] : output.summary) std::cout << k << " = " << v << "\n";
  std::cout << "written: " << out_dir << "/trials_<method>.csv, " << out_dir
            << "/summary.txt\n";
  return 0;
}

int cmd_budget(const std::string& model, const std::string& spectrum_path, double eps, double p,
               double sigma, double noise_norm) {
  Vec spectrum = flatten(load_csv_series(spectrum_path));
  NoiseModel noise;
  if (model == "white-after")
    noise = WhiteAfterNoise{sigma};
  else if (model == "white-before")
    noise = WhiteBeforeNoise{sigma};
  else if (model == "colored-before") {
    SymMatrix w(1);
    w(0, 0) = noise_norm;
    noise = ColoredBeforeNoise{w};
  } else {
    throw ConfigError("budget: unknown --model '" + model + "'");
  }
  auto budget = measurement_budget(spectrum, noise, eps, p);
  std::cout << "model = " << model << "\n"
            << "n = " << spectrum.size() << "\n"
            << "budget_kind = " << (budget.is_count ? "measurements" : "power") << "\n"
            << "budget = " << budget.amount << "\n";
  return 0;
}

int cmd_sparse_design(const std::string& cov_path, int k0, double sigma, double tol,
                      int max_iter) {
  auto data = load_csv_series(cov_path);
  if (data.rows != data.cols)
    throw DataError(cov_path + ": covariance must be square, got " +
                    std::to_string(data.rows) + "x" + std::to_string(data.cols));
  auto cov = SymMatrix::from_dense(data.rows, data.data);
  auto res = sparse_direction(cov, sigma, k0, std::nullopt, tol, max_iter);
  std::cout << "objective_nats = " << res.objective << "\n"
            << "gap = " << res.gap << "\n"
            << "certified = " << (res.certified ? "yes" : "no") << "\n"
            << "iterations = " << res.iterations << "\n"
            << "c_bound = " << res.c_bound << "\n"
            << "a =";
  for (double v : res.a) std::cout << " " << v;
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Info-greedy sequential sensing: experiments, budgets and sparse design"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  std::optional<int> trials_override;
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("config", config_path, "path to a key = value config file")->required();
  run->add_option("--out", out_dir, "output directory (default .)");
  run->add_option("--seed", seed_override, "override the config seed");
  run->add_option("--trials", trials_override, "override the config trial count");

  std::string model, spectrum_path;
  double eps = 0.1, p = 0.95, sigma = 0.01, noise_norm = 1.0;
  auto* budget = app.add_subcommand("budget", "print the resource budget for a spectrum");
  budget->add_option("--model", model, "white-after | white-before | colored-before")
      ->required();
  budget->add_option("--spectrum", spectrum_path, "CSV of prior eigenvalues")->required();
  budget->add_option("--eps", eps, "target accuracy")->required();
  budget->add_option("--p", p, "success probability")->required();
  budget->add_option("--sigma", sigma, "noise std-dev (white models)")->required();
  budget->add_option("--noise-norm", noise_norm,
                     "spectral norm of the noise covariance (colored-before; default 1)");

  std::string cov_path;
  int k0 = 1, max_iter = 100;
  double sd_sigma = 0.01, tol = 1e-6;
  auto* sparse = app.add_subcommand("sparse-design", "design a sparse measurement vector");
  sparse->add_option("--cov", cov_path, "CSV with the square signal covariance")->required();
  sparse->add_option("--k0", k0, "maximum number of non-zero entries")->required();
  sparse->add_option("--sigma", sd_sigma, "noise std-dev")->required();
  sparse->add_option("--tol", tol, "gap tolerance (default 1e-6)");
  sparse->add_option("--max-iter", max_iter, "iteration cap (default 100)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, seed_override, trials_override);
    if (budget->parsed()) return cmd_budget(model, spectrum_path, eps, p, sigma, noise_norm);
    if (sparse->parsed()) return cmd_sparse_design(cov_path, k0, sd_sigma, tol, max_iter);
  } catch (const infogreedy::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const infogreedy::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const infogreedy::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
