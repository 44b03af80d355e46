#pragma once

// Flat key = value experiment configuration. One assignment per line, '#'
// starts a comment, keys are validated per experiment kind so typos fail
// loudly instead of silently running defaults.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "infogreedy/errors.hpp"

namespace infogreedy {

enum class ExperimentKind {
  GaussianWhite,
  GaussianColored,
  GaussianMismatch,
  GmmCompare,
  SparseCompare,
  BisectionStudy,
  MnistClassify,
  CsvRecovery,
};

inline const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::GaussianWhite: return "gaussian-white";
    case ExperimentKind::GaussianColored: return "gaussian-colored";
    case ExperimentKind::GaussianMismatch: return "gaussian-mismatch";
    case ExperimentKind::GmmCompare: return "gmm-compare";
    case ExperimentKind::SparseCompare: return "sparse-compare";
    case ExperimentKind::BisectionStudy: return "bisection-study";
    case ExperimentKind::MnistClassify: return "mnist-classify";
    case ExperimentKind::CsvRecovery: return "csv-recovery";
  }
  return "?";
}

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::GaussianWhite;
  int n = 100;
  int trials = 100;
  std::uint64_t seed = 1;
  double sigma = 0.01;
  double eps = 0.1;
  double p = 0.95;

  // gaussian studies
  double threshold = 0.7;           // eigenvalue threshold of the low-rank generator
  std::string noise_model = "white-after";  // white-after | white-before | colored-before
  std::string baseline = "random";  // none | random
  int measurements = 20;            // fixed m for mismatch / gmm / sparse / mnist / csv
  int baseline_cap = 200;           // random-baseline measurement cap (colored noise)

  // gmm studies
  int components = 3;
  std::vector<double> pi_true = {0.3, 0.2, 0.5};
  double step_size = 0.2;
  double eta = 0.01;
  int mc_samples = 300;
  int max_steps = 60;

  // sparse design
  int k0 = 5;

  // bisection
  int sparsity = 5;  // k
  double amp_lo = 0.5;
  double amp_hi = 2.0;

  // data-driven studies
  std::string images_path;
  std::string labels_path;
  std::string test_images_path;
  std::string test_labels_path;
  int train_count = 10000;
  int test_count = 200;
  double ridge = 1e-3;
  std::string csv_path;
  int train_rows = 5;
  int test_row = 5;  // 0-based row index of the held-out vector
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

class KeyValues {
 public:
  void insert(const std::string& key, const std::string& value, int line) {
    if (values_.count(key)) {
      std::ostringstream msg;
      msg << "config line " << line << ": duplicate key '" << key << "'";
      throw ConfigError(msg.str());
    }
    values_[key] = value;
  }

  std::optional<std::string> take(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    std::string v = it->second;
    values_.erase(it);
    return v;
  }

  void expect_empty() const {
    if (values_.empty()) return;
    std::ostringstream msg;
    msg << "config: unknown key(s):";
    for (const auto& [k, v] : values_) msg << " '" << k << "'";
    throw ConfigError(msg.str());
  }

 private:
  std::map<std::string, std::string> values_;
};

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

inline long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
}

inline std::vector<double> parse_weights(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_double(key, trim(tok)));
  if (out.empty()) throw ConfigError("config: key '" + key + "' expects a weight list");
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text) {
  detail::KeyValues kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      std::ostringstream msg;
      msg << "config line " << lineno << ": expected key = value";
      throw ConfigError(msg.str());
    }
    kv.insert(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)), lineno);
  }

  ExperimentConfig cfg;
  auto kind = kv.take("kind");
  if (!kind) throw ConfigError("config: missing required key 'kind'");
  const std::map<std::string, ExperimentKind> kinds = {
      {"gaussian-white", ExperimentKind::GaussianWhite},
      {"gaussian-colored", ExperimentKind::GaussianColored},
      {"gaussian-mismatch", ExperimentKind::GaussianMismatch},
      {"gmm-compare", ExperimentKind::GmmCompare},
      {"sparse-compare", ExperimentKind::SparseCompare},
      {"bisection-study", ExperimentKind::BisectionStudy},
      {"mnist-classify", ExperimentKind::MnistClassify},
      {"csv-recovery", ExperimentKind::CsvRecovery},
  };
  auto kit = kinds.find(*kind);
  if (kit == kinds.end()) throw ConfigError("config: unknown kind '" + *kind + "'");
  cfg.kind = kit->second;

  auto take_int = [&](const char* key, int& slot, long lo, long hi) {
    if (auto v = kv.take(key)) {
      const long x = detail::parse_long(key, *v);
      if (x < lo || x > hi)
        throw ConfigError(std::string("config: key '") + key + "' out of range");
      slot = static_cast<int>(x);
    }
  };
  auto take_double = [&](const char* key, double& slot, double lo, double hi) {
    if (auto v = kv.take(key)) {
      const double x = detail::parse_double(key, *v);
      if (!(x >= lo && x <= hi))
        throw ConfigError(std::string("config: key '") + key + "' out of range");
      slot = x;
    }
  };
  auto take_string = [&](const char* key, std::string& slot) {
    if (auto v = kv.take(key)) slot = *v;
  };

  take_int("n", cfg.n, 1, 1000000);
  take_int("trials", cfg.trials, 1, 100000000);
  if (auto v = kv.take("seed"))
    cfg.seed = static_cast<std::uint64_t>(std::stoull(*v));
  take_double("sigma", cfg.sigma, 0.0, 1e12);
  take_double("eps", cfg.eps, 1e-12, 1e12);
  take_double("p", cfg.p, 1e-12, 1.0 - 1e-12);

  const bool gaussian = cfg.kind == ExperimentKind::GaussianWhite ||
                        cfg.kind == ExperimentKind::GaussianColored ||
                        cfg.kind == ExperimentKind::GaussianMismatch;
  if (gaussian || cfg.kind == ExperimentKind::GmmCompare ||
      cfg.kind == ExperimentKind::SparseCompare)
    take_double("threshold", cfg.threshold, 1e-6, 1.0 - 1e-9);
  if (cfg.kind == ExperimentKind::GaussianWhite) {
    take_string("noise_model", cfg.noise_model);
    if (cfg.noise_model != "white-after" && cfg.noise_model != "white-before")
      throw ConfigError("config: gaussian-white expects noise_model white-after|white-before");
  }
  if (cfg.kind == ExperimentKind::GaussianColored) cfg.noise_model = "colored-before";
  if (gaussian) {
    take_string("baseline", cfg.baseline);
    if (cfg.baseline != "none" && cfg.baseline != "random")
      throw ConfigError("config: baseline must be none|random");
    take_int("baseline_cap", cfg.baseline_cap, 1, 1000000);
  }
  if (cfg.kind == ExperimentKind::GaussianMismatch || cfg.kind == ExperimentKind::GmmCompare ||
      cfg.kind == ExperimentKind::SparseCompare || cfg.kind == ExperimentKind::MnistClassify ||
      cfg.kind == ExperimentKind::CsvRecovery)
    take_int("measurements", cfg.measurements, 1, 1000000);

  if (cfg.kind == ExperimentKind::GmmCompare || cfg.kind == ExperimentKind::MnistClassify) {
    take_int("components", cfg.components, 1, 1000);
    if (auto v = kv.take("pi_true")) cfg.pi_true = detail::parse_weights("pi_true", *v);
    take_double("step_size", cfg.step_size, 1e-9, 1e6);
    take_double("eta", cfg.eta, 1e-12, 1e6);
    take_int("mc_samples", cfg.mc_samples, 1, 100000000);
    take_int("max_steps", cfg.max_steps, 1, 1000000);
  }
  if (cfg.kind == ExperimentKind::SparseCompare) take_int("k0", cfg.k0, 1, 1000000);
  if (cfg.kind == ExperimentKind::BisectionStudy) {
    take_int("k", cfg.sparsity, 1, 1000000);
    take_double("amp_lo", cfg.amp_lo, 0.0, 1e12);
    take_double("amp_hi", cfg.amp_hi, 0.0, 1e12);
    if (cfg.amp_hi < cfg.amp_lo) throw ConfigError("config: amp_hi < amp_lo");
  }
  if (cfg.kind == ExperimentKind::MnistClassify) {
    take_string("images_path", cfg.images_path);
    take_string("labels_path", cfg.labels_path);
    take_string("test_images_path", cfg.test_images_path);
    take_string("test_labels_path", cfg.test_labels_path);
    take_int("train_count", cfg.train_count, 1, 100000000);
    take_int("test_count", cfg.test_count, 1, 100000000);
    take_double("ridge", cfg.ridge, 0.0, 1e12);
    if (cfg.images_path.empty() || cfg.labels_path.empty())
      throw ConfigError("config: mnist-classify requires images_path and labels_path");
  }
  if (cfg.kind == ExperimentKind::CsvRecovery) {
    take_string("csv_path", cfg.csv_path);
    take_int("train_rows", cfg.train_rows, 1, 100000000);
    take_int("test_row", cfg.test_row, 0, 100000000);
    take_double("ridge", cfg.ridge, 0.0, 1e12);
    if (cfg.csv_path.empty()) throw ConfigError("config: csv-recovery requires csv_path");
  }

  if (cfg.kind == ExperimentKind::GmmCompare) {
    if (static_cast<int>(cfg.pi_true.size()) != cfg.components)
      throw ConfigError("config: pi_true length must equal components");
    double total = 0.0;
    for (double w : cfg.pi_true) {
      if (w < 0.0) throw ConfigError("config: pi_true weights must be nonnegative");
      total += w;
    }
    if (std::fabs(total - 1.0) > 1e-9)
      throw ConfigError("config: pi_true weights must sum to 1");
  }
  if (cfg.kind == ExperimentKind::SparseCompare && cfg.k0 > cfg.n)
    throw ConfigError("config: k0 cannot exceed n");
  if (cfg.kind == ExperimentKind::BisectionStudy && cfg.sparsity > cfg.n)
    throw ConfigError("config: k cannot exceed n");

  kv.expect_empty();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace infogreedy
