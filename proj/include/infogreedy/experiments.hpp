#pragma once

// Config-driven experiment harness: signal/covariance generators, the
// simulated sensing studies, data-driven recovery and classification runs,
// and deterministic CSV / summary emission. Trials run in parallel with
// per-trial derived generators, so results do not depend on scheduling.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "infogreedy/bisection.hpp"
#include "infogreedy/config.hpp"
#include "infogreedy/datasets.hpp"
#include "infogreedy/errors.hpp"
#include "infogreedy/gaussian.hpp"
#include "infogreedy/gmm.hpp"
#include "infogreedy/linalg.hpp"
#include "infogreedy/sparse_design.hpp"

namespace infogreedy {

// ---------------------------------------------------------------------------
// covariance generators

struct GeneratedCov {
  SymMatrix cov;
  EigDecomposition eig;  // of the generated matrix, descending
};

/// Random low-rank covariance: S0 with iid standard normal entries,
/// S0 S0' normalized to unit spectral norm, eigenvalues below `threshold`
/// zeroed. The surviving spectrum lies in [threshold, 1].
inline GeneratedCov gen_lowrank_cov_with_eig(int n, double threshold, Rng& rng) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ValidationError("gen_lowrank_cov: threshold must be in (0,1)");
  Matrix s0(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s0(i, j) = rng.normal();
  SymMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += s0(i, k) * s0(j, k);
      m(i, j) = s;
      m(j, i) = s;
    }
  auto eig = sym_eig(m);
  const double top = eig.values.front();

  GeneratedCov out;
  out.cov = SymMatrix(n);
  out.eig.values.assign(n, 0.0);
  out.eig.vectors = eig.vectors;
  for (int k = 0; k < n; ++k) {
    const double lam = eig.values[k] / top;
    if (lam < threshold) break;  // values are sorted descending
    out.eig.values[k] = lam;
    Vec u = eig.eigenvector(k);
    out.cov.add_scaled(SymMatrix::outer(u, lam), 1.0);
  }
  out.cov.symmetrize();
  return out;
}

inline SymMatrix gen_lowrank_cov(int n, double threshold, Rng& rng) {
  return gen_lowrank_cov_with_eig(n, threshold, rng).cov;
}

/// Random full-rank noise covariance S0' S0 normalized to unit spectral
/// norm. A square Wishart's smallest eigenvalue occasionally collapses below
/// the library's rank-deficiency clamp (1e-10 of the top), which would make
/// the whitened sensing model reject it as singular, so the spectrum gets a
/// 1e-8 floor before normalization.
inline SymMatrix gen_colored_noise_cov(int n, Rng& rng) {
  Matrix s0(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s0(i, j) = rng.normal();
  SymMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += s0(k, i) * s0(k, j);
      m(i, j) = s;
      m(j, i) = s;
    }
  const double top = leading_eigpair_lenient(m).value;
  for (int i = 0; i < n; ++i) m(i, i) += 1e-8 * top;
  const double scale_by = 1.0 / (top * (1.0 + 1e-8));
  for (double& v : m.a) v *= scale_by;
  return m;
}

// ---------------------------------------------------------------------------
// results

struct TrialResult {
  int trial = 0;
  double error = 0.0;
  double measurements = 0.0;
  double power = 0.0;
  int label_true = -1;  // classification kinds only
  int label_pred = -1;
};

struct ExperimentOutput {
  std::vector<std::string> methods;  // emission order
  std::map<std::string, std::vector<TrialResult>> trials;
  std::vector<std::pair<std::string, std::string>> summary;

  double summary_value(const std::string& key) const {
    for (const auto& [k, v] : summary)
      if (k == key) return std::stod(v);
    throw ValidationError("summary key not found: " + key);
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void parallel_trials(int count, const std::function<void(int)>& body) {
  unsigned workers = std::thread::hardware_concurrency();
  if (workers < 2 || count < 4) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  workers = std::min<unsigned>(workers, static_cast<unsigned>(count));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w]() {
      try {
        for (int i = static_cast<int>(w); i < count; i += static_cast<int>(workers)) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline Vec random_unit_direction(int n, Rng& rng) {
  Vec v(n);
  for (double& x : v) x = rng.normal();
  const double nv = norm2(v);
  if (nv == 0.0) return unit_vector(n, 0);
  scale(v, 1.0 / nv);
  return v;
}

inline double l2_error(const Vec& x, const Vec& estimate) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - estimate[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

struct SummaryBuilder {
  std::vector<std::pair<std::string, std::string>> rows;
  void add(const std::string& key, const std::string& value) { rows.emplace_back(key, value); }
  void add(const std::string& key, double value) { rows.emplace_back(key, format_double(value)); }
  void add(const std::string& key, long value) { rows.emplace_back(key, std::to_string(value)); }

  void add_method_stats(const std::string& method, const std::vector<TrialResult>& rows_in,
                        double eps) {
    std::vector<double> errors, counts, powers;
    int success = 0;
    for (const auto& r : rows_in) {
      errors.push_back(r.error);
      counts.push_back(r.measurements);
      powers.push_back(r.power);
      if (r.error <= eps) ++success;
    }
    add("success_rate_" + method, rows_in.empty() ? 0.0 : double(success) / rows_in.size());
    add("median_error_" + method, median(errors));
    add("mean_error_" + method, mean(errors));
    add("mean_measurements_" + method, mean(counts));
    add("mean_power_" + method, mean(powers));
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// individual studies

namespace detail {

/// Measure a fixed list of directions with white noise and return the final
/// posterior; measurement k uses power ||dirs[k]||^2, noise_var per outcome.
inline GaussianBelief replay_directions(const GaussianBelief& prior,
                                        const std::vector<Vec>& dirs, const Vec& x,
                                        double noise_var, Rng& rng) {
  GaussianBelief belief = prior;
  for (const Vec& a : dirs) {
    double y = dot(a, x);
    if (noise_var > 0.0) y += std::sqrt(noise_var) * rng.normal();
    belief = posterior_update(belief, a, y, noise_var);
  }
  return belief;
}

inline ExperimentOutput run_gaussian_budget_study(const ExperimentConfig& cfg) {
  const bool colored = cfg.kind == ExperimentKind::GaussianColored;
  const bool white_after = cfg.noise_model == "white-after";
  const bool with_random = cfg.baseline == "random";

  std::vector<TrialResult> main_rows(cfg.trials), random_rows(cfg.trials);
  detail::parallel_trials(cfg.trials, [&](int t) {
    Rng rng = Rng::for_trial(cfg.seed, static_cast<std::uint64_t>(t));
    auto gen = gen_lowrank_cov_with_eig(cfg.n, cfg.threshold, rng);
    GaussianBelief prior{Vec(cfg.n, 0.0), gen.cov};
    MvnSampler sampler(Vec(cfg.n, 0.0), gen.cov);
    Vec x = sampler.sample(rng);

    NoiseModel noise = white_after && !colored
                           ? NoiseModel{WhiteAfterNoise{cfg.sigma}}
                           : colored ? NoiseModel{ColoredBeforeNoise{gen_colored_noise_cov(
                                           cfg.n, rng)}}
                                     : NoiseModel{WhiteBeforeNoise{cfg.sigma}};

    SessionOptions opt;
    opt.eps = cfg.eps;
    opt.p = cfg.p;
    opt.max_iter = 200 * cfg.n + 1000;
    auto transcript = run_session(SignalSource::fixed(x), prior, noise, opt, rng);

    TrialResult row;
    row.trial = t;
    row.error = detail::l2_error(x, transcript.estimate);
    row.measurements = static_cast<double>(transcript.unit_measurements());
    row.power = transcript.total_power();
    main_rows[t] = row;

    if (with_random) {
      // normalized random Gaussian probes, one unit of power each, at the
      // same measurement count the greedy session used
      long m = transcript.unit_measurements();
      if (colored) m = std::min<long>(m, cfg.baseline_cap);
      GaussianBelief belief = prior;
      for (long k = 0; k < m; ++k) {
        Vec a = detail::random_unit_direction(cfg.n, rng);
        const double v = colored ? std::get<ColoredBeforeNoise>(noise).cov.quadratic_form(a)
                                 : cfg.sigma * cfg.sigma;
        double y = dot(a, x);
        if (v > 0.0) y += std::sqrt(v) * rng.normal();
        belief = posterior_update(belief, a, y, v);
      }
      TrialResult rrow;
      rrow.trial = t;
      rrow.error = detail::l2_error(x, belief.mean);
      rrow.measurements = static_cast<double>(m);
      rrow.power = static_cast<double>(m);
      random_rows[t] = rrow;
    }
  });

  ExperimentOutput out;
  out.methods.push_back("infogreedy");
  out.trials["infogreedy"] = std::move(main_rows);
  if (with_random) {
    out.methods.push_back("random");
    out.trials["random"] = std::move(random_rows);
  }
  detail::SummaryBuilder sb;
  sb.add("kind", std::string(kind_name(cfg.kind)));
  sb.add("noise_model", colored ? std::string("colored-before") : cfg.noise_model);
  sb.add("n", static_cast<long>(cfg.n));
  sb.add("trials", static_cast<long>(cfg.trials));
  sb.add("seed", static_cast<long>(cfg.seed));
  sb.add("sigma", cfg.sigma);
  sb.add("eps", cfg.eps);
  sb.add("p", cfg.p);
  sb.add("threshold", cfg.threshold);
  for (const auto& m : out.methods) sb.add_method_stats(m, out.trials[m], cfg.eps);
  out.summary = std::move(sb.rows);
  return out;
}

inline ExperimentOutput run_mismatch_study(const ExperimentConfig& cfg) {
  const bool with_random = cfg.baseline == "random";
  std::vector<TrialResult> ig_rows(cfg.trials), batch_rows(cfg.trials), random_rows(cfg.trials);

  detail::parallel_trials(cfg.trials, [&](int t) {
    Rng rng = Rng::for_trial(cfg.seed, static_cast<std::uint64_t>(t));
    auto gen = gen_lowrank_cov_with_eig(cfg.n, cfg.threshold, rng);
    Vec e(cfg.n);
    for (double& v : e) v = rng.normal();
    SymMatrix assumed = gen.cov;
    assumed.rank1_downdate(e, -1.0);  // assumed = true + e e'
    MvnSampler sampler(Vec(cfg.n, 0.0), gen.cov);
    Vec x = sampler.sample(rng);

    GaussianBelief prior{Vec(cfg.n, 0.0), assumed};
    const double s2 = cfg.sigma * cfg.sigma;

    // adaptive: unit-power measurements along the current leading eigenvector
    SessionOptions opt;
    opt.eps = cfg.eps;
    opt.p = cfg.p;
    opt.max_iter = cfg.measurements;
    opt.unit_power = true;
    Rng ig_rng = Rng::for_trial(cfg.seed ^ 0x11ull, static_cast<std::uint64_t>(t));
    auto transcript =
        run_session(SignalSource::fixed(x), prior, WhiteAfterNoise{cfg.sigma}, opt, ig_rng);
    ig_rows[t] = {t, detail::l2_error(x, transcript.estimate),
                  static_cast<double>(transcript.records.size()),
                  transcript.total_power(), -1, -1};

    // batch: the top-m eigenvectors of the assumed covariance, fixed up front
    auto assumed_eig = sym_eig(assumed);
    std::vector<Vec> dirs;
    for (int k = 0; k < cfg.measurements && k < cfg.n; ++k) {
      if (assumed_eig.values[k] <= 0.0) break;
      dirs.push_back(assumed_eig.eigenvector(k));
    }
    Rng batch_rng = Rng::for_trial(cfg.seed ^ 0x22ull, static_cast<std::uint64_t>(t));
    auto batch_belief = detail::replay_directions(prior, dirs, x, s2, batch_rng);
    batch_rows[t] = {t, detail::l2_error(x, batch_belief.mean),
                     static_cast<double>(dirs.size()), static_cast<double>(dirs.size()), -1, -1};

    if (with_random) {
      Rng rnd_rng = Rng::for_trial(cfg.seed ^ 0x33ull, static_cast<std::uint64_t>(t));
      std::vector<Vec> rdirs;
      for (int k = 0; k < cfg.measurements; ++k)
        rdirs.push_back(detail::random_unit_direction(cfg.n, rnd_rng));
      auto belief = detail::replay_directions(prior, rdirs, x, s2, rnd_rng);
      random_rows[t] = {t, detail::l2_error(x, belief.mean),
                        static_cast<double>(cfg.measurements),
                        static_cast<double>(cfg.measurements), -1, -1};
    }
  });

  ExperimentOutput out;
  out.methods = {"infogreedy", "batch"};
  out.trials["infogreedy"] = std::move(ig_rows);
  out.trials["batch"] = std::move(batch_rows);
  if (with_random) {
    out.methods.push_back("random");
    out.trials["random"] = std::move(random_rows);
  }
  detail::SummaryBuilder sb;
  sb.add("kind", std::string(kind_name(cfg.kind)));
  sb.add("n", static_cast<long>(cfg.n));
  sb.add("trials", static_cast<long>(cfg.trials));
  sb.add("seed", static_cast<long>(cfg.seed));
  sb.add("sigma", cfg.sigma);
  sb.add("measurements", static_cast<long>(cfg.measurements));
  sb.add("threshold", cfg.threshold);
  for (const auto& m : out.methods) sb.add_method_stats(m, out.trials[m], cfg.eps);
  out.summary = std::move(sb.rows);
  return out;
}

/// Covariance-only mixture update (the outcome-independent part), used by the
/// non-adaptive batch baseline while designing its measurement set.
inline void covariance_only_update(GmmBelief& belief, const Vec& a, double sigma) {
  for (auto& comp : belief.components) {
    Vec ca = comp.cov.multiply(a);
    const double s = std::max(0.0, dot(a, ca)) + sigma * sigma;
    comp.cov.rank1_downdate(ca, 1.0 / s);
    comp.cov.symmetrize();
  }
}

inline ExperimentOutput run_gmm_study(const ExperimentConfig& cfg) {
  const std::vector<std::string> methods = {"gradient", "greedy", "random", "batch"};
  std::map<std::string, std::vector<TrialResult>> rows;
  std::map<std::string, std::vector<double>> cum_mi;
  for (const auto& m : methods) {
    rows[m].resize(cfg.trials);
    cum_mi[m].assign(cfg.trials, 0.0);
  }

  GradientAscentConfig ascent;
  ascent.step_size = cfg.step_size;
  ascent.tolerance = cfg.eta;
  ascent.mc_samples = cfg.mc_samples;
  ascent.max_steps = cfg.max_steps;

  detail::parallel_trials(cfg.trials, [&](int t) {
    Rng rng = Rng::for_trial(cfg.seed, static_cast<std::uint64_t>(t));
    GmmBelief truth;
    truth.components.resize(cfg.components);
    for (int c = 0; c < cfg.components; ++c) {
      truth.components[c].weight = cfg.pi_true[c];
      truth.components[c].mean = Vec(cfg.n, 0.0);
      truth.components[c].cov = gen_lowrank_cov(cfg.n, cfg.threshold, rng);
    }
    GmmSampler sampler(truth);
    auto [label, x] = sampler.sample(rng);

    GmmBelief assumed = truth;
    for (auto& comp : assumed.components) comp.weight = 1.0 / cfg.components;

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const std::string& method = methods[mi];
      Rng method_rng =
          Rng::for_trial(cfg.seed ^ (0x100ull * (mi + 1)), static_cast<std::uint64_t>(t));
      GmmBelief belief = assumed;
      double cumulative = 0.0;

      std::vector<Vec> fixed_dirs;
      if (method == "batch") {
        // design from the prior: covariance-only updates between selections
        GmmBelief design = assumed;
        for (int step = 0; step < cfg.measurements; ++step) {
          Vec a = gradient_ascent_direction(design, cfg.sigma, ascent, method_rng);
          fixed_dirs.push_back(a);
          covariance_only_update(design, a, cfg.sigma);
        }
      }

      for (int step = 0; step < cfg.measurements; ++step) {
        Vec a;
        if (method == "gradient")
          a = gradient_ascent_direction(belief, cfg.sigma, ascent, method_rng);
        else if (method == "greedy")
          a = greedy_heuristic_direction(belief);
        else if (method == "random")
          a = detail::random_unit_direction(cfg.n, method_rng);
        else
          a = fixed_dirs[step];
        cumulative += conditional_mi_estimate(belief, a, cfg.sigma);
        const double y = dot(a, x) + cfg.sigma * method_rng.normal();
        belief = gmm_posterior_update(belief, a, y, cfg.sigma);
      }
      auto cls = classify(belief);
      rows[method][t] = {t, detail::l2_error(x, cls.estimate),
                         static_cast<double>(cfg.measurements),
                         static_cast<double>(cfg.measurements), label, cls.component};
      cum_mi[method][t] = cumulative;
    }
  });

  ExperimentOutput out;
  out.methods = methods;
  for (const auto& m : methods) out.trials[m] = std::move(rows[m]);
  detail::SummaryBuilder sb;
  sb.add("kind", std::string(kind_name(cfg.kind)));
  sb.add("n", static_cast<long>(cfg.n));
  sb.add("components", static_cast<long>(cfg.components));
  sb.add("trials", static_cast<long>(cfg.trials));
  sb.add("seed", static_cast<long>(cfg.seed));
  sb.add("sigma", cfg.sigma);
  sb.add("measurements", static_cast<long>(cfg.measurements));
  sb.add("step_size", cfg.step_size);
  sb.add("eta", cfg.eta);
  sb.add("mc_samples", static_cast<long>(cfg.mc_samples));
  for (const auto& m : methods) {
    sb.add_method_stats(m, out.trials[m], cfg.eps);
    sb.add("mean_cumulative_mi_" + m, detail::mean(cum_mi[m]));
    int correct = 0;
    for (const auto& r : out.trials[m])
      if (r.label_pred == r.label_true) ++correct;
    sb.add("accuracy_" + m, static_cast<double>(correct) / std::max(1, cfg.trials));
  }
  out.summary = std::move(sb.rows);
  return out;
}

inline ExperimentOutput run_sparse_study(const ExperimentConfig& cfg) {
  const std::vector<std::string> methods = {"sparse", "random_sparse", "dense"};
  std::map<std::string, std::vector<TrialResult>> rows;
  for (const auto& m : methods) rows[m].resize(cfg.trials);

  detail::parallel_trials(cfg.trials, [&](int t) {
    Rng rng = Rng::for_trial(cfg.seed, static_cast<std::uint64_t>(t));
    auto gen = gen_lowrank_cov_with_eig(cfg.n, cfg.threshold, rng);
    MvnSampler sampler(Vec(cfg.n, 0.0), gen.cov);
    Vec x = sampler.sample(rng);
    GaussianBelief prior{Vec(cfg.n, 0.0), gen.cov};
    const double s2 = cfg.sigma * cfg.sigma;

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const std::string& method = methods[mi];
      Rng method_rng =
          Rng::for_trial(cfg.seed ^ (0x200ull * (mi + 1)), static_cast<std::uint64_t>(t));
      GaussianBelief belief = prior;
      for (int step = 0; step < cfg.measurements; ++step) {
        Vec a;
        if (method == "sparse") {
          auto res = sparse_direction(belief.cov, cfg.sigma, cfg.k0);
          a = res.a;
          const double nv = norm2(a);
          if (nv > 0.0) scale(a, 1.0 / nv);
        } else if (method == "random_sparse") {
          std::vector<int> idx(cfg.n);
          for (int i = 0; i < cfg.n; ++i) idx[i] = i;
          for (int i = 0; i < cfg.k0; ++i)
            std::swap(idx[i], idx[i + method_rng.uniform_int(cfg.n - i)]);
          a.assign(cfg.n, 0.0);
          for (int i = 0; i < cfg.k0; ++i) a[idx[i]] = method_rng.normal();
          const double nv = norm2(a);
          if (nv > 0.0) scale(a, 1.0 / nv);
        } else {
          a = leading_eigpair_lenient(belief.cov).vector;
        }
        double y = dot(a, x);
        if (s2 > 0.0) y += cfg.sigma * method_rng.normal();
        belief = posterior_update(belief, a, y, s2);
      }
      rows[method][t] = {t, detail::l2_error(x, belief.mean),
                         static_cast<double>(cfg.measurements),
                         static_cast<double>(cfg.measurements), -1, -1};
    }
  });

  ExperimentOutput out;
  out.methods = methods;
  for (const auto& m : methods) out.trials[m] = std::move(rows[m]);
  detail::SummaryBuilder sb;
  sb.add("kind", std::string(kind_name(cfg.kind)));
  sb.add("n", static_cast<long>(cfg.n));
  sb.add("k0", static_cast<long>(cfg.k0));
  sb.add("trials", static_cast<long>(cfg.trials));
  sb.add("seed", static_cast<long>(cfg.seed));
  sb.add("sigma", cfg.sigma);
  sb.add("measurements", static_cast<long>(cfg.measurements));
  for (const auto& m : methods) sb.add_method_stats(m, out.trials[m], cfg.eps);
  out.summary = std::move(sb.rows);
  return out;
}

inline ExperimentOutput run_bisection_study(const ExperimentConfig& cfg) {
  std::vector<TrialResult> rows(cfg.trials);
  detail::parallel_trials(cfg.trials, [&](int t) {
    Rng rng = Rng::for_trial(cfg.seed, static_cast<std::uint64_t>(t));
    auto sig = SparseSignal::random(cfg.n, cfg.sparsity, cfg.amp_lo, cfg.amp_hi, rng);
    Vec x = sig.to_dense();
    auto oracle = make_measure_oracle(x, cfg.sigma, rng);
    auto res = bisect_recover(oracle, cfg.n, cfg.sigma, cfg.sigma > 0.0 ? cfg.eps : 0.0);
    rows[t] = {t, detail::l2_error(x, res.estimate),
               static_cast<double>(res.measurement_count),
               static_cast<double>(res.measurement_count), -1, -1};
  });

  ExperimentOutput out;
  out.methods = {"bisection"};
  out.trials["bisection"] = std::move(rows);
  detail::SummaryBuilder sb;
  sb.add("kind", std::string(kind_name(cfg.kind)));
  sb.add("n", static_cast<long>(cfg.n));
  sb.add("k", static_cast<long>(cfg.sparsity));
  sb.add("trials", static_cast<long>(cfg.trials));
  sb.add("seed", static_cast<long>(cfg.seed));
  sb.add("sigma", cfg.sigma);
  sb.add("eps", cfg.eps);
  const double tol = std::sqrt(static_cast<double>(cfg.sparsity)) * cfg.eps;
  sb.add_method_stats("bisection", out.trials["bisection"], cfg.sigma > 0.0 ? tol : 0.0);
  out.summary = std::move(sb.rows);
  return out;
}

inline ExperimentOutput run_mnist_study(const ExperimentConfig& cfg) {
  auto images = load_idx_images(cfg.images_path);
  auto labels = load_idx_labels(cfg.labels_path);
  auto prior = fit_gmm_from_labels(images, labels, cfg.ridge, cfg.train_count);
  prior.validate();

  // held-out test data: explicit files, or the tail of the training files
  ImageSet test_images;
  std::vector<int> test_labels;
  int test_offset = 0;
  if (!cfg.test_images_path.empty()) {
    if (cfg.test_labels_path.empty())
      throw ConfigError("config: test_images_path requires test_labels_path");
    test_images = load_idx_images(cfg.test_images_path);
    test_labels = load_idx_labels(cfg.test_labels_path);
  } else {
    test_images = images;
    test_labels = labels;
    test_offset = cfg.train_count;
  }
  const int available = test_images.count - test_offset;
  if (available < 1) throw DataError("mnist-classify: no held-out test images");
  const int n_test = std::min(cfg.test_count, available);

  GradientAscentConfig ascent;
  ascent.step_size = cfg.step_size;
  ascent.tolerance = cfg.eta;
  ascent.mc_samples = cfg.mc_samples;
  ascent.max_steps = cfg.max_steps;
  ascent.entropy_stop = false;  // full-pixel covariances overwhelm the entropy formula

  const std::vector<std::string> methods = {"random", "greedy", "gradient"};
  std::map<std::string, std::vector<TrialResult>> rows;
  for (const auto& m : methods) rows[m].resize(n_test);

  detail::parallel_trials(n_test, [&](int t) {
    const int img = test_offset + t;
    Vec x = test_images.image(img);
    const int truth = test_labels[img];
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const std::string& method = methods[mi];
      Rng rng = Rng::for_trial(cfg.seed ^ (0x400ull * (mi + 1)), static_cast<std::uint64_t>(t));
      GmmBelief belief = prior;
      for (int step = 0; step < cfg.measurements; ++step) {
        Vec a;
        if (method == "greedy")
          a = greedy_heuristic_direction(belief);
        else if (method == "gradient")
          a = gradient_ascent_direction(belief, cfg.sigma, ascent, rng);
        else
          a = detail::random_unit_direction(belief.dim(), rng);
        const double y = dot(a, x) + cfg.sigma * rng.normal();
        belief = gmm_posterior_update(belief, a, y, cfg.sigma);
      }
      auto cls = classify(belief);
      rows[method][t] = {t, detail::l2_error(x, cls.estimate),
                         static_cast<double>(cfg.measurements),
                         static_cast<double>(cfg.measurements), truth, cls.component};
    }
  });

  ExperimentOutput out;
  out.methods = methods;
  for (const auto& m : methods) out.trials[m] = std::move(rows[m]);
  detail::SummaryBuilder sb;
  sb.add("kind", std::string(kind_name(cfg.kind)));
  sb.add("n", static_cast<long>(test_images.dim()));
  sb.add("train_count", static_cast<long>(std::min(cfg.train_count, images.count)));
  sb.add("test_count", static_cast<long>(n_test));
  sb.add("seed", static_cast<long>(cfg.seed));
  sb.add("sigma", cfg.sigma);
  sb.add("measurements", static_cast<long>(cfg.measurements));
  sb.add("ridge", cfg.ridge);
  sb.add("pixel_scale", std::string("1/255"));
  for (const auto& m : methods) {
    int correct = 0;
    for (const auto& r : out.trials[m])
      if (r.label_pred == r.label_true) ++correct;
    sb.add("error_rate_" + m, 1.0 - static_cast<double>(correct) / std::max(1, n_test));
    sb.add_method_stats(m, out.trials[m], cfg.eps);
  }
  out.summary = std::move(sb.rows);
  return out;
}

inline ExperimentOutput run_csv_recovery(const ExperimentConfig& cfg) {
  auto data = load_csv_series(cfg.csv_path);
  if (cfg.test_row >= data.rows)
    throw DataError(cfg.csv_path + ": test_row beyond the last row");
  if (cfg.train_rows > data.rows)
    throw DataError(cfg.csv_path + ": train_rows beyond the available rows");
  std::vector<int> train_idx;
  for (int r = 0; r < cfg.train_rows; ++r)
    if (r != cfg.test_row) train_idx.push_back(r);
  auto prior = fit_gaussian(data, train_idx, cfg.ridge);
  Vec x(data.cols);
  for (int j = 0; j < data.cols; ++j) x[j] = data(cfg.test_row, j);
  double x_inf = 0.0;
  for (double v : x) x_inf = std::max(x_inf, std::fabs(v));
  if (x_inf == 0.0) x_inf = 1.0;

  const int m = std::min(cfg.measurements, data.cols);
  const double s2 = cfg.sigma * cfg.sigma;
  std::vector<std::vector<TrialResult>> ig(cfg.trials), rd(cfg.trials);

  detail::parallel_trials(cfg.trials, [&](int t) {
    Rng rng = Rng::for_trial(cfg.seed, static_cast<std::uint64_t>(t));
    GaussianBelief belief = prior;
    for (int step = 1; step <= m; ++step) {
      Vec a = leading_eigpair_lenient(belief.cov).vector;
      double y = dot(a, x);
      if (s2 > 0.0) y += cfg.sigma * rng.normal();
      belief = posterior_update(belief, a, y, s2);
      ig[t].push_back({t, detail::l2_error(x, belief.mean) / x_inf,
                       static_cast<double>(step), static_cast<double>(step), -1, -1});
    }
    Rng rnd = Rng::for_trial(cfg.seed ^ 0x55ull, static_cast<std::uint64_t>(t));
    GaussianBelief rbelief = prior;
    for (int step = 1; step <= m; ++step) {
      Vec a = detail::random_unit_direction(data.cols, rnd);
      double y = dot(a, x);
      if (s2 > 0.0) y += cfg.sigma * rnd.normal();
      rbelief = posterior_update(rbelief, a, y, s2);
      rd[t].push_back({t, detail::l2_error(x, rbelief.mean) / x_inf,
                       static_cast<double>(step), static_cast<double>(step), -1, -1});
    }
  });

  ExperimentOutput out;
  out.methods = {"infogreedy", "random"};
  for (int t = 0; t < cfg.trials; ++t) {
    for (auto& r : ig[t]) out.trials["infogreedy"].push_back(r);
    for (auto& r : rd[t]) out.trials["random"].push_back(r);
  }
  detail::SummaryBuilder sb;
  sb.add("kind", std::string(kind_name(cfg.kind)));
  sb.add("n", static_cast<long>(data.cols));
  sb.add("trials", static_cast<long>(cfg.trials));
  sb.add("seed", static_cast<long>(cfg.seed));
  sb.add("sigma", cfg.sigma);
  sb.add("train_rows", static_cast<long>(train_idx.size()));
  sb.add("test_row", static_cast<long>(cfg.test_row));
  sb.add("ridge", cfg.ridge);
  sb.add("max_measurements", static_cast<long>(m));
  auto err_at = [&](const std::vector<std::vector<TrialResult>>& rowsets, int step) {
    std::vector<double> v;
    for (const auto& rowset : rowsets)
      for (const auto& r : rowset)
        if (static_cast<int>(r.measurements) == step) v.push_back(r.error);
    return detail::mean(v);
  };
  sb.add("mean_relative_error_first_infogreedy", err_at(ig, 1));
  sb.add("mean_relative_error_last_infogreedy", err_at(ig, m));
  sb.add("mean_relative_error_last_random", err_at(rd, m));
  out.summary = std::move(sb.rows);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// entry points

inline ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::GaussianWhite:
    case ExperimentKind::GaussianColored:
      return detail::run_gaussian_budget_study(cfg);
    case ExperimentKind::GaussianMismatch:
      return detail::run_mismatch_study(cfg);
    case ExperimentKind::GmmCompare:
      return detail::run_gmm_study(cfg);
    case ExperimentKind::SparseCompare:
      return detail::run_sparse_study(cfg);
    case ExperimentKind::BisectionStudy:
      return detail::run_bisection_study(cfg);
    case ExperimentKind::MnistClassify:
      return detail::run_mnist_study(cfg);
    case ExperimentKind::CsvRecovery:
      return detail::run_csv_recovery(cfg);
  }
  throw ValidationError("run_experiment: unknown kind");
}

/// Writes trials_<method>.csv (schema: trial,error,measurements,power,
/// label_true,label_pred) plus summary.txt into the directory. Byte-identical
/// for identical config and seed.
inline void write_experiment_outputs(const ExperimentOutput& out, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& method : out.methods) {
    std::ofstream f(dir + "/trials_" + method + ".csv", std::ios::binary);
    if (!f) throw DataError("cannot write CSV in " + dir);
    f << "trial,error,measurements,power,label_true,label_pred\n";
    for (const auto& r : out.trials.at(method)) {
      f << r.trial << ',' << detail::format_double(r.error) << ','
        << detail::format_double(r.measurements) << ',' << detail::format_double(r.power)
        << ',';
      if (r.label_true >= 0) f << r.label_true;
      f << ',';
      if (r.label_pred >= 0) f << r.label_pred;
      f << '\n';
    }
  }
  std::ofstream s(dir + "/summary.txt", std::ios::binary);
  if (!s) throw DataError("cannot write summary in " + dir);
  for (const auto& [k, v] : out.summary) s << k << " = " << v << '\n';
}

}  // namespace infogreedy
