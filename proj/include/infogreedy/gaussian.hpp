#pragma once

// Sequential information-greedy sensing of a single Gaussian signal under
// four noise regimes: white noise added after or before ("noise folding")
// the measurement, and colored noise added after or before. Covers the
// rank-one posterior update, greedy direction selection, resource budget
// formulas and the full sensing session loop.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "infogreedy/errors.hpp"
#include "infogreedy/linalg.hpp"

namespace infogreedy {

// ---------------------------------------------------------------------------
// domain types

struct GaussianBelief {
  Vec mean;
  SymMatrix cov;

  int dim() const { return static_cast<int>(mean.size()); }

  /// Dimension consistency plus a PSD check (min eigenvalue >= -1e-10 ||cov||).
  /// Costs an eigendecomposition; meant for construction sites and tests.
  void validate() const {
    if (static_cast<int>(mean.size()) != cov.n)
      throw ValidationError("GaussianBelief: mean / covariance dimension mismatch");
    if (!all_finite(mean)) throw ValidationError("GaussianBelief: non-finite mean");
    auto eig = sym_eig(cov);
    const double lam_max = eig.values.empty() ? 0.0 : std::fabs(eig.values.front());
    for (double lam : eig.values)
      if (lam < -1e-10 * std::max(lam_max, 1e-300))
        throw ValidationError("GaussianBelief: covariance is not PSD");
  }
};

struct WhiteAfterNoise {
  double sigma = 0.0;  // std-dev of scalar noise added to each outcome
};
struct WhiteBeforeNoise {
  double sigma = 0.0;  // std-dev of per-coordinate noise folded into the signal
};
struct ColoredAfterNoise {
  SymMatrix cov;  // strictly positive definite
};
struct ColoredBeforeNoise {
  SymMatrix cov;  // strictly positive definite
};

using NoiseModel =
    std::variant<WhiteAfterNoise, WhiteBeforeNoise, ColoredAfterNoise, ColoredBeforeNoise>;

struct MeasurementRecord {
  Vec direction;     // unit vector
  double power = 0;  // resource spent: power, or repetition count for folded noise
  double outcome = 0;
  double info_gain = 0;  // nats, conditional on the belief before the step
};

enum class StopReason { InfoThreshold, MaxIterations, BudgetExhausted };

struct SessionTranscript {
  std::vector<MeasurementRecord> records;
  Vec estimate;  // final posterior mean
  StopReason stop_reason = StopReason::MaxIterations;

  double total_power() const {
    double s = 0.0;
    for (const auto& r : records) s += r.power;
    return s;
  }
  /// Unit-measurement count: repetition powers rounded and summed.
  long unit_measurements() const {
    long s = 0;
    for (const auto& r : records) s += std::lround(std::max(1.0, r.power));
    return s;
  }
};

// ---------------------------------------------------------------------------
// elementary operations

/// Conditional mutual information of one Gaussian measurement:
/// 0.5 * ln(a' cov a / noise_var + 1), in nats.
inline double mutual_info_gaussian(const Vec& a, const SymMatrix& cov, double noise_var) {
  if (!(noise_var > 0.0)) throw ValidationError("mutual_info_gaussian: noise_var must be > 0");
  const double s = cov.quadratic_form(a);
  return 0.5 * std::log1p(std::max(0.0, s) / noise_var);
}

/// Rank-one Bayes update of a Gaussian belief after observing
/// y = a'x + noise with variance eff_noise_var.
inline GaussianBelief posterior_update(const GaussianBelief& belief, const Vec& a, double y,
                                       double eff_noise_var) {
  if (static_cast<int>(a.size()) != belief.dim())
    throw ValidationError("posterior_update: direction dimension mismatch");
  Vec ca = belief.cov.multiply(a);
  const double s = dot(a, ca);
  const double denom = s + eff_noise_var;
  if (!(denom > 0.0))
    throw ValidationError("posterior_update: measurement carries no information and no noise");

  GaussianBelief out;
  out.mean = belief.mean;
  axpy((y - dot(a, belief.mean)) / denom, ca, out.mean);
  out.cov = belief.cov;
  out.cov.rank1_downdate(ca, 1.0 / denom);
  out.cov.symmetrize();
  return out;
}

// ---------------------------------------------------------------------------
// direction selection

struct DirectionChoice {
  Vec a;                    // the sensing vector to apply (norm = sqrt(power))
  double power = 1.0;       // beta; 1 per repetition for noise-folding models
  double eff_noise_var = 0;  // variance of the scalar noise on the outcome
};

namespace detail {

inline void require_strictly_pd(const EigDecomposition& eig, const char* what) {
  if (eig.values.empty() || eig.values.back() <= 0.0)
    throw ValidationError(std::string(what) + ": noise covariance must be full rank");
}

/// Leading index with ties broken toward the lowest index.
inline int argmax_index(const Vec& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace detail

/// Greedy measurement choice for the current belief. White noise after the
/// measurement gets the full power beta = (chi2_n(p)/eps^2 - 1/lambda) sigma^2
/// along the leading eigenvector; noise-folding models get a unit vector and
/// power 1 per repetition; colored noise before the measurement probes the
/// leading generalized eigenvector of Sigma_w^{-1} Sigma; colored noise after
/// the measurement uses the mode-matching direction Ux Lw^{1/2} Uw' e1.
inline DirectionChoice select_direction(const GaussianBelief& belief, const NoiseModel& noise,
                                        double eps, double p) {
  const int n = belief.dim();
  const double delta = eps * eps / chi2_quantile(p, n);

  return std::visit(
      [&](const auto& model) -> DirectionChoice {
        using M = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<M, WhiteAfterNoise> || std::is_same_v<M, WhiteBeforeNoise>) {
          auto top = leading_eigpair_lenient(belief.cov);
          if (!(top.value > delta))
            throw ValidationError("select_direction: stopping condition already met");
          DirectionChoice out;
          out.eff_noise_var = model.sigma * model.sigma;
          if constexpr (std::is_same_v<M, WhiteAfterNoise>) {
            const double s2 = model.sigma * model.sigma;
            out.power = s2 > 0.0 ? (1.0 / delta - 1.0 / top.value) * s2 : 1.0;
            out.a = top.vector;
            scale(out.a, std::sqrt(out.power));
          } else {
            out.power = 1.0;
            out.a = top.vector;
          }
          return out;
        } else if constexpr (std::is_same_v<M, ColoredBeforeNoise>) {
          auto noise_eig = sym_eig(model.cov);
          detail::require_strictly_pd(noise_eig, "select_direction");
          // whiten: B = Lw^{-1/2} Uw' Sigma Uw Lw^{-1/2}; leading eigenvector d
          // of B maps back to a = Uw Lw^{-1/2} d, the top generalized
          // eigenvector of Sigma_w^{-1} Sigma.
          const int dim = model.cov.n;
          Matrix tmp(dim, dim);
          for (int i = 0; i < dim; ++i) {
            Vec col = noise_eig.vectors.col(i);
            Vec sc = belief.cov.multiply(col);
            for (int j = 0; j < dim; ++j) tmp(j, i) = sc[j];
          }
          SymMatrix b(dim);
          for (int i = 0; i < dim; ++i) {
            Vec ui = noise_eig.vectors.col(i);
            for (int j = 0; j <= i; ++j) {
              double s = 0.0;
              for (int k = 0; k < dim; ++k) s += ui[k] * tmp(k, j);
              const double v = s / std::sqrt(noise_eig.values[i] * noise_eig.values[j]);
              b(i, j) = v;
              b(j, i) = v;
            }
          }
          auto top = leading_eigpair_lenient(b);
          const double lam_w_max = noise_eig.values.front();
          if (!(top.value > delta / lam_w_max))
            throw ValidationError("select_direction: stopping condition already met");
          Vec a(dim, 0.0);
          for (int j = 0; j < dim; ++j) {
            const double w = top.vector[j] / std::sqrt(noise_eig.values[j]);
            for (int i = 0; i < dim; ++i) a[i] += w * noise_eig.vectors(i, j);
          }
          scale(a, 1.0 / norm2(a));
          normalize_sign(a);
          DirectionChoice out;
          out.a = std::move(a);
          out.power = 1.0;
          out.eff_noise_var = model.cov.quadratic_form(out.a);
          return out;
        } else {  // ColoredAfterNoise
          auto noise_eig = sym_eig(model.cov);
          detail::require_strictly_pd(noise_eig, "select_direction");
          auto sig_eig = sym_eig(belief.cov);
          if (!(sig_eig.values.front() > delta))
            throw ValidationError("select_direction: stopping condition already met");
          const int dim = model.cov.n;
          // u = Ux Lw^{1/2} Uw' e1, normalized
          Vec b(dim);
          for (int j = 0; j < dim; ++j)
            b[j] = std::sqrt(noise_eig.values[j]) * noise_eig.vectors(0, j);
          Vec u(dim, 0.0);
          for (int j = 0; j < dim; ++j) {
            for (int i = 0; i < dim; ++i) u[i] += sig_eig.vectors(i, j) * b[j];
          }
          scale(u, 1.0 / norm2(u));
          normalize_sign(u);
          DirectionChoice out;
          out.eff_noise_var = model.cov(0, 0);  // var of the first noise coordinate
          out.power = (1.0 / delta - 1.0 / sig_eig.values.front()) * out.eff_noise_var;
          out.a = std::move(u);
          scale(out.a, std::sqrt(out.power));
          return out;
        }
      },
      noise);
}

// ---------------------------------------------------------------------------
// resource budgets

struct MeasurementBudget {
  double amount = 0.0;
  bool is_count = true;  // unit-measurement count vs total power
};

/// Resource sufficient for ||x - xhat|| <= eps with probability p, given the
/// full spectrum of the prior covariance (zeros included; the chi-squared
/// degrees of freedom equal the spectrum length). For colored noise folded
/// into the signal the spectrum must be that of Sigma_w^{-1} Sigma.
inline MeasurementBudget measurement_budget(const Vec& eigenvalues, const NoiseModel& noise,
                                            double eps, double p) {
  const int n = static_cast<int>(eigenvalues.size());
  if (n < 1) throw ValidationError("measurement_budget: empty spectrum");
  for (double lam : eigenvalues)
    if (lam < 0.0) throw ValidationError("measurement_budget: negative eigenvalue");
  const double delta = eps * eps / chi2_quantile(p, n);

  return std::visit(
      [&](const auto& model) -> MeasurementBudget {
        using M = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<M, WhiteBeforeNoise>) {
          const double s2 = model.sigma * model.sigma;
          MeasurementBudget out{0.0, true};
          if (s2 == 0.0) {
            for (double lam : eigenvalues)
              if (lam > delta) out.amount += 1.0;
            return out;
          }
          for (double lam : eigenvalues) {
            if (lam == 0.0) continue;
            const double need = std::ceil((1.0 / delta - 1.0 / lam) * s2);
            if (need > 0.0) out.amount += need;
          }
          return out;
        } else if constexpr (std::is_same_v<M, WhiteAfterNoise>) {
          const double s2 = model.sigma * model.sigma;
          if (s2 == 0.0) {
            MeasurementBudget out{0.0, true};
            for (double lam : eigenvalues)
              if (lam > delta) out.amount += 1.0;
            return out;
          }
          MeasurementBudget out{0.0, false};
          for (double lam : eigenvalues) {
            if (lam == 0.0) continue;
            const double need = (1.0 / delta - 1.0 / lam) * s2;
            if (need > 0.0) out.amount += need;
          }
          return out;
        } else if constexpr (std::is_same_v<M, ColoredBeforeNoise>) {
          auto top = leading_eigpair(model.cov);
          if (!(top.value > 0.0))
            throw ValidationError("measurement_budget: noise covariance must be full rank");
          MeasurementBudget out{0.0, true};
          for (double lam : eigenvalues) {
            if (lam == 0.0) continue;
            const double need = std::ceil(top.value / delta - 1.0 / lam);
            if (need > 0.0) out.amount += need;
          }
          return out;
        } else {
          throw ValidationError(
              "measurement_budget: no budget formula for colored noise added after measurement");
        }
      },
      noise);
}

// ---------------------------------------------------------------------------
// sensing session

/// Where the ground-truth signal comes from: a fixed vector or a sampler.
class SignalSource {
 public:
  static SignalSource fixed(Vec x) {
    SignalSource s;
    s.fixed_ = std::move(x);
    return s;
  }
  static SignalSource sampler(std::function<Vec(Rng&)> fn) {
    SignalSource s;
    s.sampler_ = std::move(fn);
    return s;
  }
  Vec draw(Rng& rng) const { return sampler_ ? sampler_(rng) : fixed_; }

 private:
  Vec fixed_;
  std::function<Vec(Rng&)> sampler_;
};

struct SessionOptions {
  double eps = 0.1;
  double p = 0.95;
  int max_iter = 1000;
  std::optional<long> max_measurements;  // cap on unit measurements
  std::optional<double> max_power;       // cap on cumulative power
  bool unit_power = false;  // force beta = 1 (used by fixed-measurement studies)
};

namespace detail {

inline double simulate_outcome(const Vec& a, const Vec& x, double outcome_noise_var, Rng& rng) {
  const double clean = dot(a, x);
  if (outcome_noise_var <= 0.0) return clean;
  return clean + std::sqrt(outcome_noise_var) * rng.normal();
}

inline double info_gain_nats(double snr) {  // snr = a' cov a / noise_var
  return snr == std::numeric_limits<double>::infinity()
             ? std::numeric_limits<double>::infinity()
             : 0.5 * std::log1p(snr);
}

/// Session over a maintained eigendecomposition: measuring along an exact
/// eigenvector changes only that eigenvalue (to lambda v / (beta lambda + v)),
/// so the basis stays valid for the whole run.
inline SessionTranscript run_white_session(const Vec& x, const GaussianBelief& prior,
                                           bool noise_after, double sigma,
                                           const SessionOptions& opt, Rng& rng) {
  auto eig = sym_eig(prior.cov);
  Vec lambda = eig.values;
  for (double& l : lambda) l = std::max(l, 0.0);
  Vec mean = prior.mean;
  const double s2 = sigma * sigma;
  const double delta = opt.eps * opt.eps / chi2_quantile(opt.p, prior.dim());

  SessionTranscript out;
  long used_units = 0;
  double used_power = 0.0;
  out.stop_reason = StopReason::MaxIterations;
  for (int it = 0; it < opt.max_iter; ++it) {
    const int j = argmax_index(lambda);
    if (lambda[j] <= delta) {
      out.stop_reason = StopReason::InfoThreshold;
      break;
    }
    double beta = 1.0;
    if (noise_after && !opt.unit_power && s2 > 0.0)
      beta = (1.0 / delta - 1.0 / lambda[j]) * s2;
    if (opt.max_measurements && used_units + 1 > *opt.max_measurements) {
      out.stop_reason = StopReason::BudgetExhausted;
      break;
    }
    if (opt.max_power && used_power + beta > *opt.max_power * (1.0 + 1e-12)) {
      out.stop_reason = StopReason::BudgetExhausted;
      break;
    }

    Vec u = eig.vectors.col(j);
    // outcome: a = sqrt(beta) u against x, plus noise; folded noise enters
    // through a'w with unit ||a||, so both cases see variance s2 here.
    const double root_beta = std::sqrt(beta);
    double y = dot(u, x) * root_beta;
    if (s2 > 0.0) y += sigma * rng.normal();

    const double lam = lambda[j];
    const double denom = beta * lam + s2;
    if (denom > 0.0) {
      const double coef = root_beta * lam * (y - root_beta * dot(u, mean)) / denom;
      axpy(coef, u, mean);
      lambda[j] = s2 > 0.0 ? lam * s2 / denom : 0.0;
    }

    MeasurementRecord rec;
    rec.direction = std::move(u);
    rec.power = beta;
    rec.outcome = y;
    rec.info_gain = info_gain_nats(s2 > 0.0 ? beta * lam / s2
                                            : std::numeric_limits<double>::infinity());
    out.records.push_back(std::move(rec));
    used_units += 1;
    used_power += beta;
  }
  out.estimate = std::move(mean);
  return out;
}

inline SessionTranscript run_colored_before_session(const Vec& x, const GaussianBelief& prior,
                                                    const SymMatrix& noise_cov,
                                                    const SessionOptions& opt, Rng& rng) {
  const int n = prior.dim();
  auto noise_eig = sym_eig(noise_cov);
  require_strictly_pd(noise_eig, "run_session");
  const double noise_norm = noise_eig.values.front();

  // whitened signal covariance B = Lw^{-1/2} Uw' Sigma Uw Lw^{-1/2}
  Matrix su(n, n);
  for (int j = 0; j < n; ++j) {
    Vec col = prior.cov.multiply(noise_eig.vectors.col(j));
    for (int i = 0; i < n; ++i) su(i, j) = col[i];
  }
  SymMatrix b(n);
  for (int i = 0; i < n; ++i) {
    Vec ui = noise_eig.vectors.col(i);
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += ui[k] * su(k, j);
      const double v = s / std::sqrt(noise_eig.values[i] * noise_eig.values[j]);
      b(i, j) = v;
      b(j, i) = v;
    }
  }
  auto gen = sym_eig(b);  // generalized eigenpairs of Sigma_w^{-1} Sigma
  Vec lambda = gen.values;
  for (double& l : lambda) l = std::max(l, 0.0);

  // measurement vectors: unit-normalized Uw Lw^{-1/2} v_j, computed lazily
  std::vector<Vec> direction(n);
  std::vector<Vec> noise_times_dir(n);
  Vec dir_noise_var(n, 0.0);
  auto prepare = [&](int j) {
    if (!direction[j].empty()) return;
    Vec a(n, 0.0);
    for (int k = 0; k < n; ++k) {
      const double w = gen.vectors(k, j) / std::sqrt(noise_eig.values[k]);
      for (int i = 0; i < n; ++i) a[i] += w * noise_eig.vectors(i, k);
    }
    scale(a, 1.0 / norm2(a));
    normalize_sign(a);
    noise_times_dir[j] = noise_cov.multiply(a);
    dir_noise_var[j] = dot(a, noise_times_dir[j]);
    direction[j] = std::move(a);
  };

  Vec mean = prior.mean;
  const double delta = opt.eps * opt.eps / chi2_quantile(opt.p, n);
  const double gen_target = delta / noise_norm;

  SessionTranscript out;
  out.stop_reason = StopReason::MaxIterations;
  long used_units = 0;
  for (int it = 0; it < opt.max_iter; ++it) {
    const int j = argmax_index(lambda);
    if (lambda[j] <= gen_target) {
      out.stop_reason = StopReason::InfoThreshold;
      break;
    }
    long reps = static_cast<long>(std::ceil(1.0 / gen_target - 1.0 / lambda[j]));
    reps = std::max(reps, 1L);
    if (opt.unit_power) reps = 1;
    if (opt.max_measurements) {
      const long room = *opt.max_measurements - used_units;
      if (room <= 0) {
        out.stop_reason = StopReason::BudgetExhausted;
        break;
      }
      reps = std::min(reps, room);
    }
    prepare(j);
    const Vec& a = direction[j];
    const double v = dir_noise_var[j];
    const double avg_var = v / static_cast<double>(reps);
    const double y = simulate_outcome(a, x, avg_var, rng);

    // Sigma a = lambda_j Sigma_w a for a generalized eigenvector
    const double lam = lambda[j];
    const double denom = lam * v + avg_var;
    const double coef = lam * (y - dot(a, mean)) / denom;
    axpy(coef, noise_times_dir[j], mean);
    lambda[j] = lam / (static_cast<double>(reps) * lam + 1.0);

    MeasurementRecord rec;
    rec.direction = a;
    rec.power = static_cast<double>(reps);
    rec.outcome = y;
    rec.info_gain = info_gain_nats(lam * v / avg_var);
    out.records.push_back(std::move(rec));
    used_units += reps;
  }
  out.estimate = std::move(mean);
  return out;
}

inline SessionTranscript run_colored_after_session(const Vec& x, const GaussianBelief& prior,
                                                   const ColoredAfterNoise& noise,
                                                   const SessionOptions& opt, Rng& rng) {
  GaussianBelief belief = prior;
  const double delta = opt.eps * opt.eps / chi2_quantile(opt.p, prior.dim());
  SessionTranscript out;
  out.stop_reason = StopReason::MaxIterations;
  double used_power = 0.0;
  for (int it = 0; it < opt.max_iter; ++it) {
    if (leading_eigpair_lenient(belief.cov).value <= delta) {
      out.stop_reason = StopReason::InfoThreshold;
      break;
    }
    NoiseModel nm = noise;
    DirectionChoice choice = select_direction(belief, nm, opt.eps, opt.p);
    if (opt.unit_power) {
      const double nrm = norm2(choice.a);
      scale(choice.a, 1.0 / nrm);
      choice.power = 1.0;
    }
    if (opt.max_power && used_power + choice.power > *opt.max_power * (1.0 + 1e-12)) {
      out.stop_reason = StopReason::BudgetExhausted;
      break;
    }
    const double y = simulate_outcome(choice.a, x, choice.eff_noise_var, rng);
    const double snr = belief.cov.quadratic_form(choice.a) / choice.eff_noise_var;
    belief = posterior_update(belief, choice.a, y, choice.eff_noise_var);

    MeasurementRecord rec;
    rec.direction = choice.a;
    const double nrm = norm2(rec.direction);
    if (nrm > 0.0) scale(rec.direction, 1.0 / nrm);
    rec.power = choice.power;
    rec.outcome = y;
    rec.info_gain = info_gain_nats(snr);
    out.records.push_back(std::move(rec));
    used_power += choice.power;
  }
  out.estimate = belief.mean;
  return out;
}

}  // namespace detail

/// Full sensing session: repeatedly select a direction, simulate the outcome
/// against the true signal, update the posterior; stops when the largest
/// belief eigenvalue drops to eps^2 / chi2_n(p), on max_iter, or when a
/// measurement/power cap would be exceeded.
inline SessionTranscript run_session(const SignalSource& source, const GaussianBelief& prior,
                                     const NoiseModel& noise, const SessionOptions& opt,
                                     Rng& rng) {
  if (opt.max_iter < 1) throw ValidationError("run_session: max_iter must be >= 1");
  const Vec x = source.draw(rng);
  if (static_cast<int>(x.size()) != prior.dim())
    throw ValidationError("run_session: signal dimension mismatch");

  return std::visit(
      [&](const auto& model) -> SessionTranscript {
        using M = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<M, WhiteAfterNoise>)
          return detail::run_white_session(x, prior, true, model.sigma, opt, rng);
        else if constexpr (std::is_same_v<M, WhiteBeforeNoise>)
          return detail::run_white_session(x, prior, false, model.sigma, opt, rng);
        else if constexpr (std::is_same_v<M, ColoredBeforeNoise>)
          return detail::run_colored_before_session(x, prior, model.cov, opt, rng);
        else
          return detail::run_colored_after_session(x, prior, model, opt, rng);
      },
      noise);
}

}  // namespace infogreedy
