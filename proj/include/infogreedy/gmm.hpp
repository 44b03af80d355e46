#pragma once

// Sensing of Gaussian-mixture signals: posterior updates over all components,
// the greedy highest-weight heuristic, Monte-Carlo mutual-information gradient
// ascent for the measurement direction, a closed-form entropy approximation
// used as the ascent's stopping statistic, the high-noise shortcut, and
// classification by posterior weight.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "infogreedy/errors.hpp"
#include "infogreedy/gaussian.hpp"
#include "infogreedy/linalg.hpp"

namespace infogreedy {

// ---------------------------------------------------------------------------
// domain types

struct GmmComponent {
  double weight = 0.0;
  Vec mean;
  SymMatrix cov;
};

struct GmmBelief {
  std::vector<GmmComponent> components;
  std::vector<Vec> history_directions;  // rows of D, oldest first
  Vec history_outcomes;

  int dim() const { return components.empty() ? 0 : static_cast<int>(components[0].mean.size()); }
  int size() const { return static_cast<int>(components.size()); }

  void validate() const {
    if (components.empty()) throw ValidationError("GmmBelief: no components");
    const int n = dim();
    double total = 0.0;
    for (const auto& c : components) {
      if (c.weight < 0.0) throw ValidationError("GmmBelief: negative weight");
      if (static_cast<int>(c.mean.size()) != n || c.cov.n != n)
        throw ValidationError("GmmBelief: inconsistent dimensions");
      total += c.weight;
    }
    if (std::fabs(total - 1.0) > 1e-10)
      throw ValidationError("GmmBelief: weights must sum to 1");
    if (history_directions.size() != history_outcomes.size())
      throw ValidationError("GmmBelief: history length mismatch");
  }
};

struct GradientAscentConfig {
  double step_size = 0.2;
  double tolerance = 0.01;  // stop when the conditional-MI gain drops below this
  int mc_samples = 300;
  int max_steps = 60;
  bool entropy_stop = true;  // false: skip the entropy formula and use the
                             // high-noise surrogate (cheaper at large n)

  void validate() const {
    if (!(step_size > 0.0) || !(tolerance > 0.0) || mc_samples < 1 || max_steps < 1)
      throw ValidationError("GradientAscentConfig: all fields must be positive");
  }
};

struct Classification {
  int component = 0;
  Vec estimate;
};

namespace detail {

inline int argmax_weight(const GmmBelief& belief) {
  int best = 0;
  for (int c = 1; c < belief.size(); ++c)
    if (belief.components[c].weight > belief.components[best].weight) best = c;
  return best;
}

/// Per-component scalars of a prospective measurement (a, sigma):
/// predictive mean m = a'mu, predictive variance s = a'Sigma a + sigma^2,
/// and Sigma a.
struct StepScalars {
  std::vector<double> pred_mean;
  std::vector<double> pred_var;
  std::vector<Vec> cov_a;
};

inline StepScalars step_scalars(const GmmBelief& belief, const Vec& a, double sigma) {
  StepScalars s;
  const int count = belief.size();
  s.pred_mean.resize(count);
  s.pred_var.resize(count);
  s.cov_a.resize(count);
  for (int c = 0; c < count; ++c) {
    s.cov_a[c] = belief.components[c].cov.multiply(a);
    s.pred_mean[c] = dot(a, belief.components[c].mean);
    s.pred_var[c] = std::max(0.0, dot(a, s.cov_a[c])) + sigma * sigma;
  }
  return s;
}

/// Posterior weights after observing y, computed in log space.
inline std::vector<double> one_step_weights(const GmmBelief& belief, const StepScalars& s,
                                            double y) {
  const int count = belief.size();
  std::vector<double> logw(count);
  double top = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < count; ++c) {
    const double w = belief.components[c].weight;
    logw[c] = w > 0.0 ? std::log(w) + log_normal_density(y, s.pred_mean[c], s.pred_var[c])
                      : -std::numeric_limits<double>::infinity();
    top = std::max(top, logw[c]);
  }
  if (!std::isfinite(top)) {
    std::ostringstream msg;
    msg << "gmm posterior: all component weights underflowed; log-likelihoods:";
    for (int c = 0; c < count; ++c) msg << ' ' << logw[c];
    throw NumericalError(msg.str());
  }
  std::vector<double> w(count);
  double total = 0.0;
  for (int c = 0; c < count; ++c) {
    w[c] = std::exp(logw[c] - top);
    total += w[c];
  }
  for (double& x : w) x /= total;
  return w;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// posterior update

/// One-step Bayes update of the mixture after measuring y = a'x + noise.
/// Means and covariances get the Gaussian rank-one update per component; the
/// weights are reweighted by the one-step predictive density (equivalent to
/// the full-history likelihood by the Gaussian chain rule) and renormalized.
inline GmmBelief gmm_posterior_update(const GmmBelief& belief, const Vec& a, double y,
                                      double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("gmm_posterior_update: sigma must be > 0");
  if (static_cast<int>(a.size()) != belief.dim())
    throw ValidationError("gmm_posterior_update: direction dimension mismatch");

  auto s = detail::step_scalars(belief, a, sigma);
  auto weights = detail::one_step_weights(belief, s, y);

  GmmBelief out;
  out.components.resize(belief.size());
  for (int c = 0; c < belief.size(); ++c) {
    const auto& comp = belief.components[c];
    auto& next = out.components[c];
    next.weight = weights[c];
    next.mean = comp.mean;
    axpy((y - s.pred_mean[c]) / s.pred_var[c], s.cov_a[c], next.mean);
    next.cov = comp.cov;
    next.cov.rank1_downdate(s.cov_a[c], 1.0 / s.pred_var[c]);
    next.cov.symmetrize();
  }
  out.history_directions = belief.history_directions;
  out.history_directions.push_back(a);
  out.history_outcomes = belief.history_outcomes;
  out.history_outcomes.push_back(y);
  return out;
}

/// Reference batch form of the weight update: component likelihoods of the
/// whole outcome history, N(y_hist; D mu_c, D Sigma_c D' + sigma^2 I), against
/// the *initial* parameters. Regression target for the incremental update.
inline std::vector<double> gmm_weights_from_history(const GmmBelief& initial,
                                                    const std::vector<Vec>& directions,
                                                    const Vec& outcomes, double sigma) {
  const int m = static_cast<int>(directions.size());
  const int count = initial.size();
  std::vector<double> logw(count);
  for (int c = 0; c < count; ++c) {
    const auto& comp = initial.components[c];
    Vec mean(m);
    SymMatrix cov(m);
    for (int i = 0; i < m; ++i) {
      mean[i] = dot(directions[i], comp.mean);
      Vec ci = comp.cov.multiply(directions[i]);
      for (int j = 0; j <= i; ++j) {
        const double v = dot(directions[j], ci);
        cov(i, j) = v;
        cov(j, i) = v;
      }
      cov(i, i) += sigma * sigma;
    }
    logw[c] = comp.weight > 0.0 ? std::log(comp.weight) + log_mvn_density(outcomes, mean, cov)
                                : -std::numeric_limits<double>::infinity();
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  std::vector<double> w(count);
  double total = 0.0;
  for (int c = 0; c < count; ++c) {
    w[c] = std::exp(logw[c] - top);
    total += w[c];
  }
  for (double& x : w) x /= total;
  return w;
}

// ---------------------------------------------------------------------------
// direction heuristics

/// Leading eigenvector of the covariance of the highest-weight component
/// (ties toward the lowest index).
inline Vec greedy_heuristic_direction(const GmmBelief& belief) {
  belief.validate();
  const int z = detail::argmax_weight(belief);
  auto top = leading_eigpair_lenient(belief.components[z].cov);
  normalize_sign(top.vector);
  return top.vector;
}

/// Leading eigenvector of the weight-averaged covariance; the measurement
/// that maximizes mutual information when the noise dominates every
/// component's variance.
inline Vec high_noise_direction(const GmmBelief& belief) {
  belief.validate();
  const int n = belief.dim();
  SymMatrix avg(n);
  for (const auto& comp : belief.components) avg.add_scaled(comp.cov, comp.weight);
  auto top = leading_eigpair_lenient(avg);
  normalize_sign(top.vector);
  return top.vector;
}

/// Highest-weight component index and its posterior mean.
inline Classification classify(const GmmBelief& belief) {
  belief.validate();
  const int c = detail::argmax_weight(belief);
  return {c, belief.components[c].mean};
}

// ---------------------------------------------------------------------------
// MMSE integrand and the mutual-information gradient

/// g(y): posterior error covariance of the signal given the prospective
/// outcome y of measuring along a. Mixture posterior after appending (a, y):
/// sum_c pi~_c { Sigma~_c + (mu~_c - mubar)(mu~_c - mubar)' }.
inline SymMatrix mmse_integrand_g(const GmmBelief& belief, const Vec& a, double y,
                                  double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("mmse_integrand_g: sigma must be > 0");
  const int n = belief.dim();
  const int count = belief.size();
  auto s = detail::step_scalars(belief, a, sigma);
  auto w = detail::one_step_weights(belief, s, y);

  std::vector<Vec> post_mean(count);
  Vec mean_bar(n, 0.0);
  for (int c = 0; c < count; ++c) {
    post_mean[c] = belief.components[c].mean;
    axpy((y - s.pred_mean[c]) / s.pred_var[c], s.cov_a[c], post_mean[c]);
    axpy(w[c], post_mean[c], mean_bar);
  }

  SymMatrix g(n);
  for (int c = 0; c < count; ++c) {
    if (w[c] == 0.0) continue;
    g.add_scaled(belief.components[c].cov, w[c]);
    g.rank1_downdate(s.cov_a[c], w[c] / s.pred_var[c]);
    Vec d = post_mean[c];
    axpy(-1.0, mean_bar, d);
    g.rank1_downdate(d, -w[c]);  // adds w[c] * d d'
  }
  g.symmetrize();
  return g;
}

/// Monte-Carlo estimate of the mutual-information gradient E' a / sigma^2.
/// Each sample draws a component from the current weights (one uniform) and
/// an outcome from that component's scalar predictive N(a'mu_c, a'Sigma_c a
/// + sigma^2) (one normal), then averages g(y)' a in a form that only needs
/// O(C n) work per sample. Deterministic given the generator state.
inline Vec mi_gradient(const GmmBelief& belief, const Vec& a, double sigma, int samples,
                       Rng& rng) {
  if (!(sigma > 0.0)) throw ValidationError("mi_gradient: sigma must be > 0");
  if (samples < 1) throw ValidationError("mi_gradient: need at least one sample");
  const int n = belief.dim();
  const int count = belief.size();
  auto s = detail::step_scalars(belief, a, sigma);
  const double s2 = sigma * sigma;

  // Sigma~_c a collapses to (sigma^2 / s_c) Sigma_c a
  std::vector<Vec> gain(count);         // Sigma_c a / s_c
  std::vector<double> cum(count, 0.0);  // weight CDF for component draws
  double acc = 0.0;
  for (int c = 0; c < count; ++c) {
    gain[c] = s.cov_a[c];
    scale(gain[c], 1.0 / s.pred_var[c]);
    acc += belief.components[c].weight;
    cum[c] = acc;
  }

  Vec grad(n, 0.0);
  Vec diff(n);
  for (int t = 0; t < samples; ++t) {
    const double u = rng.uniform01();
    int c0 = 0;
    while (c0 + 1 < count && u > cum[c0]) ++c0;
    const double y = s.pred_mean[c0] + std::sqrt(s.pred_var[c0]) * rng.normal();

    auto w = detail::one_step_weights(belief, s, y);
    Vec mean_bar(n, 0.0);
    for (int c = 0; c < count; ++c) {
      if (w[c] == 0.0) continue;
      for (int i = 0; i < n; ++i)
        mean_bar[i] += w[c] * (belief.components[c].mean[i] +
                               gain[c][i] * (y - s.pred_mean[c]));
    }
    for (int c = 0; c < count; ++c) {
      if (w[c] == 0.0) continue;
      const double shift = y - s.pred_mean[c];
      for (int i = 0; i < n; ++i)
        diff[i] = belief.components[c].mean[i] + gain[c][i] * shift - mean_bar[i];
      const double da = dot(diff, a);
      const double w_sig = w[c] * s2 / s.pred_var[c];
      for (int i = 0; i < n; ++i)
        grad[i] += w_sig * s.cov_a[c][i] + w[c] * da * diff[i];
    }
  }
  scale(grad, 1.0 / (static_cast<double>(samples) * s2));
  return grad;
}

// ---------------------------------------------------------------------------
// entropy approximation and conditional mutual information

namespace detail {

/// logdet of the retained spectrum: eigenvalues above 1e-10 * lambda_max,
/// each ridge-regularized. rank = number retained.
struct LogDet {
  double value = 0.0;
  int rank = 0;
};

inline LogDet component_logdet(const SymMatrix& cov, double reg) {
  auto eig = sym_eig(cov);
  const double lam_max = eig.values.empty() ? 0.0 : std::max(0.0, eig.values.front());
  LogDet out;
  for (double lam : eig.values) {
    if (lam <= 1e-10 * lam_max || lam <= 0.0) continue;
    out.value += std::log(lam + reg);
    out.rank += 1;
  }
  return out;
}

/// ln(exp(L) - (C-1)) evaluated stably; the argument must stay positive.
inline double entropy_term(double big_l, int count, int component) {
  if (count == 1) return big_l;
  const double ln_cm1 = std::log(static_cast<double>(count - 1));
  if (!(big_l > ln_cm1)) {
    std::ostringstream msg;
    msg << "gmm entropy approximation: log argument <= 0 for component " << component
        << " (components overlap or are too degenerate)";
    throw NumericalError(msg.str());
  }
  return big_l + std::log1p(-std::exp(ln_cm1 - big_l));
}

constexpr double kLn2PiE = 2.8378770664093453;  // ln(2 pi e)

/// Conditional-MI statistic for prospective directions. The "after" entropy
/// holds the weights at their current values (their expectation under the
/// predictive outcome) and moves only the covariance determinants, which
/// shrink by exactly sigma^2 / (a'Sigma_c a + sigma^2) per component; so the
/// statistic is deterministic in a and costs O(C n^2) per evaluation once the
/// spectra are cached. Falls back to the high-noise expression
/// 0.5 sum_c pi_c ln(1 + a'Sigma_c a / sigma^2) when the entropy
/// approximation's log argument is not positive.
class MiEvaluator {
 public:
  MiEvaluator(const GmmBelief& belief, double sigma, double reg, bool try_entropy = true)
      : belief_(&belief), sigma2_(sigma * sigma) {
    const int count = belief.size();
    const int n = belief.dim();
    formula_ok_ = try_entropy;
    if (!formula_ok_) return;
    logdet_.resize(count);
    double h = 0.0;
    for (int c = 0; c < count; ++c) {
      logdet_[c] = component_logdet(belief.components[c].cov, reg).value;
      const double w = belief.components[c].weight;
      if (w <= 0.0) continue;
      try {
        h += w * entropy_term(0.5 * n * kLn2PiE + 0.5 * logdet_[c] - std::log(w), count, c);
      } catch (const NumericalError&) {
        formula_ok_ = false;
      }
    }
    h_before_ = h;
  }

  bool uses_entropy_formula() const { return formula_ok_; }

  double operator()(const Vec& a) const {
    const auto& belief = *belief_;
    const int count = belief.size();
    const int n = belief.dim();
    if (!formula_ok_) {
      double mi = 0.0;
      for (int c = 0; c < count; ++c) {
        const double w = belief.components[c].weight;
        if (w <= 0.0) continue;
        mi += 0.5 * w * std::log1p(std::max(0.0, belief.components[c].cov.quadratic_form(a)) /
                                   sigma2_);
      }
      return mi;
    }
    double h_after = 0.0;
    for (int c = 0; c < count; ++c) {
      const double w = belief.components[c].weight;
      if (w <= 0.0) continue;
      const double s = std::max(0.0, belief.components[c].cov.quadratic_form(a)) + sigma2_;
      const double logdet_after = logdet_[c] + std::log(sigma2_ / s);
      h_after +=
          w * entropy_term(0.5 * n * kLn2PiE + 0.5 * logdet_after - std::log(w), count, c);
    }
    return h_before_ - h_after;
  }

 private:
  const GmmBelief* belief_;
  double sigma2_;
  double h_before_ = 0.0;
  std::vector<double> logdet_;
  bool formula_ok_ = true;
};

}  // namespace detail

/// Mixture entropy approximation, in nats:
/// sum_c pi_c ln((2 pi e)^{n/2} |Sigma_c|^{1/2} / pi_c - (C-1)),
/// with rank-deficient covariances handled through the ridge-regularized
/// pseudo-determinant of the retained spectrum. Good when components do not
/// overlap much; degrades (and eventually throws) as they merge.
inline double gmm_entropy_approx(const GmmBelief& belief, double reg = 1e-8) {
  belief.validate();
  const int count = belief.size();
  const int n = belief.dim();
  double h = 0.0;
  for (int c = 0; c < count; ++c) {
    const double w = belief.components[c].weight;
    if (w <= 0.0) continue;
    const double logdet = detail::component_logdet(belief.components[c].cov, reg).value;
    h += w * detail::entropy_term(0.5 * n * detail::kLn2PiE + 0.5 * logdet - std::log(w),
                                  count, c);
  }
  return h;
}

/// Entropy-approximation difference for one prospective measurement along a;
/// the stopping statistic of the gradient ascent. Throws when the entropy
/// approximation is invalid for the current belief.
inline double conditional_mi_estimate(const GmmBelief& belief, const Vec& a, double sigma,
                                      double reg = 1e-8) {
  if (!(sigma > 0.0)) throw ValidationError("conditional_mi_estimate: sigma must be > 0");
  belief.validate();
  detail::MiEvaluator eval(belief, sigma, reg);
  if (!eval.uses_entropy_formula())
    gmm_entropy_approx(belief, reg);  // surface the component-naming error
  return eval(a);
}

// ---------------------------------------------------------------------------
// gradient ascent over the unit sphere

/// Mutual-information gradient ascent for the next measurement direction.
/// Warm-starts at the greedy heuristic unless given an initial direction,
/// renormalizes after every step, and only keeps steps that improve the
/// conditional-MI statistic, so the result is never worse than the start.
inline Vec gradient_ascent_direction(const GmmBelief& belief, double sigma,
                                     const GradientAscentConfig& cfg, Rng& rng,
                                     std::optional<Vec> init = std::nullopt) {
  cfg.validate();
  belief.validate();
  if (!(sigma > 0.0)) throw ValidationError("gradient_ascent_direction: sigma must be > 0");

  Vec a = init ? std::move(*init) : greedy_heuristic_direction(belief);
  const double nrm = norm2(a);
  if (nrm <= 0.0) throw ValidationError("gradient_ascent_direction: zero initial direction");
  scale(a, 1.0 / nrm);

  detail::MiEvaluator mi(belief, sigma, 1e-8, cfg.entropy_stop);
  double current = mi(a);
  for (int step = 0; step < cfg.max_steps; ++step) {
    Vec g = mi_gradient(belief, a, sigma, cfg.mc_samples, rng);
    Vec trial = a;
    axpy(cfg.step_size, g, trial);
    const double tn = norm2(trial);
    if (!(tn > 0.0) || !all_finite(trial)) {
      std::ostringstream msg;
      msg << "gradient_ascent_direction: non-finite iterate at step " << step;
      throw NumericalError(msg.str());
    }
    scale(trial, 1.0 / tn);
    const double value = mi(trial);
    if (!(value - current > cfg.tolerance)) break;
    a = std::move(trial);
    current = value;
  }
  normalize_sign(a);
  return a;
}

// ---------------------------------------------------------------------------
// sampling helper for experiments

/// Draws signals from a fixed mixture; component samplers are factored once.
class GmmSampler {
 public:
  explicit GmmSampler(const GmmBelief& belief) {
    belief.validate();
    double acc = 0.0;
    for (const auto& comp : belief.components) {
      samplers_.emplace_back(comp.mean, comp.cov);
      acc += comp.weight;
      cum_.push_back(acc);
    }
  }

  std::pair<int, Vec> sample(Rng& rng) const {
    const double u = rng.uniform01();
    int c = 0;
    while (c + 1 < static_cast<int>(cum_.size()) && u > cum_[c]) ++c;
    return {c, samplers_[c].sample(rng)};
  }

 private:
  std::vector<MvnSampler> samplers_;
  std::vector<double> cum_;
};

/// Plug-in Monte-Carlo entropy estimate, -mean(ln p(x)) over mixture draws.
/// Validation companion to the closed-form approximation (never used as a
/// stopping rule); components must be strictly positive definite.
inline double gmm_entropy_mc(const GmmBelief& belief, int samples, Rng& rng) {
  belief.validate();
  if (samples < 1) throw ValidationError("gmm_entropy_mc: need at least one sample");
  GmmSampler sampler(belief);
  const int count = belief.size();
  double acc = 0.0;
  std::vector<double> logw(count);
  for (int t = 0; t < samples; ++t) {
    Vec x = sampler.sample(rng).second;
    double top = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < count; ++c) {
      const auto& comp = belief.components[c];
      logw[c] = comp.weight > 0.0
                    ? std::log(comp.weight) + log_mvn_density(x, comp.mean, comp.cov)
                    : -std::numeric_limits<double>::infinity();
      top = std::max(top, logw[c]);
    }
    double sum = 0.0;
    for (int c = 0; c < count; ++c) sum += std::exp(logw[c] - top);
    acc += top + std::log(sum);
  }
  return -acc / samples;
}

}  // namespace infogreedy
