#pragma once

// Dense symmetric linear algebra, chi-squared quantiles and seeded sampling
// shared by the sensing modules. Everything here is double precision and
// desk scale (n up to a few thousand); no sparse storage.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "infogreedy/errors.hpp"

namespace infogreedy {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// small vector helpers

inline double dot(const Vec& x, const Vec& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

inline void axpy(double alpha, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(Vec& x, double alpha) {
  for (double& v : x) v *= alpha;
}

inline Vec unit_vector(int n, int i) {
  Vec e(n, 0.0);
  e[i] = 1.0;
  return e;
}

inline bool all_finite(const Vec& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

/// Flip sign so the first component with magnitude above 1e-12 * max|v| is
/// positive. Fixes the eigenvector sign ambiguity deterministically.
inline void normalize_sign(Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  if (m == 0.0) return;
  for (double x : v) {
    if (std::fabs(x) > 1e-12 * m) {
      if (x < 0.0)
        for (double& y : v) y = -y;
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// dense matrices

/// Row-major dense matrix, mostly used for eigenvector columns.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  Vec col(int j) const {
    Vec v(rows);
    for (int i = 0; i < rows; ++i) v[i] = (*this)(i, j);
    return v;
  }

  Vec multiply(const Vec& x) const {
    Vec y(rows, 0.0);
    for (int i = 0; i < rows; ++i) {
      const double* row = &data[static_cast<std::size_t>(i) * cols];
      double s = 0.0;
      for (int j = 0; j < cols; ++j) s += row[j] * x[j];
      y[i] = s;
    }
    return y;
  }

  Vec multiply_transposed(const Vec& x) const {
    Vec y(cols, 0.0);
    for (int i = 0; i < rows; ++i) {
      const double* row = &data[static_cast<std::size_t>(i) * cols];
      for (int j = 0; j < cols; ++j) y[j] += row[j] * x[i];
    }
    return y;
  }
};

/// Dense symmetric matrix. Construction through from_dense() checks the
/// symmetry invariant (1e-12 relative) and finiteness; the cheaper
/// unchecked() path is for matrices symmetric by construction.
struct SymMatrix {
  int n = 0;
  std::vector<double> a;  // row-major n*n

  SymMatrix() = default;
  explicit SymMatrix(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

  static SymMatrix identity(int n) {
    SymMatrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static SymMatrix diagonal(const Vec& d) {
    SymMatrix m(static_cast<int>(d.size()));
    for (int i = 0; i < m.n; ++i) m(i, i) = d[i];
    return m;
  }

  /// v v' scaled by alpha.
  static SymMatrix outer(const Vec& v, double alpha = 1.0) {
    SymMatrix m(static_cast<int>(v.size()));
    for (int i = 0; i < m.n; ++i)
      for (int j = 0; j < m.n; ++j) m(i, j) = alpha * v[i] * v[j];
    return m;
  }

  static SymMatrix from_dense(int n, const std::vector<double>& entries) {
    if (static_cast<std::size_t>(n) * n != entries.size())
      throw ValidationError("SymMatrix: entry count does not match dimension");
    SymMatrix m(n);
    m.a = entries;
    double scal = 0.0;
    for (double v : entries) {
      if (!std::isfinite(v)) throw ValidationError("SymMatrix: non-finite entry");
      scal = std::max(scal, std::fabs(v));
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (std::fabs(m(i, j) - m(j, i)) > 1e-12 * std::max(1.0, scal))
          throw ValidationError("SymMatrix: input is not symmetric");
    m.symmetrize();
    return m;
  }

  void symmetrize() {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double v = 0.5 * ((*this)(i, j) + (*this)(j, i));
        (*this)(i, j) = v;
        (*this)(j, i) = v;
      }
  }

  Vec multiply(const Vec& x) const {
    Vec y(n, 0.0);
    for (int i = 0; i < n; ++i) {
      const double* row = &a[static_cast<std::size_t>(i) * n];
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += row[j] * x[j];
      y[i] = s;
    }
    return y;
  }

  double quadratic_form(const Vec& x) const { return dot(x, multiply(x)); }

  double trace() const {
    double t = 0.0;
    for (int i = 0; i < n; ++i) t += (*this)(i, i);
    return t;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::fabs(v));
    return m;
  }

  SymMatrix& add_scaled(const SymMatrix& other, double alpha) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += alpha * other.a[i];
    return *this;
  }

  /// this -= alpha * v v'
  void rank1_downdate(const Vec& v, double alpha) {
    for (int i = 0; i < n; ++i) {
      double* row = &a[static_cast<std::size_t>(i) * n];
      const double vi = alpha * v[i];
      for (int j = 0; j < n; ++j) row[j] -= vi * v[j];
    }
  }
};

/// B = M * N for small dense matrices (row-major).
inline Matrix matmul(const Matrix& m, const Matrix& x) {
  Matrix r(m.rows, x.cols);
  for (int i = 0; i < m.rows; ++i)
    for (int k = 0; k < m.cols; ++k) {
      const double mik = m(i, k);
      if (mik == 0.0) continue;
      for (int j = 0; j < x.cols; ++j) r(i, j) += mik * x(k, j);
    }
  return r;
}

// ---------------------------------------------------------------------------
// eigendecomposition

/// Full spectrum, eigenvalues sorted descending with orthonormal column
/// eigenvectors in the same order. Eigenvalues with |lambda| below
/// 1e-10 * max|lambda| are clamped to exact zero: the low-rank signal models
/// are exactly rank deficient and the budget formulas divide by lambda.
struct EigDecomposition {
  Vec values;       // descending
  Matrix vectors;   // column j pairs with values[j]

  Vec eigenvector(int j) const { return vectors.col(j); }

  SymMatrix reconstruct() const {
    const int n = static_cast<int>(values.size());
    SymMatrix m(n);
    for (int k = 0; k < n; ++k) {
      if (values[k] == 0.0) continue;
      for (int i = 0; i < n; ++i) {
        const double w = values[k] * vectors(i, k);
        for (int j = 0; j < n; ++j) m(i, j) += w * vectors(j, k);
      }
    }
    return m;
  }
};

/// Cyclic Jacobi eigendecomposition for symmetric matrices. Robust and
/// dependency free; quadratic convergence once off-diagonal mass is small.
inline EigDecomposition sym_eig(const SymMatrix& input) {
  const int n = input.n;
  if (n <= 0) throw ValidationError("sym_eig: empty matrix");
  for (double v : input.a)
    if (!std::isfinite(v)) throw ValidationError("sym_eig: non-finite entry");
  {
    const double scal = std::max(1.0, input.max_abs());
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (std::fabs(input(i, j) - input(j, i)) > 1e-12 * scal)
          throw ValidationError("sym_eig: matrix is not symmetric");
  }

  SymMatrix m = input;
  Matrix v = Matrix::identity(n);

  auto off_norm = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += m(i, j) * m(i, j);
    return std::sqrt(2.0 * s);
  };

  const double stop = 1e-15 * std::max(1.0, m.frobenius_norm());
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps && off_norm() > stop; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (std::fabs(apq) <= 1e-300) continue;
        const double app = m(p, p);
        const double aqq = m(q, q);
        const double tau = (aqq - app) / (2.0 * apq);
        double t;  // tan of rotation angle, smaller root
        if (tau >= 0.0)
          t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
        else
          t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (int k = 0; k < n; ++k) {
          const double mkp = m(k, p);
          const double mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          const double mpk = m(p, k);
          const double mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  EigDecomposition out;
  out.values.resize(n);
  for (int i = 0; i < n; ++i) out.values[i] = m(i, i);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return out.values[i] > out.values[j]; });

  Vec sorted(n);
  Matrix vs(n, n);
  double lam_max = 0.0;
  for (int j = 0; j < n; ++j) lam_max = std::max(lam_max, std::fabs(out.values[j]));
  for (int j = 0; j < n; ++j) {
    double lam = out.values[order[j]];
    if (std::fabs(lam) < 1e-10 * lam_max) lam = 0.0;
    sorted[j] = lam;
    Vec column = v.col(order[j]);
    normalize_sign(column);
    for (int i = 0; i < n; ++i) vs(i, j) = column[i];
  }
  out.values = std::move(sorted);
  out.vectors = std::move(vs);
  return out;
}

struct EigPair {
  double value = 0.0;
  Vec vector;
};

/// Power iteration did not meet tolerance; carries the best iterate.
class PowerIterationError : public NumericalError {
 public:
  PowerIterationError(const std::string& msg, EigPair best)
      : NumericalError(msg), best_iterate(std::move(best)) {}
  EigPair best_iterate;
};

/// Largest eigenvalue / eigenvector of a PSD matrix by power iteration.
/// The residual ||Mv - lambda v|| <= tol * max(lambda, eps) declares
/// convergence; the sign convention matches sym_eig.
inline EigPair leading_eigpair(const SymMatrix& m, double tol = 1e-12, int max_iter = 5000) {
  const int n = m.n;
  if (n <= 0) throw ValidationError("leading_eigpair: empty matrix");

  const double scal = m.max_abs();
  if (scal == 0.0) return {0.0, unit_vector(n, 0)};

  // deterministic start; restart from basis vectors if the start is unlucky
  auto run = [&](Vec v) -> std::optional<EigPair> {
    double nv = norm2(v);
    if (nv == 0.0) return std::nullopt;
    scale(v, 1.0 / nv);
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
      Vec w = m.multiply(v);
      lambda = dot(v, w);
      double res = 0.0;
      for (int i = 0; i < n; ++i) {
        const double r = w[i] - lambda * v[i];
        res += r * r;
      }
      res = std::sqrt(res);
      if (res <= tol * std::max(std::fabs(lambda), 1e-300 * scal) ||
          res <= 1e-15 * scal) {
        normalize_sign(v);
        return EigPair{lambda, v};
      }
      const double nw = norm2(w);
      if (nw <= 1e-300 * scal) return std::nullopt;  // start in the kernel
      for (int i = 0; i < n; ++i) v[i] = w[i] / nw;
    }
    normalize_sign(v);
    throw PowerIterationError("leading_eigpair: no convergence within max_iter",
                              EigPair{lambda, v});
  };

  Vec start(n);
  for (int i = 0; i < n; ++i) start[i] = 1.0 + 0.5 * static_cast<double>(i % 7) / 7.0;
  if (auto r = run(start)) return *r;
  for (int j = 0; j < n; ++j)
    if (auto r = run(unit_vector(n, j))) return *r;
  return {0.0, unit_vector(n, 0)};
}

/// leading_eigpair that settles for the best iterate when the spectrum has
/// near-ties and the residual stalls; any vector in a near-degenerate top
/// eigenspace is equally useful for direction selection.
inline EigPair leading_eigpair_lenient(const SymMatrix& m, double tol = 1e-10,
                                       int max_iter = 20000) {
  try {
    return leading_eigpair(m, tol, max_iter);
  } catch (const PowerIterationError& err) {
    return err.best_iterate;
  }
}

// ---------------------------------------------------------------------------
// chi-squared quantile via the regularized incomplete gamma function

namespace detail {

/// Regularized lower incomplete gamma P(s, x); series for x < s+1,
/// Lentz continued fraction for the complement otherwise.
inline double gamma_p(double s, double x) {
  if (x < 0.0 || s <= 0.0) throw ValidationError("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(s);
  if (x < s + 1.0) {
    double ap = s;
    double sum = 1.0 / s;
    double term = sum;
    for (int k = 0; k < 1000; ++k) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-17)
        return sum * std::exp(-x + s * std::log(x) - lg);
    }
    throw NumericalError("gamma_p: series failed to converge");
  }
  // continued fraction for Q(s, x)
  const double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - s);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) {
      const double q = std::exp(-x + s * std::log(x) - lg) * h;
      return 1.0 - q;
    }
  }
  throw NumericalError("gamma_p: continued fraction failed to converge");
}

}  // namespace detail

/// Quantile of the chi-squared distribution with n degrees of freedom:
/// returns q with P(n/2, q/2) = p to within 1e-12 in CDF value.
/// Bisection on the CDF; monotone, so convergence is unconditional.
inline double chi2_quantile(double p, int n) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("chi2_quantile: p must be in (0,1)");
  if (n < 1) throw ValidationError("chi2_quantile: need n >= 1");
  const double s = 0.5 * n;
  auto cdf = [&](double x) { return detail::gamma_p(s, 0.5 * x); };

  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(n));
  while (cdf(hi) < p) {
    hi *= 2.0;
    if (hi > 1e12) throw NumericalError("chi2_quantile: bracket expansion failed");
  }
  for (int it = 0; it < 240; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// random numbers

/// Seeded generator used everywhere results must reproduce. The stream is
/// std::mt19937_64 (algorithm fixed by the C++ standard) and normals come
/// from the explicit Box-Muller transform below, so identical seeds give
/// bit-identical streams on any conforming implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on (0,1], 53-bit resolution.
  double uniform01() {
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the cosine and sine branches of each
  /// uniform pair are returned on consecutive calls.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.28318530717958647692 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  int uniform_int(int n) {  // 0..n-1
    return static_cast<int>(gen_() % static_cast<std::uint64_t>(n));
  }

  /// Independent per-trial stream: seed mixed with the trial index through
  /// splitmix64, so trials are reproducible regardless of scheduling.
  static Rng for_trial(std::uint64_t seed, std::uint64_t trial) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (trial + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    return Rng(z);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// ---------------------------------------------------------------------------
// multivariate normal sampling

/// Caches the eigendecomposition square root of a PSD covariance so repeated
/// draws cost O(n^2). Rank-deficient covariances are fine; zero modes are
/// dropped. Indefinite input (eigenvalue < -1e-8 * ||cov||) is rejected.
class MvnSampler {
 public:
  MvnSampler(Vec mean, const SymMatrix& cov) : mean_(std::move(mean)) {
    if (static_cast<int>(mean_.size()) != cov.n)
      throw ValidationError("MvnSampler: mean / covariance dimension mismatch");
    eig_ = sym_eig(cov);
    const double lam_max = eig_.values.empty() ? 0.0 : std::fabs(eig_.values.front());
    for (double lam : eig_.values)
      if (lam < -1e-8 * std::max(lam_max, 1e-300))
        throw ValidationError("MvnSampler: covariance is indefinite");
    sqrt_values_.resize(eig_.values.size());
    for (std::size_t i = 0; i < eig_.values.size(); ++i)
      sqrt_values_[i] = eig_.values[i] > 0.0 ? std::sqrt(eig_.values[i]) : 0.0;
  }

  /// mean + U diag(sqrt(lambda)) z with z ~ N(0, I); n normals are always
  /// consumed, in order, to keep the stream layout fixed.
  Vec sample(Rng& rng) const {
    const int n = static_cast<int>(mean_.size());
    Vec x = mean_;
    for (int j = 0; j < n; ++j) {
      const double z = rng.normal();
      const double w = sqrt_values_[j] * z;
      if (w == 0.0) continue;
      for (int i = 0; i < n; ++i) x[i] += w * eig_.vectors(i, j);
    }
    return x;
  }

 private:
  Vec mean_;
  EigDecomposition eig_;
  Vec sqrt_values_;
};

inline Vec sample_mvn(const Vec& mean, const SymMatrix& cov, Rng& rng) {
  return MvnSampler(mean, cov).sample(rng);
}

// ---------------------------------------------------------------------------
// misc numeric helpers

/// Cholesky factor (lower triangular) of a positive definite matrix; empty
/// optional if the matrix is not numerically PD.
inline std::optional<Matrix> cholesky(const SymMatrix& m) {
  const int n = m.n;
  Matrix l(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) return std::nullopt;
        l(i, j) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

/// log N(x; mean, cov) for strictly PD cov, via Cholesky.
inline double log_mvn_density(const Vec& x, const Vec& mean, const SymMatrix& cov) {
  const int n = cov.n;
  auto l = cholesky(cov);
  if (!l) throw NumericalError("log_mvn_density: covariance not positive definite");
  // solve L y = (x - mean)
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    double s = x[i] - mean[i];
    for (int k = 0; k < i; ++k) s -= (*l)(i, k) * y[k];
    y[i] = s / (*l)(i, i);
  }
  double quad = 0.0;
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) {
    quad += y[i] * y[i];
    logdet += std::log((*l)(i, i));
  }
  return -0.5 * quad - logdet - 0.5 * n * std::log(6.28318530717958647692);
}

inline double log_normal_density(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * d * d / var - 0.5 * std::log(6.28318530717958647692 * var);
}

/// log2 of the binomial coefficient C(n, k).
inline double log2_binomial(int n, int k) {
  if (k < 0 || k > n) throw ValidationError("log2_binomial: k out of range");
  const double ln2 = 0.6931471805599453;
  return (std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)) / ln2;
}

}  // namespace infogreedy
