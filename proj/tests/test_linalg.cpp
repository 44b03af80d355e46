#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "infogreedy/linalg.hpp"

using namespace infogreedy;

namespace {

SymMatrix random_psd(int n, Rng& rng, double floor = 0.0) {
  Matrix b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = rng.normal();
  SymMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += b(i, k) * b(j, k);
      m(i, j) = s / n;
    }
  for (int i = 0; i < n; ++i) m(i, i) += floor;
  return m;
}

double reconstruction_error(const SymMatrix& m, const EigDecomposition& e) {
  SymMatrix r = e.reconstruct();
  r.add_scaled(m, -1.0);
  return r.frobenius_norm() / std::max(m.frobenius_norm(), 1e-300);
}

}  // namespace

TEST_CASE("sym_eig identity") {
  auto e = sym_eig(SymMatrix::identity(3));
  for (double v : e.values) CHECK(v == Catch::Approx(1.0).margin(1e-12));
  // orthonormal columns
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double d = dot(e.eigenvector(i), e.eigenvector(j));
      CHECK(d == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-10));
    }
}

TEST_CASE("sym_eig diagonal") {
  auto e = sym_eig(SymMatrix::diagonal({4.0, 1.0}));
  CHECK(e.values[0] == Catch::Approx(4.0));
  CHECK(e.values[1] == Catch::Approx(1.0));
  CHECK(std::fabs(e.vectors(0, 0)) == Catch::Approx(1.0));
  CHECK(std::fabs(e.vectors(1, 1)) == Catch::Approx(1.0));
  // sign convention: first sizable component positive
  CHECK(e.vectors(0, 0) > 0.0);
  CHECK(e.vectors(1, 1) > 0.0);
}

TEST_CASE("sym_eig random PSD reconstruction") {
  Rng rng(11);
  auto m = random_psd(6, rng);
  auto e = sym_eig(m);
  CHECK(reconstruction_error(m, e) < 1e-8);
  for (int j = 0; j + 1 < 6; ++j) CHECK(e.values[j] >= e.values[j + 1]);
}

TEST_CASE("sym_eig reconstruction over corpus of symmetric matrices") {
  Rng rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + rng.uniform_int(9);
    SymMatrix m(n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double v = rng.normal();
        m(i, j) = v;
        m(j, i) = v;
      }
    auto e = sym_eig(m);
    CHECK(reconstruction_error(m, e) < 1e-8);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double d = dot(e.eigenvector(i), e.eigenvector(j));
        CHECK(std::fabs(d - (i == j ? 1.0 : 0.0)) < 1e-10);
      }
  }
}

TEST_CASE("sym_eig rejects asymmetric input") {
  SymMatrix m(2);
  m(0, 0) = 1.0;
  m(0, 1) = 0.5;
  m(1, 0) = -0.5;
  m(1, 1) = 1.0;
  CHECK_THROWS_AS(sym_eig(m), ValidationError);
  CHECK_THROWS_AS(SymMatrix::from_dense(2, {1.0, 0.5, -0.5, 1.0}), ValidationError);
}

TEST_CASE("leading_eigpair diagonal and rank-1") {
  auto p = leading_eigpair(SymMatrix::diagonal({4.0, 1.0, 0.0}));
  CHECK(p.value == Catch::Approx(4.0).margin(1e-10));
  CHECK(std::fabs(p.vector[0]) == Catch::Approx(1.0).margin(1e-8));

  Vec v = {1.2, -0.8, 1.0, 0.6};
  const double nv = norm2(v);
  scale(v, 2.0 / nv);  // ||v|| = 2 so v v' has top eigenvalue 4
  auto q = leading_eigpair(SymMatrix::outer(v));
  CHECK(q.value == Catch::Approx(4.0).margin(1e-9));
  const double align = std::fabs(dot(q.vector, v)) / 2.0;
  CHECK(align == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("leading_eigpair agrees with sym_eig on random PSD") {
  Rng rng(42);
  auto m = random_psd(20, rng);
  auto full = sym_eig(m);
  auto p = leading_eigpair(m, 1e-13, 20000);
  CHECK(p.value == Catch::Approx(full.values[0]).epsilon(1e-8));
  CHECK(std::fabs(dot(p.vector, full.eigenvector(0))) == Catch::Approx(1.0).margin(1e-6));
  CHECK(norm2(p.vector) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("chi2_quantile reference values") {
  // cross-checked against published chi-square tables / scipy
  CHECK(chi2_quantile(0.95, 1) == Catch::Approx(3.8414588206941245).epsilon(1e-9));
  CHECK(chi2_quantile(0.5, 2) == Catch::Approx(2.0 * std::log(2.0)).epsilon(1e-10));
  CHECK(chi2_quantile(0.95, 100) == Catch::Approx(124.34211340400407).epsilon(1e-9));
  CHECK(chi2_quantile(0.95, 2) == Catch::Approx(5.991464547107979).epsilon(1e-10));
  CHECK(chi2_quantile(0.99, 3) == Catch::Approx(11.344866730144373).epsilon(1e-9));
  CHECK(chi2_quantile(0.01, 5) == Catch::Approx(0.5542980767282772).epsilon(1e-9));
}

TEST_CASE("chi2_quantile round trip through the CDF") {
  for (int n : {1, 2, 7, 30, 100}) {
    for (double p : {0.01, 0.25, 0.5, 0.9, 0.95, 0.999}) {
      const double q = chi2_quantile(p, n);
      CHECK(detail::gamma_p(0.5 * n, 0.5 * q) == Catch::Approx(p).margin(1e-10));
    }
  }
}

TEST_CASE("chi2_quantile strictly increasing in p and n") {
  for (int n : {1, 2, 5, 20}) {
    double prev = 0.0;
    for (double p = 0.05; p < 1.0; p += 0.05) {
      const double q = chi2_quantile(p, n);
      CHECK(q > prev);
      prev = q;
    }
  }
  for (double p : {0.1, 0.5, 0.95}) {
    double prev = 0.0;
    for (int n = 1; n <= 40; ++n) {
      const double q = chi2_quantile(p, n);
      CHECK(q > prev);
      prev = q;
    }
  }
}

TEST_CASE("chi2_quantile rejects bad arguments") {
  CHECK_THROWS_AS(chi2_quantile(0.0, 3), ValidationError);
  CHECK_THROWS_AS(chi2_quantile(1.0, 3), ValidationError);
  CHECK_THROWS_AS(chi2_quantile(0.5, 0), ValidationError);
}

TEST_CASE("sample_mvn degenerate cases") {
  Rng rng(1);
  Vec mean = {1.0, -2.0, 0.5};
  auto x = sample_mvn(mean, SymMatrix(3), rng);
  for (int i = 0; i < 3; ++i) CHECK(x[i] == mean[i]);

  // rank-1 covariance: samples stay on mean + span{v}
  Vec v = {0.6, -0.8, 0.0};
  auto cov = SymMatrix::outer(v, 2.0);
  MvnSampler sampler(mean, cov);
  for (int t = 0; t < 50; ++t) {
    auto s = sampler.sample(rng);
    Vec d = {s[0] - mean[0], s[1] - mean[1], s[2] - mean[2]};
    const double along = dot(d, v);
    Vec resid = d;
    axpy(-along / dot(v, v), v, resid);
    CHECK(norm2(resid) < 1e-10);
  }
}

TEST_CASE("sample_mvn moment check") {
  Rng rng(123);
  MvnSampler sampler({0.0, 0.0}, SymMatrix::identity(2));
  const int n_samples = 100000;
  double s00 = 0, s01 = 0, s11 = 0;
  for (int t = 0; t < n_samples; ++t) {
    auto x = sampler.sample(rng);
    s00 += x[0] * x[0];
    s01 += x[0] * x[1];
    s11 += x[1] * x[1];
  }
  CHECK(s00 / n_samples == Catch::Approx(1.0).margin(0.05));
  CHECK(s11 / n_samples == Catch::Approx(1.0).margin(0.05));
  CHECK(s01 / n_samples == Catch::Approx(0.0).margin(0.05));
}

TEST_CASE("sample_mvn rejects indefinite covariance") {
  Rng rng(9);
  SymMatrix m = SymMatrix::diagonal({1.0, -0.5});
  CHECK_THROWS_AS(sample_mvn({0.0, 0.0}, m, rng), ValidationError);
}

TEST_CASE("rng determinism") {
  Rng a(777), b(777);
  for (int i = 0; i < 1000; ++i) {
    REQUIRE(a.next_u64() == b.next_u64());
  }
  Rng c(777), d(777);
  for (int i = 0; i < 1000; ++i) {
    double x = c.normal(), y = d.normal();
    REQUIRE(std::memcmp(&x, &y, sizeof x) == 0);
  }
  // per-trial streams differ
  Rng t0 = Rng::for_trial(5, 0), t1 = Rng::for_trial(5, 1);
  CHECK(t0.next_u64() != t1.next_u64());
}

TEST_CASE("cholesky and mvn density") {
  Rng rng(3);
  auto m = random_psd(4, rng, 0.5);
  auto l = cholesky(m);
  REQUIRE(l.has_value());
  // L L' == m
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += (*l)(i, k) * (*l)(j, k);
      CHECK(s == Catch::Approx(m(i, j)).margin(1e-10));
    }
  // 1-D density sanity
  SymMatrix one(1);
  one(0, 0) = 2.0;
  CHECK(log_mvn_density({0.7}, {0.2}, one) ==
        Catch::Approx(log_normal_density(0.7, 0.2, 2.0)).margin(1e-12));
}

TEST_CASE("log2_binomial") {
  CHECK(log2_binomial(4, 2) == Catch::Approx(std::log2(6.0)).margin(1e-10));
  CHECK(log2_binomial(256, 1) == Catch::Approx(8.0).margin(1e-10));
  CHECK(log2_binomial(10, 0) == Catch::Approx(0.0).margin(1e-10));
}
