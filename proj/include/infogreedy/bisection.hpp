#pragma once

// Bisection recovery of nonnegative k-sparse signals with binary sensing
// vectors, plus the empirical information accounting used to check how many
// bits a measurement buys on the uniform-support family.

#include <cmath>
#include <functional>
#include <vector>

#include "infogreedy/errors.hpp"
#include "infogreedy/linalg.hpp"

namespace infogreedy {

/// 0/1 indicator vector of an index set (0-based indices).
inline std::vector<double> characteristic_vector(const std::vector<int>& s, int n) {
  std::vector<double> a(n, 0.0);
  for (int i : s) {
    if (i < 0 || i >= n) throw ValidationError("characteristic_vector: index out of range");
    a[i] = 1.0;
  }
  return a;
}

struct SparseSignal {
  int dim = 0;
  std::vector<int> support;       // sorted, size <= k
  std::vector<double> amplitudes;  // positive, parallel to support

  Vec to_dense() const {
    Vec x(dim, 0.0);
    for (std::size_t i = 0; i < support.size(); ++i) x[support[i]] = amplitudes[i];
    return x;
  }

  /// Uniform random k-subset support with amplitudes uniform on [lo, hi].
  static SparseSignal random(int n, int k, double lo, double hi, Rng& rng) {
    SparseSignal s;
    s.dim = n;
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.uniform_int(n - i)]);
    s.support.assign(idx.begin(), idx.begin() + k);
    std::sort(s.support.begin(), s.support.end());
    s.amplitudes.resize(k);
    for (double& a : s.amplitudes) a = lo + (hi - lo) * rng.uniform01();
    return s;
  }
};

/// Measurement oracle: given a binary sensing vector and a repetition count,
/// returns the outcome averaged over the repetitions.
using MeasureFn = std::function<double(const std::vector<double>&, int)>;

/// Oracle over a fixed signal with white noise of std-dev sigma per
/// repetition; increments *counter by the repetition count on every call.
inline MeasureFn make_measure_oracle(Vec x, double sigma, Rng& rng, long* counter = nullptr) {
  return [x = std::move(x), sigma, &rng, counter](const std::vector<double>& a,
                                                  int repetitions) {
    const double clean = dot(a, x);
    if (counter) *counter += repetitions;
    if (sigma <= 0.0) return clean;
    double sum = 0.0;
    for (int r = 0; r < repetitions; ++r) sum += clean + sigma * rng.normal();
    return sum / repetitions;
  };
}

struct BisectionResult {
  Vec estimate;
  long measurement_count = 0;  // unit measurements, repetitions included
};

/// Bisection search over contiguous blocks: each round splits every active
/// block at its index midpoint (lower half first), measures both children
/// (r = ceil(log2 n) repetitions when sigma > 0, once otherwise), prunes
/// blocks whose averaged outcome is <= eps and freezes singletons at their
/// outcome. Noiseless recovery is exact in at most 2k ceil(log2 n) unit
/// measurements; the noisy variant uses at most 2k ceil(log2 n)^2.
inline BisectionResult bisect_recover(const MeasureFn& measure, int n, double sigma,
                                      double eps) {
  if (n < 1) throw ValidationError("bisect_recover: n must be >= 1");
  const int reps =
      sigma > 0.0 ? std::max(1, static_cast<int>(std::ceil(std::log2(double(n))))) : 1;

  BisectionResult out;
  out.estimate.assign(n, 0.0);

  struct Block {
    int lo, hi;  // [lo, hi)
  };
  std::vector<Block> active = {{0, n}};
  while (!active.empty()) {
    std::vector<Block> split;
    split.reserve(2 * active.size());
    for (const Block& b : active) {
      const int mid = b.lo + (b.hi - b.lo) / 2;
      if (mid > b.lo) split.push_back({b.lo, mid});
      if (b.hi > mid) split.push_back({mid, b.hi});
    }
    active.clear();
    for (const Block& b : split) {
      std::vector<int> idx(b.hi - b.lo);
      for (int i = b.lo; i < b.hi; ++i) idx[i - b.lo] = i;
      const double y = measure(characteristic_vector(idx, n), reps);
      out.measurement_count += reps;
      if (y <= eps) continue;              // no signal mass in the block
      if (b.hi - b.lo == 1) {
        out.estimate[b.lo] = y;            // singleton: outcome is the estimate
        continue;
      }
      active.push_back(b);
    }
  }
  return out;
}

/// Unit measurements consumed by bisection on a known-sum family: one
/// measurement per block split (the sibling outcome is the parent total minus
/// the measured half, and the root total is known for unit amplitudes).
inline long info_accounting_measurement_count(int n, const std::vector<int>& support) {
  struct Block {
    int lo, hi;
    int mass;  // support points inside
  };
  auto mass_in = [&](int lo, int hi) {
    int m = 0;
    for (int i : support)
      if (i >= lo && i < hi) ++m;
    return m;
  };
  long count = 0;
  std::vector<Block> active = {{0, n, static_cast<int>(support.size())}};
  while (!active.empty()) {
    std::vector<Block> next;
    for (const Block& b : active) {
      const int mid = b.lo + (b.hi - b.lo) / 2;
      if (mid == b.lo || mid == b.hi) continue;
      const int m1 = mass_in(b.lo, mid);
      count += 1;  // measure the lower half; upper half inferred from b.mass
      const int m2 = b.mass - m1;
      if (m1 > 0 && mid - b.lo > 1) next.push_back({b.lo, mid, m1});
      if (m2 > 0 && b.hi - mid > 1) next.push_back({mid, b.hi, m2});
    }
    active = std::move(next);
  }
  return count;
}

/// Monte-Carlo estimate of bits learned per measurement on uniform random
/// k-subset supports with unit amplitudes, noiseless:
/// log2 C(n,k) / mean(measurement count).
inline double empirical_info_per_measurement(int n, int k, int trials, Rng& rng) {
  if (k < 0 || k > n || trials < 1)
    throw ValidationError("empirical_info_per_measurement: bad arguments");
  if (k == 0) return 0.0;
  const double entropy_bits = log2_binomial(n, k);
  double total = 0.0;
  for (int t = 0; t < trials; ++t) {
    auto sig = SparseSignal::random(n, k, 1.0, 1.0, rng);
    total += static_cast<double>(info_accounting_measurement_count(n, sig.support));
  }
  const double mean_count = total / trials;
  return mean_count > 0.0 ? entropy_bits / mean_count : 0.0;
}

}  // namespace infogreedy
