#pragma once

// Cardinality-constrained measurement design by outer approximation: a
// mixed-integer linear master problem (support selector r, measurement a,
// epigraph variable z) is tightened with gradient cutting planes of the
// Gaussian information objective. The objective is not concave, so the
// gradient cuts can undercut unexplored supports; the loop therefore polishes
// every master point (projected gradient inside the support, then a
// steepest-ascent vertex search over sign flips and support swaps) and, once
// the cut gap closes or stalls, keeps proposing fresh supports through
// no-good exclusions until several rounds stop improving. The reported gap
// is the last unrestricted master value minus the best evaluated objective.
// The master is solved exactly with a dense two-phase simplex, either by
// enumerating supports or by branch-and-bound on r.

#include <cmath>
#include <optional>
#include <set>
#include <vector>

#include "infogreedy/errors.hpp"
#include "infogreedy/linalg.hpp"

namespace infogreedy {

// ---------------------------------------------------------------------------
// objective

/// f(a) = 0.5 ln(a' Sigma a / sigma^2 + 1), in nats.
inline double f_gaussian(const Vec& a, const SymMatrix& sigma, double noise_std) {
  if (!(noise_std > 0.0)) throw ValidationError("f_gaussian: sigma must be > 0");
  return 0.5 * std::log1p(std::max(0.0, sigma.quadratic_form(a)) / (noise_std * noise_std));
}

/// grad f(a) = Sigma a / (a' Sigma a + sigma^2).
inline Vec grad_f_gaussian(const Vec& a, const SymMatrix& sigma, double noise_std) {
  if (!(noise_std > 0.0)) throw ValidationError("grad_f_gaussian: sigma must be > 0");
  Vec g = sigma.multiply(a);
  const double denom = std::max(0.0, dot(a, g)) + noise_std * noise_std;
  scale(g, 1.0 / denom);
  return g;
}

// ---------------------------------------------------------------------------
// dense two-phase simplex

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Vec x;
  double value = 0.0;
};

namespace detail {

/// max c'x subject to A x <= b, x >= 0. Two-phase tableau simplex with
/// Bland's rule (no cycling). Sized for desk-scale problems.
class Simplex {
 public:
  LpSolution maximize(const Matrix& a, const Vec& b, const Vec& c) {
    const int m = a.rows;
    const int n = a.cols;
    rows_ = m;

    // columns: n structural + m slack + (artificials appended as needed)
    cols_ = n + m;
    std::vector<int> art_rows;
    for (int i = 0; i < m; ++i)
      if (b[i] < 0.0) art_rows.push_back(i);
    const int n_art = static_cast<int>(art_rows.size());
    cols_ += n_art;

    tab_.assign(static_cast<std::size_t>(m) * (cols_ + 1), 0.0);
    basis_.assign(m, -1);
    art_col_start_ = n + m;

    for (int i = 0; i < m; ++i) {
      const double flip = b[i] < 0.0 ? -1.0 : 1.0;
      for (int j = 0; j < n; ++j) at(i, j) = flip * a(i, j);
      at(i, n + i) = flip;  // slack
      rhs(i) = flip * b[i];
    }
    for (int k = 0; k < n_art; ++k) {
      at(art_rows[k], art_col_start_ + k) = 1.0;
      basis_[art_rows[k]] = art_col_start_ + k;
    }
    for (int i = 0; i < m; ++i)
      if (basis_[i] < 0) basis_[i] = n + i;

    if (n_art > 0) {
      // phase 1: minimize the artificial sum
      obj_.assign(cols_, 0.0);
      for (int k = 0; k < n_art; ++k) obj_[art_col_start_ + k] = -1.0;
      price_out();
      run(/*block_artificials=*/false);
      if (objective_value() < -kEps) return {LpStatus::Infeasible, {}, 0.0};
      // drive artificials out of the basis where possible
      for (int i = 0; i < m; ++i) {
        if (basis_[i] < art_col_start_) continue;
        int enter = -1;
        for (int j = 0; j < art_col_start_; ++j)
          if (std::fabs(at(i, j)) > kEps) {
            enter = j;
            break;
          }
        if (enter >= 0) pivot(i, enter);
      }
    }

    obj_.assign(cols_, 0.0);
    for (int j = 0; j < n; ++j) obj_[j] = c[j];
    price_out();
    if (!run(/*block_artificials=*/true)) return {LpStatus::Unbounded, {}, 0.0};

    LpSolution out;
    out.status = LpStatus::Optimal;
    out.x.assign(n, 0.0);
    for (int i = 0; i < m; ++i)
      if (basis_[i] < n) out.x[basis_[i]] = rhs(i);
    out.value = 0.0;
    for (int j = 0; j < n; ++j) out.value += c[j] * out.x[j];
    return out;
  }

 private:
  static constexpr double kEps = 1e-9;

  double& at(int i, int j) { return tab_[static_cast<std::size_t>(i) * (cols_ + 1) + j]; }
  double& rhs(int i) { return tab_[static_cast<std::size_t>(i) * (cols_ + 1) + cols_]; }

  void price_out() {
    red_.assign(cols_ + 1, 0.0);
    for (int j = 0; j < cols_; ++j) red_[j] = obj_[j];
    obj_shift_ = 0.0;
    for (int i = 0; i < rows_; ++i) {
      const double cb = obj_[basis_[i]];
      if (cb == 0.0) continue;
      for (int j = 0; j < cols_; ++j) red_[j] -= cb * at(i, j);
      obj_shift_ += cb * rhs(i);
    }
  }

  double objective_value() const { return obj_shift_; }

  void pivot(int row, int col) {
    const double piv = at(row, col);
    for (int j = 0; j <= cols_; ++j) at(row, j) /= piv;
    for (int i = 0; i < rows_; ++i) {
      if (i == row) continue;
      const double f = at(i, col);
      if (f == 0.0) continue;
      for (int j = 0; j <= cols_; ++j) at(i, j) -= f * at(row, j);
    }
    const double rf = red_[col];
    if (rf != 0.0) {
      for (int j = 0; j < cols_; ++j) red_[j] -= rf * at(row, j);
      obj_shift_ += rf * rhs(row);
      red_[col] = 0.0;
    }
    basis_[row] = col;
  }

  // Bland's rule; returns false on unboundedness
  bool run(bool block_artificials) {
    const int limit = block_artificials ? art_col_start_ : cols_;
    for (;;) {
      int enter = -1;
      for (int j = 0; j < limit; ++j)
        if (red_[j] > kEps) {
          enter = j;
          break;
        }
      if (enter < 0) return true;
      int leave = -1;
      double best_ratio = 0.0;
      for (int i = 0; i < rows_; ++i) {
        const double aij = at(i, enter);
        if (aij <= kEps) continue;
        const double ratio = rhs(i) / aij;
        if (leave < 0 || ratio < best_ratio - kEps ||
            (ratio < best_ratio + kEps && basis_[i] < basis_[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

  int rows_ = 0, cols_ = 0, art_col_start_ = 0;
  std::vector<double> tab_;
  std::vector<double> red_;
  std::vector<double> obj_;
  std::vector<int> basis_;
  double obj_shift_ = 0.0;
};

}  // namespace detail

inline LpSolution simplex_maximize(const Matrix& a, const Vec& b, const Vec& c) {
  detail::Simplex s;
  return s.maximize(a, b, c);
}

// ---------------------------------------------------------------------------
// cut system

/// Constraint system of the master problem over variables (r, a, z): the
/// initial block is the cardinality row, the |a_i| <= r_i box rows and the
/// 0 <= z <= c bounds; every added row is one gradient cut
/// z <= f(a*) + grad f(a*)' (a - a*).
struct CutSystem {
  int n = 0;
  int k0 = 0;
  double c_bound = 0.0;
  std::vector<Vec> cut_points;
  std::vector<Vec> cut_grads;
  std::vector<double> cut_offsets;  // f(a*) - a*' grad f(a*)

  CutSystem(int dim, int sparsity, double upper_bound)
      : n(dim), k0(sparsity), c_bound(upper_bound) {
    if (dim < 1 || sparsity < 1 || sparsity > dim || !(upper_bound > 0.0))
      throw ValidationError("CutSystem: bad dimension, sparsity or bound");
  }

  int cut_count() const { return static_cast<int>(cut_points.size()); }

  /// Appends a cut at the given point; duplicate points (within 1e-12 in the
  /// max norm) are rejected to avoid degenerate repeated rows.
  bool add_cut(const Vec& point, double f_value, const Vec& grad) {
    for (const Vec& p : cut_points) {
      double d = 0.0;
      for (int i = 0; i < n; ++i) d = std::max(d, std::fabs(p[i] - point[i]));
      if (d <= 1e-12) return false;
    }
    cut_points.push_back(point);
    cut_grads.push_back(grad);
    cut_offsets.push_back(f_value - dot(point, grad));
    return true;
  }

  /// Dense constraint matrix over (r_1..r_n, a_1..a_n, z), one row per
  /// inequality F x <= g.
  Matrix f_matrix() const {
    const int rows = 1 + 2 * n + 2 + cut_count();
    Matrix f(rows, 2 * n + 1);
    int row = 0;
    for (int j = 0; j < n; ++j) f(row, j) = 1.0;  // cardinality
    ++row;
    for (int i = 0; i < n; ++i, ++row) {  // a_i <= r_i
      f(row, i) = -1.0;
      f(row, n + i) = 1.0;
    }
    for (int i = 0; i < n; ++i, ++row) {  // -a_i <= r_i
      f(row, i) = -1.0;
      f(row, n + i) = -1.0;
    }
    f(row++, 2 * n) = 1.0;   // z <= c
    f(row++, 2 * n) = -1.0;  // -z <= 0
    for (int k = 0; k < cut_count(); ++k, ++row) {
      for (int i = 0; i < n; ++i) f(row, n + i) = -cut_grads[k][i];
      f(row, 2 * n) = 1.0;
    }
    return f;
  }

  Vec g_vector() const {
    Vec g;
    g.reserve(2 + 2 * n + 1 + cut_count());
    g.push_back(static_cast<double>(k0));
    for (int i = 0; i < 2 * n; ++i) g.push_back(0.0);
    g.push_back(c_bound);
    g.push_back(0.0);
    for (double off : cut_offsets) g.push_back(off);
    return g;
  }
};

struct MasterSolution {
  Vec r;
  Vec a;
  double z = 0.0;
  std::vector<int> support;
};

namespace detail {

using SupportSet = std::set<std::vector<int>>;

/// LP over one fixed support: variables (a'_1..a'_k, z) with a = a' - 1 so
/// everything is nonnegative. Returns the master value on that support.
inline std::optional<MasterSolution> solve_support(const CutSystem& cuts,
                                                   const std::vector<int>& support) {
  const int k = static_cast<int>(support.size());
  const int nv = k + 1;
  const int rows = k + 1 + cuts.cut_count();
  Matrix a(rows, nv);
  Vec b(rows, 0.0);
  int row = 0;
  for (int i = 0; i < k; ++i, ++row) {
    a(row, i) = 1.0;
    b[row] = 2.0;  // a'_i <= 2  (a_i <= 1)
  }
  a(row, k) = 1.0;
  b[row] = cuts.c_bound;
  ++row;
  for (int cut = 0; cut < cuts.cut_count(); ++cut, ++row) {
    double shift = cuts.cut_offsets[cut];
    for (int i = 0; i < k; ++i) {
      const double g = cuts.cut_grads[cut][support[i]];
      a(row, i) = -g;
      shift -= g;  // from substituting a_i = a'_i - 1
    }
    a(row, k) = 1.0;
    b[row] = shift;
  }
  Vec c(nv, 0.0);
  c[k] = 1.0;

  auto lp = simplex_maximize(a, b, c);
  if (lp.status != LpStatus::Optimal) return std::nullopt;

  MasterSolution out;
  out.r.assign(cuts.n, 0.0);
  out.a.assign(cuts.n, 0.0);
  for (int i = 0; i < k; ++i) {
    out.r[support[i]] = 1.0;
    out.a[support[i]] = lp.x[i] - 1.0;
  }
  out.z = lp.value;
  out.support = support;
  return out;
}

inline double binomial_estimate(int n, int k) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

/// Enumerates all supports of size exactly k0 in lexicographic order and
/// keeps the best master value (strictly-better-wins, so ties go to the
/// first support). Supports listed in `banned` are skipped.
inline std::optional<MasterSolution> solve_master_enumerate(const CutSystem& cuts,
                                                            const SupportSet& banned) {
  std::vector<int> support(cuts.k0);
  for (int i = 0; i < cuts.k0; ++i) support[i] = i;
  std::optional<MasterSolution> best;
  for (;;) {
    if (banned.find(support) == banned.end()) {
      auto sol = solve_support(cuts, support);
      if (sol && (!best || sol->z > best->z + 1e-12)) best = std::move(sol);
    }
    // next combination
    int i = cuts.k0 - 1;
    while (i >= 0 && support[i] == cuts.n - cuts.k0 + i) --i;
    if (i < 0) break;
    ++support[i];
    for (int j = i + 1; j < cuts.k0; ++j) support[j] = support[j - 1] + 1;
  }
  return best;
}

/// LP relaxation over (r, p, q, z) >= 0 with a = p - q and optional 0/1
/// fixings of r; no-good rows exclude previously explored supports.
inline LpSolution solve_relaxation(const CutSystem& cuts, const std::vector<int>& fixed,
                                   const SupportSet& banned) {
  const int n = cuts.n;
  const int nv = 3 * n + 1;  // r, p, q, z
  int rows = 1 + 2 * n + n + 1 + cuts.cut_count() + static_cast<int>(banned.size());
  for (int i = 0; i < n; ++i)
    if (fixed[i] == 1) rows += 1;  // r_i >= 1
  // r_i <= 0 fixings reuse the r_i <= 1 row slot with rhs 0

  Matrix a(rows, nv);
  Vec b(rows, 0.0);
  int row = 0;
  for (int i = 0; i < n; ++i) a(row, i) = 1.0;
  b[row] = static_cast<double>(cuts.k0);
  ++row;
  for (int i = 0; i < n; ++i, ++row) {  // p - q - r <= 0
    a(row, n + i) = 1.0;
    a(row, 2 * n + i) = -1.0;
    a(row, i) = -1.0;
  }
  for (int i = 0; i < n; ++i, ++row) {  // q - p - r <= 0
    a(row, n + i) = -1.0;
    a(row, 2 * n + i) = 1.0;
    a(row, i) = -1.0;
  }
  for (int i = 0; i < n; ++i, ++row) {  // r_i <= 1 (or 0 when fixed to 0)
    a(row, i) = 1.0;
    b[row] = fixed[i] == 0 ? 0.0 : 1.0;
  }
  a(row, 3 * n) = 1.0;
  b[row] = cuts.c_bound;
  ++row;
  for (int cut = 0; cut < cuts.cut_count(); ++cut, ++row) {
    for (int i = 0; i < n; ++i) {
      a(row, n + i) = -cuts.cut_grads[cut][i];
      a(row, 2 * n + i) = cuts.cut_grads[cut][i];
    }
    a(row, 3 * n) = 1.0;
    b[row] = cuts.cut_offsets[cut];
  }
  for (const auto& s : banned) {  // sum_{i in S} r_i <= k0 - 1
    for (int i : s) a(row, i) = 1.0;
    b[row] = static_cast<double>(cuts.k0 - 1);
    ++row;
  }
  for (int i = 0; i < n; ++i) {
    if (fixed[i] != 1) continue;
    a(row, i) = -1.0;
    b[row] = -1.0;
    ++row;
  }
  Vec c(nv, 0.0);
  c[3 * n] = 1.0;
  return simplex_maximize(a, b, c);
}

inline std::optional<MasterSolution> solve_master_bnb(const CutSystem& cuts,
                                                      const SupportSet& banned) {
  std::optional<MasterSolution> best;
  std::vector<int> fixed(cuts.n, -1);  // -1 free, 0/1 fixed

  auto recurse = [&](auto&& self, std::vector<int>& state) -> void {
    auto lp = solve_relaxation(cuts, state, banned);
    if (lp.status != LpStatus::Optimal) return;
    if (best && lp.value <= best->z + 1e-9) return;

    // most fractional r
    int branch = -1;
    double frac_dist = 1e-6;
    for (int i = 0; i < cuts.n; ++i) {
      const double f = std::fabs(lp.x[i] - std::round(lp.x[i]));
      if (f > frac_dist) {
        frac_dist = f;
        branch = i;
      }
    }
    if (branch < 0) {
      MasterSolution sol;
      sol.r.assign(cuts.n, 0.0);
      sol.a.assign(cuts.n, 0.0);
      for (int i = 0; i < cuts.n; ++i) {
        sol.r[i] = std::round(lp.x[i]);
        sol.a[i] = lp.x[cuts.n + i] - lp.x[2 * cuts.n + i];
        if (sol.r[i] > 0.5) sol.support.push_back(i);
      }
      sol.z = lp.value;
      if (!best || sol.z > best->z + 1e-12) best = std::move(sol);
      return;
    }
    state[branch] = 1;
    self(self, state);
    state[branch] = 0;
    self(self, state);
    state[branch] = -1;
  };
  recurse(recurse, fixed);
  return best;
}

inline std::optional<MasterSolution> solve_master_impl(const CutSystem& cuts,
                                                       const SupportSet& banned) {
  if (binomial_estimate(cuts.n, cuts.k0) <= 2e5)
    return solve_master_enumerate(cuts, banned);
  return solve_master_bnb(cuts, banned);
}

// ---------------------------------------------------------------------------
// polishing

/// Steepest-ascent local search over box vertices: single and paired sign
/// flips plus support swaps that increase a' Sigma a, until no move improves.
inline Vec vertex_local_search(const SymMatrix& sigma, Vec v) {
  const int n = sigma.n;
  auto q = [&](const Vec& x) { return sigma.quadratic_form(x); };
  for (;;) {
    const double base = q(v);
    double best_q = base + 1e-12;
    Vec best_move;
    auto offer = [&](Vec w) {
      const double qw = q(w);
      if (qw > best_q) {
        best_q = qw;
        best_move = std::move(w);
      }
    };
    for (int i = 0; i < n; ++i) {
      if (v[i] == 0.0) continue;
      Vec w = v;
      w[i] = -w[i];
      offer(std::move(w));
      for (int j = i + 1; j < n; ++j) {  // paired flips beat single-flip traps
        if (v[j] == 0.0) continue;
        Vec w2 = v;
        w2[i] = -w2[i];
        w2[j] = -w2[j];
        offer(std::move(w2));
      }
    }
    for (int i = 0; i < n; ++i) {
      if (v[i] == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        if (v[j] != 0.0) continue;
        for (double sgn : {1.0, -1.0}) {
          Vec w = v;
          w[i] = 0.0;
          w[j] = sgn;
          offer(std::move(w));
        }
      }
    }
    if (best_move.empty()) return v;
    v = std::move(best_move);
  }
}

/// Projected gradient ascent within the point's support, then the vertex
/// search from the sign pattern. Returns whichever scores higher.
inline Vec polish_point(const SymMatrix& sigma, double noise_std, int k0, const Vec& point) {
  const int n = sigma.n;
  std::vector<int> support;
  for (int i = 0; i < n; ++i)
    if (point[i] != 0.0) support.push_back(i);
  Vec x = point;
  if (support.empty()) {
    // fall back to the top eigenvector's strongest coordinates
    auto top = leading_eigpair_lenient(sigma);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int i, int j) {
      return std::fabs(top.vector[i]) > std::fabs(top.vector[j]);
    });
    x.assign(n, 0.0);
    for (int i = 0; i < k0; ++i) {
      const int idx = order[i];
      x[idx] = top.vector[idx] >= 0.0 ? 1.0 : -1.0;
      support.push_back(idx);
    }
  }

  for (int step = 0; step < 60; ++step) {
    Vec g = grad_f_gaussian(x, sigma, noise_std);
    Vec trial = x;
    for (int i : support) trial[i] = std::clamp(x[i] + 0.8 * g[i], -1.0, 1.0);
    if (sigma.quadratic_form(trial) <= sigma.quadratic_form(x)) break;
    x = std::move(trial);
  }

  Vec v(n, 0.0);
  for (int i : support) v[i] = x[i] >= 0.0 ? 1.0 : -1.0;
  v = vertex_local_search(sigma, v);
  return sigma.quadratic_form(v) > sigma.quadratic_form(x) ? v : x;
}

}  // namespace detail

/// Exact solution of the master problem max z s.t. F [r a z]' <= g with r
/// binary: support enumeration with per-support LPs when C(n, k0) is small,
/// depth-first branch-and-bound on r otherwise.
inline MasterSolution solve_master(const CutSystem& cuts) {
  auto best = detail::solve_master_impl(cuts, {});
  if (!best)
    throw NumericalError("solve_master: master problem infeasible (inconsistent cuts)");
  return *best;
}

// ---------------------------------------------------------------------------
// outer approximation loop

struct SparseDesignResult {
  Vec a;                  // ||a||_0 <= k0, |a_i| <= 1
  double objective = 0;   // f(a), nats
  int iterations = 0;     // master solves, diversification rounds included
  double gap = 0;         // last unrestricted master value minus the objective
  bool certified = false; // gap <= tol at termination
  double c_bound = 0;     // upper bound used in the master
  std::vector<double> master_values;  // unrestricted z* per iteration (non-increasing)
};

/// Designs a measurement vector with at most k0 non-zeros for the Gaussian
/// objective. Iterates master solve -> polish -> add gradient cuts at both
/// the master point and its polished refinement; when the cut gap closes or
/// the cut point repeats, switches to no-good diversification rounds (each
/// bans the explored support and polishes a fresh master proposal) until
/// `patience` consecutive rounds bring no improvement. Deterministic.
inline SparseDesignResult sparse_direction(const SymMatrix& sigma_matrix, double noise_std,
                                           int k0, std::optional<double> c_bound = std::nullopt,
                                           double tol = 1e-6, int max_iter = 100,
                                           int patience = 25) {
  const int n = sigma_matrix.n;
  if (k0 < 1 || k0 > n) throw ValidationError("sparse_direction: k0 out of range");
  if (!(noise_std > 0.0)) throw ValidationError("sparse_direction: sigma must be > 0");

  double c = c_bound ? *c_bound : 0.0;
  if (!c_bound) {
    const double spectral = leading_eigpair_lenient(sigma_matrix).value;
    c = 0.5 * std::log1p(std::max(spectral, 0.0) * k0 / (noise_std * noise_std));
    if (!(c > 0.0)) c = 1.0;  // zero signal: any positive epigraph bound works
  }

  CutSystem cuts(n, k0, c);
  SparseDesignResult out;
  out.c_bound = c;

  // deterministic seed: polished top-eigenvector corner
  out.a = detail::polish_point(sigma_matrix, noise_std, k0, Vec(n, 0.0));
  out.objective = f_gaussian(out.a, sigma_matrix, noise_std);

  auto consider = [&](const Vec& candidate) {
    const double value = f_gaussian(candidate, sigma_matrix, noise_std);
    if (value > out.objective + 1e-12) {
      out.objective = value;
      out.a = candidate;
      return true;
    }
    return false;
  };

  detail::SupportSet explored;
  double unrestricted_z = c;
  bool cut_phase_done = false;
  int iterations = 0;

  auto record_support = [&](const Vec& point) {
    std::vector<int> s;
    for (int i = 0; i < n; ++i)
      if (point[i] != 0.0) s.push_back(i);
    explored.insert(std::move(s));
  };

  // phase 1: the cutting-plane loop proper
  while (iterations < max_iter && !cut_phase_done) {
    auto master = detail::solve_master_impl(cuts, {});
    if (!master) throw NumericalError("sparse_direction: master problem infeasible");
    iterations += 1;

    Vec polished = detail::polish_point(sigma_matrix, noise_std, k0, master->a);
    consider(master->a);
    consider(polished);
    explored.insert(master->support);
    record_support(polished);

    unrestricted_z = master->z;
    out.master_values.push_back(master->z);
    if (unrestricted_z - out.objective <= tol) {
      cut_phase_done = true;
    } else {
      bool added = cuts.add_cut(polished, f_gaussian(polished, sigma_matrix, noise_std),
                                grad_f_gaussian(polished, sigma_matrix, noise_std));
      added = cuts.add_cut(master->a, f_gaussian(master->a, sigma_matrix, noise_std),
                           grad_f_gaussian(master->a, sigma_matrix, noise_std)) ||
              added;
      if (!added) cut_phase_done = true;  // stalled on repeat points
    }
  }

  // phase 2: the gradient cuts of a non-concave objective can undercut
  // supports the master never proposed, so sweep the remaining supports in
  // decreasing order of the valid bound a'Sigma a <= sum_{i,j in S} |Sigma_ij|
  // and polish until the bound falls below the incumbent.
  const double s2 = noise_std * noise_std;
  if (detail::binomial_estimate(n, k0) <= 2e5) {
    std::vector<std::pair<double, std::vector<int>>> ranked;
    std::vector<int> support(k0);
    for (int i = 0; i < k0; ++i) support[i] = i;
    for (;;) {
      double bound = 0.0;
      for (int i : support)
        for (int j : support) bound += std::fabs(sigma_matrix(i, j));
      ranked.emplace_back(bound, support);
      int i = k0 - 1;
      while (i >= 0 && support[i] == n - k0 + i) --i;
      if (i < 0) break;
      ++support[i];
      for (int j = i + 1; j < k0; ++j) support[j] = support[j - 1] + 1;
    }
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [bound, s] : ranked) {
      if (iterations >= max_iter) break;
      const double incumbent_q = (std::exp(2.0 * out.objective) - 1.0) * s2;
      if (bound <= incumbent_q * (1.0 + 1e-12)) break;  // rest cannot beat the incumbent
      if (explored.count(s)) continue;
      iterations += 1;
      Vec start(n, 0.0);
      for (int i : s) start[i] = 0.3;
      Vec polished = detail::polish_point(sigma_matrix, noise_std, k0, start);
      consider(polished);
      explored.insert(s);
      record_support(polished);
    }
  } else {
    // too many supports to rank: keep proposing fresh ones through no-good
    // exclusions until `patience` rounds stop improving
    int stale_rounds = 0;
    while (iterations < max_iter && stale_rounds < patience) {
      auto master = detail::solve_master_impl(cuts, explored);
      if (!master) break;  // every support explored
      iterations += 1;
      Vec polished = detail::polish_point(sigma_matrix, noise_std, k0, master->a);
      bool improved = consider(master->a);
      improved = consider(polished) || improved;
      explored.insert(master->support);
      record_support(polished);
      stale_rounds = improved ? 0 : stale_rounds + 1;
    }
  }

  out.iterations = iterations;
  out.gap = std::max(unrestricted_z - out.objective, 0.0);
  out.certified = out.gap <= tol;
  return out;
}

}  // namespace infogreedy
