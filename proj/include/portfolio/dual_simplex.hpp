/**
 * @file dual_simplex.hpp
 * @brief Bounded-variable dual simplex for the LP relaxation of an IlpModel.
 *
 * The model is held in computational form
 *
 *     min  cost^T z    s.t.  [A  -I] z = 0,   lo <= z <= up
 *
 * with z = (x, r): x are the structural columns (cost = -objective, boxed in
 * [0,1] or tighter) and r are one logical per row carrying the row's range
 * (`<= b` -> (-inf, b], `>= b` -> [b, inf), `= b` -> [b, b]). Rows are scaled to
 * unit max coefficient.
 *
 * Because every structural is boxed, the all-logical basis is dual feasible
 * once each structural sits at the bound matching the sign of its cost, so the
 * dual simplex needs no phase 1. Changing structural bounds keeps the current
 * basis dual feasible, which is what branch-and-bound exploits: each node just
 * installs its bounds and re-runs from the basis the previous node left.
 *
 * The basis inverse is stored explicitly (dense, row-major) and updated by
 * rank-one pivots that skip zero entries; it is rebuilt by Gauss-Jordan
 * elimination every `refactor_interval` pivots.
 */
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "portfolio/ilp_model.hpp"

namespace portfolio {

enum class LpStatus { kOptimal, kInfeasible, kTimeLimit };

struct LpResult {
  LpStatus status = LpStatus::kOptimal;
  double objective = 0.0;      // maximization objective c^T x
  std::vector<double> x;       // structural values
  std::vector<double> duals;   // row multipliers y (max form, original scale)
  std::optional<std::size_t> infeasible_row;  // row blocking feasibility
  std::size_t iterations = 0;
};

struct SimplexTolerances {
  double primal = 1e-7;
  double dual = 1e-7;
  double pivot = 1e-9;
  std::size_t refactor_interval = 400;
  std::size_t degenerate_before_bland = 50;
};

class DualSimplex {
 public:
  using Clock = std::chrono::steady_clock;
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  explicit DualSimplex(const IlpModel& model, SimplexTolerances tol = {})
      : tol_(tol), m_(model.constraints.size()), n_(model.num_vars()) {
    const std::size_t total = n_ + m_;
    cost_.assign(total, 0.0);
    for (std::size_t j = 0; j < n_; ++j) cost_[j] = -model.objective[j];

    row_scale_.assign(m_, 1.0);
    for (std::size_t i = 0; i < m_; ++i) {
      double mx = 0.0;
      for (const auto& t : model.constraints[i].terms) mx = std::max(mx, std::abs(t.coef));
      if (mx > 0.0) row_scale_[i] = 1.0 / mx;
    }

    // CSR, then CSC.
    row_start_.assign(m_ + 1, 0);
    for (std::size_t i = 0; i < m_; ++i) {
      for (const auto& t : model.constraints[i].terms) {
        row_col_.push_back(t.var);
        row_val_.push_back(t.coef * row_scale_[i]);
      }
      row_start_[i + 1] = row_col_.size();
    }
    col_start_.assign(n_ + 1, 0);
    for (std::size_t k = 0; k < row_col_.size(); ++k) ++col_start_[row_col_[k] + 1];
    for (std::size_t j = 0; j < n_; ++j) col_start_[j + 1] += col_start_[j];
    col_row_.resize(row_col_.size());
    col_val_.resize(row_col_.size());
    std::vector<std::size_t> fill(col_start_.begin(), col_start_.end() - 1);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k) {
        std::size_t at = fill[row_col_[k]]++;
        col_row_[at] = i;
        col_val_[at] = row_val_[k];
      }

    lo_.assign(total, 0.0);
    up_.assign(total, 1.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const auto& r = model.constraints[i];
      double b = r.rhs * row_scale_[i];
      switch (r.relation) {
        case Relation::kLessEqual: lo_[n_ + i] = -kInf; up_[n_ + i] = b; break;
        case Relation::kGreaterEqual: lo_[n_ + i] = b; up_[n_ + i] = kInf; break;
        case Relation::kEqual: lo_[n_ + i] = b; up_[n_ + i] = b; break;
      }
    }

    basis_.resize(m_);
    pos_.assign(total, kNonbasic);
    for (std::size_t i = 0; i < m_; ++i) {
      basis_[i] = n_ + i;
      pos_[n_ + i] = i;
    }
    binv_.assign(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = -1.0;
    x_.assign(total, 0.0);
    d_ = cost_;
    for (std::size_t j = 0; j < n_; ++j) x_[j] = d_[j] < 0.0 ? up_[j] : lo_[j];
    recompute_primal();
  }

  std::size_t num_rows() const { return m_; }
  std::size_t num_cols() const { return n_; }
  std::size_t total_iterations() const { return total_iterations_; }

  /**
   * Solves with the given structural bounds, warm-starting from the current
   * basis. `deadline` bounds the wall time.
   */
  LpResult solve(std::span<const double> lb, std::span<const double> ub,
                 std::optional<Clock::time_point> deadline = std::nullopt) {
    if (lb.size() != n_ || ub.size() != n_) throw std::invalid_argument("bound size mismatch");
    install_bounds(lb, ub);

    LpResult res;
    std::size_t degenerate = 0;
    bool bland = false;
    std::size_t since_refresh = 0;
    while (true) {
      if (res.iterations % 64 == 0 && deadline && Clock::now() > *deadline) {
        res.status = LpStatus::kTimeLimit;
        break;
      }
      if (res.iterations > iteration_cap())
        throw std::runtime_error("dual simplex exceeded its iteration cap");

      auto leave = choose_leaving(bland);
      if (!leave) {
        if (since_refresh > 0) {
          refresh();
          since_refresh = 0;
          if (choose_leaving(bland)) continue;
        }
        res.status = LpStatus::kOptimal;
        break;
      }
      const std::size_t r = *leave;
      const std::size_t p = basis_[r];
      const bool to_lower = x_[p] < lo_[p];
      const double target = to_lower ? lo_[p] : up_[p];

      compute_pivot_row(r);
      auto enter = choose_entering(to_lower, bland);
      if (!enter) {
        if (since_refresh > 0) {  // make sure this is not numerical drift
          refresh();
          since_refresh = 0;
          continue;
        }
        res.status = LpStatus::kInfeasible;
        if (p >= n_) res.infeasible_row = p - n_;
        break;
      }
      const std::size_t q = *enter;
      const double alpha_rq = alpha_row_[q];
      const double theta = d_[q] / alpha_rq;

      compute_pivot_column(q);
      if (std::abs(alpha_col_[r] - alpha_rq) > 1e-6 * (1.0 + std::abs(alpha_rq))) {
        // Row and column disagree: the inverse has drifted.
        refactor();
        since_refresh = 0;
        continue;
      }

      // Primal step.
      const double t = (x_[p] - target) / alpha_rq;
      x_[q] += t;
      for (std::size_t i : alpha_nz_) x_[basis_[i]] -= t * alpha_col_[i];
      x_[p] = target;

      // Dual step.
      for (std::size_t j : row_nz_) d_[j] -= theta * alpha_row_[j];
      d_[p] = -theta;
      d_[q] = 0.0;

      pivot(r, q);
      ++res.iterations;
      ++total_iterations_;
      ++since_refresh;
      ++since_refactor_;

      if (std::abs(theta) < 1e-12) {
        if (++degenerate > tol_.degenerate_before_bland) bland = true;
      } else {
        degenerate = 0;
        bland = false;
      }
      if (since_refactor_ >= tol_.refactor_interval) {
        refactor();
        since_refresh = 0;
      }
    }

    res.x.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
    for (std::size_t j = 0; j < n_; ++j) res.x[j] = std::clamp(res.x[j], lo_[j], up_[j]);
    res.objective = 0.0;
    for (std::size_t j = 0; j < n_; ++j) res.objective -= cost_[j] * res.x[j];
    res.duals = row_duals();
    return res;
  }

  /// Convenience: solve with the default [0,1] box on every structural.
  LpResult solve() {
    std::vector<double> lb(n_, 0.0), ub(n_, 1.0);
    return solve(lb, ub);
  }

 private:
  static constexpr std::size_t kNonbasic = static_cast<std::size_t>(-1);

  std::size_t iteration_cap() const { return 50 * (n_ + m_) + 10000; }

  bool is_basic(std::size_t j) const { return pos_[j] != kNonbasic; }

  // Column j of [A -I], scaled.
  template <typename F>
  void for_column(std::size_t j, F&& f) const {
    if (j < n_) {
      for (std::size_t k = col_start_[j]; k < col_start_[j + 1]; ++k) f(col_row_[k], col_val_[k]);
    } else {
      f(j - n_, -1.0);
    }
  }

  void install_bounds(std::span<const double> lb, std::span<const double> ub) {
    std::vector<std::pair<std::size_t, double>> moved;
    for (std::size_t j = 0; j < n_; ++j) {
      lo_[j] = lb[j];
      up_[j] = ub[j];
      if (is_basic(j)) continue;
      double want;
      if (lo_[j] == up_[j])
        want = lo_[j];
      else if (d_[j] > tol_.dual)
        want = lo_[j];
      else if (d_[j] < -tol_.dual)
        want = up_[j];
      else
        want = (x_[j] == up_[j]) ? up_[j] : lo_[j];
      if (want != x_[j]) {
        moved.emplace_back(j, want - x_[j]);
        x_[j] = want;
      }
    }
    if (moved.size() * 8 > m_ + 8) {
      recompute_primal();
      return;
    }
    // x_B = -B^{-1} N x_N, so a nonbasic move of delta shifts x_B by -delta * B^{-1} a_j.
    for (const auto& [j, delta] : moved) {
      compute_pivot_column(j);
      for (std::size_t i : alpha_nz_) x_[basis_[i]] -= delta * alpha_col_[i];
    }
  }

  std::optional<std::size_t> choose_leaving(bool bland) const {
    std::optional<std::size_t> best;
    double best_inf = 0.0;
    for (std::size_t r = 0; r < m_; ++r) {
      std::size_t j = basis_[r];
      double inf = 0.0;
      if (x_[j] < lo_[j] - tol_.primal)
        inf = lo_[j] - x_[j];
      else if (x_[j] > up_[j] + tol_.primal)
        inf = x_[j] - up_[j];
      if (inf == 0.0) continue;
      if (bland) {
        if (!best || j < basis_[*best]) best = r;
      } else if (inf > best_inf) {
        best_inf = inf;
        best = r;
      }
    }
    return best;
  }

  // alpha_row_[j] = (B^{-1} [A -I])_{r j} for nonbasic j; row_nz_ lists them.
  void compute_pivot_row(std::size_t r) {
    alpha_row_.assign(n_ + m_, 0.0);
    row_nz_.clear();
    const double* rho = &binv_[r * m_];
    for (std::size_t i = 0; i < m_; ++i) {
      const double ri = rho[i];
      if (ri == 0.0) continue;
      for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k)
        alpha_row_[row_col_[k]] += ri * row_val_[k];
      alpha_row_[n_ + i] = -ri;
    }
    for (std::size_t j = 0; j < n_ + m_; ++j)
      if (alpha_row_[j] != 0.0 && !is_basic(j)) row_nz_.push_back(j);
  }

  std::optional<std::size_t> choose_entering(bool to_lower, bool bland) const {
    // Leaving to its lower bound needs theta <= 0: candidates at lower with
    // alpha < 0 or at upper with alpha > 0. Leaving to upper is the mirror.
    auto candidate = [&](std::size_t j) {
      if (lo_[j] == up_[j]) return false;
      double a = alpha_row_[j];
      if (std::abs(a) < tol_.pivot) return false;
      bool at_upper = x_[j] == up_[j] && up_[j] != lo_[j];
      bool at_lower = !at_upper;
      if (to_lower) return (at_lower && a < 0.0) || (at_upper && a > 0.0);
      return (at_lower && a > 0.0) || (at_upper && a < 0.0);
    };
    if (bland) {
      std::optional<std::size_t> best;
      double best_ratio = kInf;
      for (std::size_t j : row_nz_) {
        if (!candidate(j)) continue;
        double ratio = std::abs(d_[j]) / std::abs(alpha_row_[j]);
        if (ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && best && j < *best)) {
          if (ratio < best_ratio) best_ratio = ratio;
          best = j;
        }
      }
      return best;
    }
    // Harris two-pass ratio test.
    double bound = kInf;
    for (std::size_t j : row_nz_)
      if (candidate(j))
        bound = std::min(bound, (std::abs(d_[j]) + tol_.dual) / std::abs(alpha_row_[j]));
    if (bound == kInf) return std::nullopt;
    std::optional<std::size_t> best;
    double best_alpha = 0.0;
    for (std::size_t j : row_nz_) {
      if (!candidate(j)) continue;
      double a = std::abs(alpha_row_[j]);
      if (std::abs(d_[j]) / a <= bound && a > best_alpha) {
        best_alpha = a;
        best = j;
      }
    }
    return best;
  }

  // alpha_col_ = B^{-1} a_q; alpha_nz_ lists nonzero positions.
  void compute_pivot_column(std::size_t q) {
    alpha_col_.assign(m_, 0.0);
    alpha_nz_.clear();
    for_column(q, [&](std::size_t k, double v) {
      for (std::size_t i = 0; i < m_; ++i) alpha_col_[i] += binv_[i * m_ + k] * v;
    });
    for (std::size_t i = 0; i < m_; ++i)
      if (alpha_col_[i] != 0.0) alpha_nz_.push_back(i);
  }

  void pivot(std::size_t r, std::size_t q) {
    const std::size_t p = basis_[r];
    double* row_r = &binv_[r * m_];
    const double inv = 1.0 / alpha_col_[r];
    std::vector<std::size_t>& nz = scratch_;
    nz.clear();
    for (std::size_t k = 0; k < m_; ++k)
      if (row_r[k] != 0.0) {
        row_r[k] *= inv;
        nz.push_back(k);
      }
    for (std::size_t i : alpha_nz_) {
      if (i == r) continue;
      const double f = alpha_col_[i];
      double* row_i = &binv_[i * m_];
      for (std::size_t k : nz) row_i[k] -= f * row_r[k];
    }
    basis_[r] = q;
    pos_[q] = r;
    pos_[p] = kNonbasic;
  }

  // x_B = -B^{-1} N x_N
  void recompute_primal() {
    std::vector<double> v(m_, 0.0);
    for (std::size_t j = 0; j < n_ + m_; ++j) {
      if (is_basic(j) || x_[j] == 0.0) continue;
      const double xj = x_[j];
      for_column(j, [&](std::size_t k, double a) { v[k] += a * xj; });
    }
    std::vector<std::size_t> nz;
    for (std::size_t k = 0; k < m_; ++k)
      if (v[k] != 0.0) nz.push_back(k);
    for (std::size_t r = 0; r < m_; ++r) {
      const double* row = &binv_[r * m_];
      double s = 0.0;
      for (std::size_t k : nz) s += row[k] * v[k];
      x_[basis_[r]] = -s;
    }
  }

  std::vector<double> pi() const {
    std::vector<double> out(m_, 0.0);
    for (std::size_t r = 0; r < m_; ++r) {
      const double cb = cost_[basis_[r]];
      if (cb == 0.0) continue;
      const double* row = &binv_[r * m_];
      for (std::size_t k = 0; k < m_; ++k) out[k] += cb * row[k];
    }
    return out;
  }

  void recompute_duals() {
    auto y = pi();
    for (std::size_t j = 0; j < n_ + m_; ++j) {
      if (is_basic(j)) {
        d_[j] = 0.0;
        continue;
      }
      double s = cost_[j];
      for_column(j, [&](std::size_t k, double a) { s -= y[k] * a; });
      d_[j] = s;
    }
    // Restore dual feasibility lost to drift by moving boxed nonbasics.
    bool moved = false;
    for (std::size_t j = 0; j < n_; ++j) {
      if (is_basic(j) || lo_[j] == up_[j]) continue;
      if (d_[j] < -tol_.dual && x_[j] != up_[j]) {
        x_[j] = up_[j];
        moved = true;
      } else if (d_[j] > tol_.dual && x_[j] != lo_[j]) {
        x_[j] = lo_[j];
        moved = true;
      }
    }
    if (moved) recompute_primal();
  }

  void refresh() {
    recompute_duals();
    recompute_primal();
  }

  /// Rebuilds B^{-1} from the basis by Gauss-Jordan with partial pivoting.
  void refactor() {
    std::vector<double> b(m_ * m_, 0.0);
    for (std::size_t r = 0; r < m_; ++r)
      for_column(basis_[r], [&](std::size_t k, double v) { b[k * m_ + r] = v; });
    std::vector<double>& inv = binv_;
    std::fill(inv.begin(), inv.end(), 0.0);
    for (std::size_t i = 0; i < m_; ++i) inv[i * m_ + i] = 1.0;
    std::vector<std::size_t> nz_b, nz_i;
    for (std::size_t c = 0; c < m_; ++c) {
      std::size_t piv = c;
      double best = std::abs(b[c * m_ + c]);
      for (std::size_t i = c + 1; i < m_; ++i)
        if (std::abs(b[i * m_ + c]) > best) {
          best = std::abs(b[i * m_ + c]);
          piv = i;
        }
      if (best < 1e-12) throw std::runtime_error("singular basis during refactorization");
      if (piv != c) {
        std::swap_ranges(b.begin() + static_cast<std::ptrdiff_t>(piv * m_),
                         b.begin() + static_cast<std::ptrdiff_t>((piv + 1) * m_),
                         b.begin() + static_cast<std::ptrdiff_t>(c * m_));
        std::swap_ranges(inv.begin() + static_cast<std::ptrdiff_t>(piv * m_),
                         inv.begin() + static_cast<std::ptrdiff_t>((piv + 1) * m_),
                         inv.begin() + static_cast<std::ptrdiff_t>(c * m_));
      }
      const double s = 1.0 / b[c * m_ + c];
      nz_b.clear();
      nz_i.clear();
      for (std::size_t k = 0; k < m_; ++k) {
        if (b[c * m_ + k] != 0.0) {
          b[c * m_ + k] *= s;
          nz_b.push_back(k);
        }
        if (inv[c * m_ + k] != 0.0) {
          inv[c * m_ + k] *= s;
          nz_i.push_back(k);
        }
      }
      for (std::size_t i = 0; i < m_; ++i) {
        if (i == c) continue;
        const double f = b[i * m_ + c];
        if (f == 0.0) continue;
        for (std::size_t k : nz_b) b[i * m_ + k] -= f * b[c * m_ + k];
        for (std::size_t k : nz_i) inv[i * m_ + k] -= f * inv[c * m_ + k];
      }
    }
    since_refactor_ = 0;
    refresh();
  }

  std::vector<double> row_duals() const {
    auto y = pi();
    for (std::size_t i = 0; i < m_; ++i) y[i] = -y[i] * row_scale_[i];
    return y;
  }

  SimplexTolerances tol_;
  std::size_t m_, n_;
  std::vector<double> cost_, lo_, up_, row_scale_;
  std::vector<std::size_t> row_start_, row_col_, col_start_, col_row_;
  std::vector<double> row_val_, col_val_;
  std::vector<std::size_t> basis_, pos_;
  std::vector<double> binv_, x_, d_;
  std::vector<double> alpha_row_, alpha_col_;
  std::vector<std::size_t> row_nz_, alpha_nz_, scratch_;
  std::size_t since_refactor_ = 0;
  std::size_t total_iterations_ = 0;
};

}  // namespace portfolio
