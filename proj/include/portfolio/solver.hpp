/**
 * @file solver.hpp
 * @brief Branch-and-bound over the LP relaxation, gap termination and
 *        continuous-relaxation rounding.
 */
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <vector>

#include "portfolio/dual_simplex.hpp"
#include "portfolio/ilp_model.hpp"

namespace portfolio {

enum class VariableCategory { kBinary, kContinuous };

enum class SolveStatus { kOptimal, kGapReached, kTimeLimit, kNodeLimit, kInfeasible, kUnbounded };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kGapReached: return "gap_reached";
    case SolveStatus::kTimeLimit: return "time_limit";
    case SolveStatus::kNodeLimit: return "node_limit";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
  }
  return "unknown";
}

/// Bounds after a node has been processed.
struct NodeTrace {
  std::size_t node = 0;
  double primal_bound = 0.0;
  double dual_bound = 0.0;
  double gap = 0.0;
  bool has_incumbent = false;
};

struct SolveOptions {
  VariableCategory variable_category = VariableCategory::kBinary;
  double gap_tolerance = 0.0;
  std::optional<double> time_limit;        // seconds
  std::optional<std::size_t> node_limit;
  double rounding_threshold = 0.5;
  std::size_t log_interval = 0;            // nodes between log lines, 0 = quiet
  std::ostream* log = nullptr;
  std::function<void(const NodeTrace&)> on_node;
};

struct SolveResult {
  SolveStatus status = SolveStatus::kInfeasible;
  std::vector<double> incumbent;  // 0/1 per variable, empty when none was found
  double primal_bound = -std::numeric_limits<double>::infinity();
  double dual_bound = std::numeric_limits<double>::infinity();
  double relative_gap = std::numeric_limits<double>::infinity();
  std::size_t nodes_explored = 0;
  std::size_t lp_iterations = 0;
  double wall_time = 0.0;
  /// Incumbent satisfies every row. Always true for binary solves that found
  /// one; may be false for a rounded continuous relaxation.
  bool feasible = false;
  /// Rows cited when the model is infeasible (or when rounding breaks rows).
  std::vector<std::string> infeasible_rows;

  bool has_incumbent() const { return std::isfinite(primal_bound); }
};

/**
 * |z_P - z_D| / |z_P|, defined as 0 when both are zero and infinity when only
 * z_P is zero.
 */
inline double relative_gap(double primal, double dual) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (!std::isfinite(primal) || !std::isfinite(dual)) return inf;
  if (primal == 0.0) return dual == 0.0 ? 0.0 : inf;
  return std::abs(primal - dual) / std::abs(primal);
}

/// Rows that cannot be satisfied by any point inside the variable box.
inline std::vector<std::string> conflicting_rows(const IlpModel& m, const std::vector<double>& lb,
                                                 const std::vector<double>& ub) {
  std::vector<std::string> out;
  for (const auto& r : m.constraints) {
    double lo = 0.0, hi = 0.0;
    for (const auto& t : r.terms) {
      lo += t.coef * (t.coef > 0 ? lb[t.var] : ub[t.var]);
      hi += t.coef * (t.coef > 0 ? ub[t.var] : lb[t.var]);
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(r.rhs));
    bool bad = false;
    switch (r.relation) {
      case Relation::kLessEqual: bad = lo > r.rhs + tol; break;
      case Relation::kGreaterEqual: bad = hi < r.rhs - tol; break;
      case Relation::kEqual: bad = lo > r.rhs + tol || hi < r.rhs - tol; break;
    }
    if (bad) out.push_back(r.label);
  }
  return out;
}

struct LpRelaxation {
  LpStatus status = LpStatus::kOptimal;
  std::vector<double> values;  // in [0,1]
  double objective = 0.0;      // valid upper bound on the binary optimum
  std::vector<double> duals;   // one multiplier per row
  std::vector<std::string> infeasible_rows;
  std::size_t iterations = 0;
};

inline LpRelaxation solve_lp_relaxation(const IlpModel& model) {
  DualSimplex lp(model);
  auto r = lp.solve();
  LpRelaxation out;
  out.status = r.status;
  out.values = std::move(r.x);
  out.objective = r.objective;
  out.duals = std::move(r.duals);
  out.iterations = r.iterations;
  if (r.status == LpStatus::kInfeasible) {
    std::vector<double> lb(model.num_vars(), 0.0), ub(model.num_vars(), 1.0);
    out.infeasible_rows = conflicting_rows(model, lb, ub);
    if (out.infeasible_rows.empty() && r.infeasible_row)
      out.infeasible_rows.push_back(model.constraints[*r.infeasible_row].label);
  }
  return out;
}

struct RoundedSolution {
  std::vector<double> assignment;
  bool feasible = false;
  double value = 0.0;
  std::vector<std::string> violated_rows;
};

/// Values below `threshold` go to 0, the rest to 1; feasibility is checked
/// against every row and the value sums chosen option coefficients.
inline RoundedSolution round_continuous(const std::vector<double>& relaxed, const IlpModel& model,
                                        double threshold = 0.5) {
  RoundedSolution out;
  out.assignment.resize(relaxed.size());
  for (std::size_t j = 0; j < relaxed.size(); ++j)
    out.assignment[j] = relaxed[j] < threshold ? 0.0 : 1.0;
  out.violated_rows = model.violated_rows(out.assignment, 1e-9);
  out.feasible = out.violated_rows.empty();
  for (std::size_t j = 0; j < model.num_vars(); ++j)
    if (model.variables[j].kind == VarKind::kOption && out.assignment[j] == 1.0)
      out.value += model.objective[j];
  return out;
}

namespace bnb_detail {

struct Node {
  std::vector<std::pair<std::uint32_t, std::uint8_t>> fixings;  // (var, value)
  double bound = 0.0;
  std::uint64_t id = 0;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;  // best bound on top
    return a.id > b.id;
  }
};

constexpr double kIntegrality = 1e-6;

inline double prune_tolerance(double incumbent) {
  return 1e-7 * std::max(1.0, std::abs(incumbent));
}

/// Most fractional variable; option variables take precedence over projects.
inline std::optional<std::size_t> branching_variable(const IlpModel& m,
                                                     const std::vector<double>& x) {
  for (VarKind kind : {VarKind::kOption, VarKind::kProject}) {
    std::optional<std::size_t> best;
    double best_dist = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (m.variables[j].kind != kind) continue;
      double frac = x[j] - std::floor(x[j]);
      if (frac <= kIntegrality || frac >= 1.0 - kIntegrality) continue;
      double dist = std::abs(frac - 0.5);
      if (dist < best_dist) {
        best_dist = dist;
        best = j;
      }
    }
    if (best) return best;
  }
  return std::nullopt;
}

}  // namespace bnb_detail

/**
 * Best-bound branch-and-bound with depth-first plunging.
 *
 * Each processed node re-solves the LP relaxation from the basis the previous
 * node left. The search stops when the tree is exhausted (optimal), when
 * relative_gap(z_P, z_D) <= gap_tolerance (gap_reached), or at a limit.
 */
inline SolveResult branch_and_bound(const IlpModel& model, const SolveOptions& options = {}) {
  using Clock = std::chrono::steady_clock;
  using namespace bnb_detail;
  const auto start = Clock::now();
  std::optional<Clock::time_point> deadline;
  if (options.time_limit)
    deadline = start + std::chrono::duration_cast<Clock::duration>(
                           std::chrono::duration<double>(*options.time_limit));

  SolveResult res;
  const std::size_t n = model.num_vars();
  DualSimplex lp(model);
  std::vector<double> lb(n), ub(n);

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  std::optional<Node> plunge;
  std::uint64_t next_id = 0;
  plunge = Node{{}, std::numeric_limits<double>::infinity(), next_id++};

  bool limit_hit = false;
  SolveStatus limit_status = SolveStatus::kTimeLimit;
  bool root_infeasible = false;
  std::vector<std::string> root_rows;

  auto open_bound = [&]() {
    double b = -std::numeric_limits<double>::infinity();
    if (!open.empty()) b = std::max(b, open.top().bound);
    if (plunge) b = std::max(b, plunge->bound);
    return b;
  };
  auto update_dual = [&]() {
    double b = std::max(open_bound(), res.primal_bound);
    res.dual_bound = std::min(res.dual_bound, b);
    res.relative_gap = res.has_incumbent() ? relative_gap(res.primal_bound, res.dual_bound)
                                           : std::numeric_limits<double>::infinity();
  };

  while (plunge || !open.empty()) {
    if (deadline && Clock::now() > *deadline) {
      limit_hit = true;
      limit_status = SolveStatus::kTimeLimit;
      break;
    }
    if (options.node_limit && res.nodes_explored >= *options.node_limit) {
      limit_hit = true;
      limit_status = SolveStatus::kNodeLimit;
      break;
    }

    Node node;
    if (plunge) {
      node = std::move(*plunge);
      plunge.reset();
    } else {
      node = open.top();
      open.pop();
    }
    if (res.has_incumbent() && node.bound <= res.primal_bound + prune_tolerance(res.primal_bound))
      continue;

    std::fill(lb.begin(), lb.end(), 0.0);
    std::fill(ub.begin(), ub.end(), 1.0);
    for (const auto& [var, val] : node.fixings) lb[var] = ub[var] = val;
    auto relax = lp.solve(lb, ub, deadline);
    ++res.nodes_explored;
    res.lp_iterations += relax.iterations;

    if (relax.status == LpStatus::kTimeLimit) {
      limit_hit = true;
      limit_status = SolveStatus::kTimeLimit;
      plunge = node;  // still open
      break;
    }

    if (relax.status == LpStatus::kInfeasible) {
      if (node.fixings.empty()) {
        root_infeasible = true;
        root_rows = conflicting_rows(model, lb, ub);
        if (root_rows.empty() && relax.infeasible_row)
          root_rows.push_back(model.constraints[*relax.infeasible_row].label);
      }
    } else if (!res.has_incumbent() ||
               relax.objective > res.primal_bound + prune_tolerance(res.primal_bound)) {
      auto branch_var = branching_variable(model, relax.x);
      if (!branch_var) {
        std::vector<double> x(n);
        for (std::size_t j = 0; j < n; ++j) x[j] = std::round(relax.x[j]);
        if (model.violated_rows(x, 1e-9).empty()) {
          double value = model.objective_value(x);
          if (!res.has_incumbent() || value > res.primal_bound) {
            res.incumbent = std::move(x);
            res.primal_bound = value;
          }
        }
      } else {
        const std::size_t j = *branch_var;
        const double bound = std::min(relax.objective, node.bound);
        Node down{node.fixings, bound, next_id++};
        down.fixings.emplace_back(static_cast<std::uint32_t>(j), 0);
        Node up{std::move(node.fixings), bound, next_id++};
        up.fixings.emplace_back(static_cast<std::uint32_t>(j), 1);
        if (relax.x[j] >= 0.5) {
          plunge = std::move(up);
          open.push(std::move(down));
        } else {
          plunge = std::move(down);
          open.push(std::move(up));
        }
      }
    }

    // Drop dominated open nodes from the bound computation lazily: the dual
    // bound never falls below the incumbent.
    update_dual();
    if (options.on_node)
      options.on_node({res.nodes_explored, res.primal_bound, res.dual_bound, res.relative_gap,
                       res.has_incumbent()});
    if (options.log && options.log_interval && res.nodes_explored % options.log_interval == 0)
      *options.log << "node=" << res.nodes_explored << " zP=" << res.primal_bound
                   << " zD=" << res.dual_bound << " gap=" << res.relative_gap << "\n";

    if (res.has_incumbent()) {
      if (res.dual_bound <= res.primal_bound + prune_tolerance(res.primal_bound)) {
        open = {};
        plunge.reset();
        break;
      }
      if (res.relative_gap <= options.gap_tolerance) {
        res.status = SolveStatus::kGapReached;
        res.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
        res.feasible = true;
        return res;
      }
    }
  }

  res.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
  if (limit_hit) {
    res.status = limit_status;
    res.feasible = res.has_incumbent();
    return res;
  }
  if (!res.has_incumbent()) {
    res.status = SolveStatus::kInfeasible;
    res.infeasible_rows = root_infeasible ? root_rows : std::vector<std::string>{};
    res.primal_bound = -std::numeric_limits<double>::infinity();
    res.dual_bound = -std::numeric_limits<double>::infinity();
    res.relative_gap = std::numeric_limits<double>::infinity();
    return res;
  }
  res.status = SolveStatus::kOptimal;
  res.dual_bound = res.primal_bound;
  res.relative_gap = relative_gap(res.primal_bound, res.dual_bound);
  res.feasible = true;
  if (options.log && options.log_interval)
    *options.log << "node=" << res.nodes_explored << " zP=" << res.primal_bound
                 << " zD=" << res.dual_bound << " gap=" << res.relative_gap << "\n";
  return res;
}

/// Dispatches on the variable category. The continuous category solves the
/// relaxation and rounds it; `feasible` then reports whether rounding kept
/// every row satisfied.
inline SolveResult solve(const IlpModel& model, const SolveOptions& options = {}) {
  if (options.variable_category == VariableCategory::kBinary)
    return branch_and_bound(model, options);

  const auto start = std::chrono::steady_clock::now();
  SolveResult res;
  auto relax = solve_lp_relaxation(model);
  res.lp_iterations = relax.iterations;
  res.nodes_explored = 1;
  if (relax.status == LpStatus::kInfeasible) {
    res.status = SolveStatus::kInfeasible;
    res.infeasible_rows = relax.infeasible_rows;
  } else {
    auto rounded = round_continuous(relax.values, model, options.rounding_threshold);
    res.status = SolveStatus::kOptimal;
    res.incumbent = std::move(rounded.assignment);
    res.primal_bound = rounded.value;
    res.dual_bound = relax.objective;
    res.relative_gap = relative_gap(res.primal_bound, res.dual_bound);
    res.feasible = rounded.feasible;
    res.infeasible_rows = std::move(rounded.violated_rows);
  }
  res.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace portfolio
