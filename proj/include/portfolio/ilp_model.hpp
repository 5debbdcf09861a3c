/**
 * @file ilp_model.hpp
 * @brief Solver-agnostic binary linear model (maximization).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace portfolio {

enum class VarKind { kOption, kProject };
enum class Relation { kLessEqual, kGreaterEqual, kEqual };

inline const char* to_string(Relation r) {
  switch (r) {
    case Relation::kLessEqual: return "<=";
    case Relation::kGreaterEqual: return ">=";
    case Relation::kEqual: return "=";
  }
  return "?";
}

struct Variable {
  std::string name;  // pseudo key
  VarKind kind = VarKind::kOption;

  bool operator==(const Variable&) const = default;
};

struct Term {
  std::size_t var = 0;
  double coef = 0.0;

  bool operator==(const Term&) const = default;
};

/// One linear row. Terms are sorted by variable index with no duplicates.
struct ConstraintRow {
  std::string label;  // "<family>-<key>", e.g. "budget-hi-2021"
  std::vector<Term> terms;
  Relation relation = Relation::kLessEqual;
  double rhs = 0.0;

  double activity(const std::vector<double>& x) const {
    double s = 0.0;
    for (const auto& t : terms) s += t.coef * x[t.var];
    return s;
  }

  bool satisfied(const std::vector<double>& x, double tol = 1e-6) const {
    double a = activity(x);
    double scale = std::max(1.0, std::abs(rhs));
    switch (relation) {
      case Relation::kLessEqual: return a <= rhs + tol * scale;
      case Relation::kGreaterEqual: return a >= rhs - tol * scale;
      case Relation::kEqual: return std::abs(a - rhs) <= tol * scale;
    }
    return false;
  }

  std::optional<double> coef_of(std::size_t var) const {
    for (const auto& t : terms)
      if (t.var == var) return t.coef;
    return std::nullopt;
  }

  bool operator==(const ConstraintRow&) const = default;
};

struct IlpModel {
  std::vector<Variable> variables;
  std::vector<double> objective;  // one coefficient per variable
  std::vector<ConstraintRow> constraints;
  std::string name = "portfolio";

  std::size_t num_vars() const { return variables.size(); }

  std::optional<std::size_t> index_of(const std::string& var_name) const {
    for (std::size_t i = 0; i < variables.size(); ++i)
      if (variables[i].name == var_name) return i;
    return std::nullopt;
  }

  const ConstraintRow* find_row(const std::string& label) const {
    for (const auto& r : constraints)
      if (r.label == label) return &r;
    return nullptr;
  }

  double objective_value(const std::vector<double>& x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < objective.size(); ++j) s += objective[j] * x[j];
    return s;
  }

  /// Labels of rows the assignment violates.
  std::vector<std::string> violated_rows(const std::vector<double>& x, double tol = 1e-6) const {
    std::vector<std::string> out;
    for (const auto& r : constraints)
      if (!r.satisfied(x, tol)) out.push_back(r.label);
    return out;
  }

  bool operator==(const IlpModel&) const = default;
};

/// Row label prefixes.
namespace row_family {
inline constexpr const char* kFamily = "family";
inline constexpr const char* kBudgetHi = "budget-hi";
inline constexpr const char* kBudgetLo = "budget-lo";
inline constexpr const char* kSchedule = "schedule";
inline constexpr const char* kProjOpt = "proj-opt";
inline constexpr const char* kOptProj = "opt-proj";
inline constexpr const char* kMandateProj = "mandate-proj";
inline constexpr const char* kMandateOpt = "mandate-opt";

inline const std::vector<std::string>& all() {
  static const std::vector<std::string> prefixes = {
      kMandateProj, kMandateOpt, kBudgetHi, kBudgetLo, kProjOpt, kOptProj, kSchedule, kFamily};
  return prefixes;
}
}  // namespace row_family

inline std::string row_label(const char* prefix, const std::string& key) {
  return std::string(prefix) + "-" + key;
}

/// Prefix of a label, or empty when it carries none of the known families.
inline std::string row_prefix(const std::string& label) {
  for (const auto& p : row_family::all())
    if (label.size() > p.size() && label.compare(0, p.size(), p) == 0 && label[p.size()] == '-')
      return p;
  return {};
}

}  // namespace portfolio
