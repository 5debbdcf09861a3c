/**
 * @file ilp_builder.hpp
 * @brief Assembles the set-union knapsack model over an expansion.
 *
 * Variables are laid out as all pseudo-options first, then all
 * pseudo-projects. Only option variables carry objective weight; project
 * variables are tied to options through the two link row families:
 *
 *   proj-opt  sum_{j in S_i} x_j - |S_i| x_i >= 0   (choosing i buys all of S_i)
 *   opt-proj  sum_{i owns j} x_i - x_j >= 0          (j is bought only through an option)
 *
 * so a shared project enters the budget rows once no matter how many chosen
 * options reference it.
 */
#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "portfolio/core_model.hpp"
#include "portfolio/expansion.hpp"
#include "portfolio/ilp_model.hpp"

namespace portfolio {

class BuildError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Maps pseudo-option / pseudo-project indices to model variable indices.
struct VariableLayout {
  std::size_t num_options = 0;
  std::size_t num_projects = 0;

  explicit VariableLayout(const Expansion& e)
      : num_options(e.options.size()), num_projects(e.projects.size()) {}

  std::size_t option(std::size_t i) const { return i; }
  std::size_t project(std::size_t j) const { return num_options + j; }
  std::size_t size() const { return num_options + num_projects; }
};

namespace detail {

inline ConstraintRow make_row(std::string label, const std::map<std::size_t, double>& terms,
                              Relation rel, double rhs) {
  ConstraintRow row;
  row.label = std::move(label);
  for (const auto& [var, coef] : terms)
    if (coef != 0.0) row.terms.push_back({var, coef});
  row.relation = rel;
  row.rhs = rhs;
  return row;
}

inline bool trivially_satisfied(const ConstraintRow& r) {
  std::vector<double> none;
  return r.terms.empty() && r.satisfied(none, 0.0);
}

}  // namespace detail

/// At most one pseudo-option per family; exactly one for mandated families.
inline std::vector<ConstraintRow> add_family_constraints(const PortfolioInstance& instance,
                                                         const Expansion& e) {
  VariableLayout vars(e);
  std::vector<ConstraintRow> rows;
  for (const auto& f : instance.families) {
    std::map<std::size_t, double> terms;
    for (const auto& key : f.option_keys)
      if (auto it = e.options_by_source.find(key); it != e.options_by_source.end())
        for (std::size_t i : it->second) terms[vars.option(i)] = 1.0;
    rows.push_back(detail::make_row(row_label(row_family::kFamily, f.family_key), terms,
                                    f.mandated ? Relation::kEqual : Relation::kLessEqual, 1.0));
  }
  return rows;
}

/// Yearly spend between floor and ceiling for every budgeted year.
inline std::vector<ConstraintRow> add_budget_constraints(const PortfolioInstance& instance,
                                                         const Expansion& e) {
  VariableLayout vars(e);
  std::vector<BudgetLine> lines = instance.budget;
  std::sort(lines.begin(), lines.end(),
            [](const BudgetLine& a, const BudgetLine& b) { return a.year < b.year; });
  std::vector<ConstraintRow> rows;
  for (const auto& b : lines) {
    std::map<std::size_t, double> terms;
    for (std::size_t j = 0; j < e.projects.size(); ++j)
      if (auto it = e.projects[j].yearly_cost.find(b.year); it != e.projects[j].yearly_cost.end())
        terms[vars.project(j)] = static_cast<double>(it->second);
    const std::string year = std::to_string(b.year);
    auto hi = detail::make_row(row_label(row_family::kBudgetHi, year), terms,
                               Relation::kLessEqual, static_cast<double>(b.ceiling()));
    auto lo = detail::make_row(row_label(row_family::kBudgetLo, year), terms,
                               Relation::kGreaterEqual, static_cast<double>(b.floor()));
    if (!detail::trivially_satisfied(hi)) rows.push_back(std::move(hi));
    if (!detail::trivially_satisfied(lo)) rows.push_back(std::move(lo));
  }
  return rows;
}

/// Each project id is scheduled at most once across all variants and starts.
inline std::vector<ConstraintRow> add_schedule_constraints(const PortfolioInstance& instance,
                                                           const Expansion& e) {
  VariableLayout vars(e);
  std::vector<std::string> ids;
  std::map<std::string, std::map<std::size_t, double>> terms;
  for (const auto& p : instance.projects)
    if (!terms.count(p.project_id)) {
      ids.push_back(p.project_id);
      terms[p.project_id];
    }
  for (std::size_t j = 0; j < e.projects.size(); ++j)
    terms[e.projects[j].project_id][vars.project(j)] = 1.0;
  std::vector<ConstraintRow> rows;
  for (const auto& id : ids)
    if (!terms[id].empty())
      rows.push_back(detail::make_row(row_label(row_family::kSchedule, id), terms[id],
                                      Relation::kLessEqual, 1.0));
  return rows;
}

/// Choosing a pseudo-option forces all of its pseudo-projects.
inline std::vector<ConstraintRow> add_project_option_links(const Expansion& e) {
  VariableLayout vars(e);
  std::vector<ConstraintRow> rows;
  for (std::size_t i = 0; i < e.options.size(); ++i) {
    const auto& po = e.options[i];
    if (po.is_baseline()) continue;
    std::map<std::size_t, double> terms;
    for (const auto& [variant, j] : po.assignment) terms[vars.project(j)] += 1.0;
    terms[vars.option(i)] = -static_cast<double>(po.assignment.size());
    rows.push_back(detail::make_row(row_label(row_family::kProjOpt, po.pseudo_key), terms,
                                    Relation::kGreaterEqual, 0.0));
  }
  return rows;
}

/// A pseudo-project is only bought through some chosen pseudo-option.
inline std::vector<ConstraintRow> add_option_project_links(const Expansion& e) {
  VariableLayout vars(e);
  std::vector<std::map<std::size_t, double>> terms(e.projects.size());
  for (std::size_t i = 0; i < e.options.size(); ++i)
    for (const auto& [variant, j] : e.options[i].assignment) terms[j][vars.option(i)] = 1.0;
  std::vector<ConstraintRow> rows;
  for (std::size_t j = 0; j < e.projects.size(); ++j) {
    if (terms[j].empty())
      throw BuildError("pseudo-project " + e.projects[j].pseudo_key +
                       " is not contained in any option");
    terms[j][vars.project(j)] = -1.0;
    rows.push_back(detail::make_row(row_label(row_family::kOptProj, e.projects[j].pseudo_key),
                                    terms[j], Relation::kGreaterEqual, 0.0));
  }
  return rows;
}

/**
 * Mandated projects and options become equality rows; disabled options are
 * pinned to zero. Contradictory directives fail at build time.
 */
inline std::vector<ConstraintRow> add_mandates(const PortfolioInstance& instance,
                                               const Expansion& e) {
  VariableLayout vars(e);

  std::map<std::string, std::vector<std::string>> mandated_in_family;
  for (const auto& o : instance.options) {
    if (o.mandated && o.disabled)
      throw BuildError("option " + o.option_key + " is both mandated and disabled");
    if (o.mandated) mandated_in_family[o.family_key].push_back(o.option_key);
  }
  for (const auto& [family, keys] : mandated_in_family)
    if (keys.size() > 1)
      throw BuildError("family " + family + " has more than one mandated option (" + keys[0] +
                       ", " + keys[1] + ")");
  for (const auto& f : instance.families) {
    if (!f.mandated) continue;
    bool any_enabled = false;
    for (const auto& k : f.option_keys)
      if (const auto* o = instance.find_option(k); o && !o->disabled) any_enabled = true;
    if (!any_enabled)
      throw BuildError("mandated family " + f.family_key + " has every option disabled");
  }

  std::vector<ConstraintRow> rows;
  std::vector<std::string> ids;
  for (const auto& p : instance.projects)
    if (p.mandated && std::find(ids.begin(), ids.end(), p.project_id) == ids.end())
      ids.push_back(p.project_id);
  for (const auto& id : ids) {
    std::map<std::size_t, double> terms;
    for (std::size_t j = 0; j < e.projects.size(); ++j)
      if (e.projects[j].project_id == id) terms[vars.project(j)] = 1.0;
    rows.push_back(detail::make_row(row_label(row_family::kMandateProj, id), terms,
                                    Relation::kEqual, 1.0));
  }
  for (const auto& o : instance.options) {
    if (!o.mandated && !o.disabled) continue;
    std::map<std::size_t, double> terms;
    if (auto it = e.options_by_source.find(o.option_key); it != e.options_by_source.end())
      for (std::size_t i : it->second) terms[vars.option(i)] = 1.0;
    rows.push_back(detail::make_row(row_label(row_family::kMandateOpt, o.option_key), terms,
                                    Relation::kEqual, o.mandated ? 1.0 : 0.0));
  }
  return rows;
}

/// Assembles objective and every row family over an expansion.
inline IlpModel build_model(const PortfolioInstance& instance, const Expansion& e) {
  VariableLayout layout(e);
  IlpModel m;
  m.name = instance.label.empty() ? "portfolio" : instance.label;
  m.variables.reserve(layout.size());
  m.objective.reserve(layout.size());
  for (const auto& po : e.options) {
    m.variables.push_back({po.pseudo_key, VarKind::kOption});
    m.objective.push_back(po.value);
  }
  for (const auto& pp : e.projects) {
    m.variables.push_back({pp.pseudo_key, VarKind::kProject});
    m.objective.push_back(0.0);
  }
  auto append = [&](std::vector<ConstraintRow> rows) {
    for (auto& r : rows) m.constraints.push_back(std::move(r));
  };
  append(add_family_constraints(instance, e));
  append(add_budget_constraints(instance, e));
  append(add_schedule_constraints(instance, e));
  append(add_project_option_links(e));
  append(add_option_project_links(e));
  append(add_mandates(instance, e));
  return m;
}

}  // namespace portfolio
