/**
 * @file brute_force.hpp
 * @brief Exhaustive enumeration for small instances.
 *
 * Two independent enumerators, both choosing one pseudo-option (or none) per
 * family:
 *   - brute_force(instance, expansion) checks the instance rules directly
 *     (budget lines, one placement per project id, mandates, disabled options);
 *   - brute_force(model) reads families from the model rows, derives project
 *     variables from the ownership rows and checks every row.
 */
#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "portfolio/core_model.hpp"
#include "portfolio/expansion.hpp"
#include "portfolio/ilp_model.hpp"

namespace portfolio {

class OracleSizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kOracleLimit = std::uint64_t{1} << 24;

struct OracleResult {
  bool feasible = false;
  double value = 0.0;
  /// Options first, then projects, matching the model variable layout.
  std::vector<double> assignment;
  std::vector<std::size_t> chosen_options;  // pseudo-option indices
  std::uint64_t combinations = 0;
};

namespace oracle_detail {

inline std::uint64_t space_size(const std::vector<std::vector<std::size_t>>& choices) {
  std::uint64_t total = 1;
  for (const auto& c : choices) {
    std::uint64_t k = c.size() + 1;
    if (total > kOracleLimit / k) throw OracleSizeError("search space exceeds 2^24 assignments");
    total *= k;
  }
  return total;
}

/// Calls visit(pick) for every pick vector; pick[f] is an index into
/// choices[f] or npos for "none".
template <class Visit>
void enumerate(const std::vector<std::vector<std::size_t>>& choices, Visit&& visit) {
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> pick(choices.size(), none);
  while (true) {
    visit(pick);
    std::size_t f = 0;
    for (; f < choices.size(); ++f) {
      if (pick[f] == none) {
        if (!choices[f].empty()) {
          pick[f] = 0;
          break;
        }
      } else if (pick[f] + 1 < choices[f].size()) {
        ++pick[f];
        break;
      }
      pick[f] = none;
    }
    if (f == choices.size()) return;
  }
}

}  // namespace oracle_detail

inline OracleResult brute_force(const PortfolioInstance& instance, const Expansion& e) {
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::vector<std::size_t>> choices;
  std::vector<bool> family_mandated;
  for (const auto& f : instance.families) {
    std::vector<std::size_t> c;
    for (const auto& key : f.option_keys) {
      const auto* o = instance.find_option(key);
      if (!o || o->disabled) continue;
      if (auto it = e.options_by_source.find(key); it != e.options_by_source.end())
        c.insert(c.end(), it->second.begin(), it->second.end());
    }
    choices.push_back(std::move(c));
    family_mandated.push_back(f.mandated);
  }
  oracle_detail::space_size(choices);

  std::set<std::string> mandated_ids;
  for (const auto& p : instance.projects)
    if (p.mandated) mandated_ids.insert(p.project_id);
  std::vector<std::string> mandated_options;
  for (const auto& o : instance.options)
    if (o.mandated) mandated_options.push_back(o.option_key);

  OracleResult best;
  std::vector<std::size_t> chosen;
  std::set<std::size_t> projects;
  oracle_detail::enumerate(choices, [&](const std::vector<std::size_t>& pick) {
    ++best.combinations;
    chosen.clear();
    for (std::size_t f = 0; f < pick.size(); ++f) {
      if (pick[f] == none) {
        if (family_mandated[f]) return;
        continue;
      }
      chosen.push_back(choices[f][pick[f]]);
    }
    for (const auto& key : mandated_options) {
      bool hit = false;
      for (std::size_t i : chosen) hit = hit || e.options[i].source_option == key;
      if (!hit) return;
    }
    projects.clear();
    for (std::size_t i : chosen)
      for (const auto& [variant, j] : e.options[i].assignment) projects.insert(j);
    std::set<std::string> ids;
    std::map<Year, Money> spend;
    for (std::size_t j : projects) {
      if (!ids.insert(e.projects[j].project_id).second) return;
      for (const auto& [y, c] : e.projects[j].yearly_cost) spend[y] += c;
    }
    for (const auto& id : mandated_ids)
      if (!ids.count(id)) return;
    for (const auto& b : instance.budget) {
      Money s = spend.count(b.year) ? spend[b.year] : 0;
      if (s < b.floor() || s > b.ceiling()) return;
    }
    double value = 0.0;
    for (std::size_t i : chosen) value += e.options[i].value;
    if (!best.feasible || value > best.value) {
      best.feasible = true;
      best.value = value;
      best.chosen_options = chosen;
      best.assignment.assign(e.options.size() + e.projects.size(), 0.0);
      for (std::size_t i : chosen) best.assignment[i] = 1.0;
      for (std::size_t j : projects) best.assignment[e.options.size() + j] = 1.0;
    }
  });
  return best;
}

/**
 * Enumerates option variables family by family (rows labelled `family-*`),
 * sets each project variable to 1 exactly when some chosen option owns it
 * (rows labelled `opt-proj-*`) and keeps the best assignment satisfying all
 * rows.
 */
inline OracleResult brute_force(const IlpModel& model) {
  const std::size_t n = model.num_vars();
  std::vector<std::vector<std::size_t>> choices;
  std::vector<bool> in_family(n, false);
  for (const auto& r : model.constraints) {
    if (row_prefix(r.label) != row_family::kFamily) continue;
    std::vector<std::size_t> c;
    for (const auto& t : r.terms) {
      c.push_back(t.var);
      in_family[t.var] = true;
    }
    choices.push_back(std::move(c));
  }
  // Options outside any family row are enumerated on their own.
  for (std::size_t j = 0; j < n; ++j)
    if (model.variables[j].kind == VarKind::kOption && !in_family[j]) choices.push_back({j});
  oracle_detail::space_size(choices);

  std::vector<std::vector<std::size_t>> owners(n);
  for (const auto& r : model.constraints) {
    if (row_prefix(r.label) != row_family::kOptProj) continue;
    std::size_t project = n;
    for (const auto& t : r.terms)
      if (t.coef < 0) project = t.var;
    if (project == n) continue;
    for (const auto& t : r.terms)
      if (t.coef > 0) owners[project].push_back(t.var);
  }

  constexpr std::size_t none = static_cast<std::size_t>(-1);
  OracleResult best;
  std::vector<double> x(n);
  oracle_detail::enumerate(choices, [&](const std::vector<std::size_t>& pick) {
    ++best.combinations;
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t f = 0; f < pick.size(); ++f)
      if (pick[f] != none) x[choices[f][pick[f]]] = 1.0;
    for (std::size_t j = 0; j < n; ++j)
      if (model.variables[j].kind == VarKind::kProject)
        for (std::size_t i : owners[j])
          if (x[i] == 1.0) x[j] = 1.0;
    for (const auto& r : model.constraints)
      if (!r.satisfied(x, 1e-9)) return;
    double value = model.objective_value(x);
    if (!best.feasible || value > best.value) {
      best.feasible = true;
      best.value = value;
      best.assignment = x;
      best.chosen_options.clear();
      for (std::size_t j = 0; j < n; ++j)
        if (model.variables[j].kind == VarKind::kOption && x[j] == 1.0)
          best.chosen_options.push_back(j);
    }
  });
  return best;
}

}  // namespace portfolio
