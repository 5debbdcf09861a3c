/**
 * @file expansion.hpp
 * @brief Turns project scheduling into pure selection.
 *
 * Every project is copied once per admissible start year (a pseudo-project),
 * and every option is copied once per combination of its projects' start
 * years (a pseudo-option). A pseudo-option is valued at the year all of its
 * projects have finished spending.
 *
 * Keys follow a dotted scheme: the earliest placement keeps the project key
 * (`P1`), later placements append an index (`P1.1`, `P1.2`). Options with more
 * than one combination append the combination index (`F1.1.0`, `F1.1.1`).
 */
#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "portfolio/core_model.hpp"

namespace portfolio {

class ExpansionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PseudoProject {
  std::string pseudo_key;
  std::string source_variant;
  std::string project_id;
  Year start_year = 0;
  Year duration = 0;
  std::map<Year, Money> yearly_cost;  // nonzero years only

  Year effective_year() const { return start_year + duration; }
};

struct PseudoOption {
  std::string pseudo_key;
  std::string source_option;
  std::string family_key;
  /// (variant key, index into Expansion::projects), in the option's reference order.
  std::vector<std::pair<std::string, std::size_t>> assignment;
  Year effective_year = 0;
  double value = 0.0;
  std::string last_effective_project;  // empty for baselines

  bool is_baseline() const { return assignment.empty(); }
};

struct ExpansionConfig {
  /// When false every project is pinned to its preferred start.
  bool schedule = true;
  /// Upper bound on pseudo-options generated from a single option.
  std::size_t max_combinations_per_option = 10000;
};

struct Expansion {
  std::vector<PseudoProject> projects;
  std::vector<PseudoOption> options;
  Year horizon_first = 0;
  Year horizon_last = -1;

  /// Pseudo-project indices for each source variant, ascending start year.
  std::map<std::string, std::vector<std::size_t>> projects_by_variant;
  /// Pseudo-option indices for each source option.
  std::map<std::string, std::vector<std::size_t>> options_by_source;
};

/**
 * Places a cost profile starting at `start_year`. Returns the nonzero yearly
 * costs; throws when any profile year falls outside [first, last].
 */
inline std::map<Year, Money> shift_profile(const std::vector<Money>& profile, Year start_year,
                                           Year horizon_first, Year horizon_last) {
  Year end = start_year + static_cast<Year>(profile.size()) - 1;
  if (!profile.empty() && (start_year < horizon_first || end > horizon_last))
    throw ExpansionError("profile placed at " + std::to_string(start_year) + ".." +
                         std::to_string(end) + " exits the horizon " +
                         std::to_string(horizon_first) + ".." + std::to_string(horizon_last));
  std::map<Year, Money> out;
  for (std::size_t k = 0; k < profile.size(); ++k)
    if (profile[k] != 0) out[start_year + static_cast<Year>(k)] = profile[k];
  return out;
}

namespace detail {
inline std::vector<Year> starts_for(const Project& p, const ExpansionConfig& cfg) {
  if (!cfg.schedule) return {p.preferred_start};
  return p.admissible_starts();
}
}  // namespace detail

/// One pseudo-project per admissible start year of every project.
inline std::vector<PseudoProject> expand_projects(const PortfolioInstance& instance,
                                                  const ExpansionConfig& cfg = {}) {
  auto horizon = instance.horizon();
  std::vector<PseudoProject> out;
  for (const auto& p : instance.projects) {
    auto starts = detail::starts_for(p, cfg);
    for (std::size_t k = 0; k < starts.size(); ++k) {
      PseudoProject pp;
      pp.pseudo_key = k == 0 ? p.variant_key : p.variant_key + "." + std::to_string(k);
      pp.source_variant = p.variant_key;
      pp.project_id = p.project_id;
      pp.start_year = starts[k];
      pp.duration = p.duration();
      if (!horizon) throw ExpansionError("instance has no budget horizon");
      try {
        pp.yearly_cost = shift_profile(p.cost_profile, starts[k], horizon->first, horizon->second);
      } catch (const ExpansionError& e) {
        throw ExpansionError("project " + p.variant_key + ": " + e.what());
      }
      out.push_back(std::move(pp));
    }
  }
  return out;
}

/**
 * Effective year of a pseudo-option and the project that sets it: the latest
 * start + duration among its pseudo-projects (ties go to the later-listed
 * project). Baselines take the first horizon year and no project.
 */
inline std::pair<Year, std::string> find_epoch(const PseudoOption& option,
                                               const std::vector<PseudoProject>& projects,
                                               Year horizon_first) {
  if (option.assignment.empty()) return {horizon_first, {}};
  Year best = 0;
  std::string last;
  bool first = true;
  for (const auto& [variant, idx] : option.assignment) {
    Year eff = projects.at(idx).effective_year();
    if (first || eff >= best) {
      best = eff;
      last = variant;
      first = false;
    }
  }
  return {best, last};
}

/// Cartesian product of start choices for each option.
inline std::vector<PseudoOption> expand_options(
    const PortfolioInstance& instance, const std::vector<PseudoProject>& pseudo_projects,
    const ExpansionConfig& cfg = {}) {
  auto horizon = instance.horizon();
  Year first_year = horizon ? horizon->first : 0;

  std::unordered_map<std::string, std::vector<std::size_t>> by_variant;
  for (std::size_t i = 0; i < pseudo_projects.size(); ++i)
    by_variant[pseudo_projects[i].source_variant].push_back(i);

  std::vector<PseudoOption> out;
  for (const auto& o : instance.options) {
    std::vector<const std::vector<std::size_t>*> choices;
    std::size_t total = 1;
    for (const auto& ref : o.project_refs) {
      auto it = by_variant.find(ref);
      if (it == by_variant.end() || it->second.empty())
        throw ExpansionError("option " + o.option_key + " references unknown project " + ref);
      choices.push_back(&it->second);
      const std::size_t cap = cfg.max_combinations_per_option + 1;
      total = total > cap / it->second.size() ? cap : total * it->second.size();
    }
    if (total > cfg.max_combinations_per_option)
      throw ExpansionError("option " + o.option_key + " expands to more than " +
                           std::to_string(cfg.max_combinations_per_option) + " pseudo-options");

    // Mixed-radix counter, last project varying fastest.
    std::vector<std::size_t> digit(choices.size(), 0);
    for (std::size_t k = 0; k < total; ++k) {
      PseudoOption po;
      po.pseudo_key = total == 1 ? o.option_key : o.option_key + "." + std::to_string(k);
      po.source_option = o.option_key;
      po.family_key = o.family_key;
      for (std::size_t j = 0; j < choices.size(); ++j)
        po.assignment.emplace_back(o.project_refs[j], (*choices[j])[digit[j]]);
      auto [eff, last] = find_epoch(po, pseudo_projects, first_year);
      po.effective_year = eff;
      po.last_effective_project = last;
      po.value = o.is_baseline() ? 0.0 : o.value_at(eff);
      out.push_back(std::move(po));

      for (std::size_t j = choices.size(); j-- > 0;) {
        if (++digit[j] < choices[j]->size()) break;
        digit[j] = 0;
      }
    }
  }
  return out;
}

/// Full expansion with index maps. Pseudo keys are checked for uniqueness.
inline Expansion expand(const PortfolioInstance& instance, const ExpansionConfig& cfg = {}) {
  Expansion e;
  if (auto h = instance.horizon()) {
    e.horizon_first = h->first;
    e.horizon_last = h->second;
  }
  e.projects = expand_projects(instance, cfg);
  e.options = expand_options(instance, e.projects, cfg);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < e.projects.size(); ++i) {
    if (!seen.insert(e.projects[i].pseudo_key).second)
      throw ExpansionError("pseudo key collision: " + e.projects[i].pseudo_key);
    e.projects_by_variant[e.projects[i].source_variant].push_back(i);
  }
  for (std::size_t i = 0; i < e.options.size(); ++i) {
    if (!seen.insert(e.options[i].pseudo_key).second)
      throw ExpansionError("pseudo key collision: " + e.options[i].pseudo_key);
    e.options_by_source[e.options[i].source_option].push_back(i);
  }
  return e;
}

}  // namespace portfolio
