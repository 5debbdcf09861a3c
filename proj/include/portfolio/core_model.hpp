/**
 * @file core_model.hpp
 * @brief Domain types for the family / capability-option / project hierarchy.
 *
 * A portfolio instance is a set of families, each holding mutually exclusive
 * capability options. An option references zero or more projects (zero for a
 * family's baseline option). Projects carry a yearly cost profile and a start
 * window; the yearly budget lines bound what the selected projects may spend.
 *
 * Currency is held as integer thousands so every budget sum is exact.
 */
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace portfolio {

using Year = int;
using Money = std::int64_t;  // currency, integer thousands

struct Project {
  std::string variant_key;
  std::string project_id;
  std::string name;
  bool mandated = false;
  bool fixed_in_time = false;
  Year preferred_start = 0;
  Year earliest_start = 0;
  Year latest_start = 0;
  std::vector<Money> cost_profile;

  /// All-negative profiles are divestments (returned funds).
  bool is_divestment() const {
    return !cost_profile.empty() &&
           std::all_of(cost_profile.begin(), cost_profile.end(),
                       [](Money c) { return c < 0; });
  }

  /// Admissible start years in ascending order.
  std::vector<Year> admissible_starts() const {
    if (fixed_in_time) return {preferred_start};
    std::vector<Year> out;
    for (Year y = earliest_start; y <= latest_start; ++y) out.push_back(y);
    return out;
  }

  Year duration() const { return static_cast<Year>(cost_profile.size()); }

  bool operator==(const Project&) const = default;
};

struct CapabilityOption {
  std::string option_key;
  std::string family_key;
  std::vector<std::string> project_refs;  // variant keys; empty for baseline
  std::map<Year, double> value_schedule;  // effective year -> value
  bool mandated = false;
  bool disabled = false;

  bool is_baseline() const { return project_refs.empty(); }

  /// Value at an effective year: the nearest assessed year at or before it,
  /// otherwise zero.
  double value_at(Year effective_year) const {
    auto it = value_schedule.upper_bound(effective_year);
    if (it == value_schedule.begin()) return 0.0;
    return std::prev(it)->second;
  }

  bool operator==(const CapabilityOption&) const = default;
};

struct Family {
  std::string family_key;
  std::vector<std::string> option_keys;
  bool mandated = false;

  bool operator==(const Family&) const = default;
};

struct BudgetLine {
  Year year = 0;
  Money budget = 0;
  Money under_slack = 0;  // allowed under-programming
  Money over_slack = 0;   // allowed over-programming

  Money floor() const { return budget - under_slack; }
  Money ceiling() const { return budget + over_slack; }

  bool operator==(const BudgetLine&) const = default;
};

struct PortfolioInstance {
  std::vector<Family> families;
  std::vector<CapabilityOption> options;
  std::vector<Project> projects;
  std::vector<BudgetLine> budget;
  std::string label;

  const Project* find_project(const std::string& variant_key) const {
    for (const auto& p : projects)
      if (p.variant_key == variant_key) return &p;
    return nullptr;
  }
  Project* find_project(const std::string& variant_key) {
    for (auto& p : projects)
      if (p.variant_key == variant_key) return &p;
    return nullptr;
  }
  const CapabilityOption* find_option(const std::string& option_key) const {
    for (const auto& o : options)
      if (o.option_key == option_key) return &o;
    return nullptr;
  }
  CapabilityOption* find_option(const std::string& option_key) {
    for (auto& o : options)
      if (o.option_key == option_key) return &o;
    return nullptr;
  }
  const Family* find_family(const std::string& family_key) const {
    for (const auto& f : families)
      if (f.family_key == family_key) return &f;
    return nullptr;
  }
  Family* find_family(const std::string& family_key) {
    for (auto& f : families)
      if (f.family_key == family_key) return &f;
    return nullptr;
  }

  /// Planning horizon [first, last] spanned by the budget lines.
  std::optional<std::pair<Year, Year>> horizon() const {
    if (budget.empty()) return std::nullopt;
    auto [lo, hi] = std::minmax_element(
        budget.begin(), budget.end(),
        [](const BudgetLine& a, const BudgetLine& b) { return a.year < b.year; });
    return std::make_pair(lo->year, hi->year);
  }

  bool operator==(const PortfolioInstance&) const = default;
};

/// One broken invariant. `rule` is a stable machine-readable code.
struct Violation {
  std::string rule;
  std::string key;
  std::string message;

  auto operator<=>(const Violation&) const = default;
};

namespace rules {
inline constexpr const char* kDuplicateKey = "duplicate_key";
inline constexpr const char* kWindowOrder = "window_order";
inline constexpr const char* kEmptyProfile = "empty_profile";
inline constexpr const char* kDivestmentNotFixed = "divestment_not_fixed";
inline constexpr const char* kVariantMultiFamily = "variant_multi_family";
inline constexpr const char* kBaselineValue = "baseline_value_nonzero";
inline constexpr const char* kNegativeValue = "negative_value";
inline constexpr const char* kMandatedAndDisabled = "mandated_and_disabled";
inline constexpr const char* kUnresolvedProject = "unresolved_project_ref";
inline constexpr const char* kUnknownFamily = "unknown_family";
inline constexpr const char* kUnknownOption = "unknown_option";
inline constexpr const char* kOptionMembership = "option_membership";
inline constexpr const char* kEmptyFamily = "family_empty";
inline constexpr const char* kNoBaseline = "family_without_baseline";
inline constexpr const char* kKeyCollision = "key_collision";
inline constexpr const char* kBudgetGap = "budget_not_contiguous";
inline constexpr const char* kNegativeSlack = "negative_slack";
inline constexpr const char* kHorizonCoverage = "horizon_coverage";
}  // namespace rules

/**
 * Checks every structural invariant of an instance.
 *
 * Violations are data: the returned list is empty iff the instance is
 * consistent. The list is sorted, so the result does not depend on the order
 * of records inside the instance.
 */
inline std::vector<Violation> validate(const PortfolioInstance& instance) {
  std::vector<Violation> out;
  auto add = [&](const char* rule, const std::string& key, std::string msg) {
    out.push_back({rule, key, std::move(msg)});
  };

  std::unordered_map<std::string, int> family_count, option_count, project_count;
  for (const auto& f : instance.families) ++family_count[f.family_key];
  for (const auto& o : instance.options) ++option_count[o.option_key];
  for (const auto& p : instance.projects) ++project_count[p.variant_key];
  for (const auto& [k, n] : family_count)
    if (n > 1) add(rules::kDuplicateKey, k, "family key '" + k + "' is defined more than once");
  for (const auto& [k, n] : option_count)
    if (n > 1) add(rules::kDuplicateKey, k, "option key '" + k + "' is defined more than once");
  for (const auto& [k, n] : project_count)
    if (n > 1) add(rules::kDuplicateKey, k, "project variant '" + k + "' is defined more than once");
  for (const auto& [k, n] : option_count)
    if (project_count.count(k))
      add(rules::kKeyCollision, k, "'" + k + "' names both an option and a project");

  // Projects.
  for (const auto& p : instance.projects) {
    if (!(p.earliest_start <= p.preferred_start && p.preferred_start <= p.latest_start))
      add(rules::kWindowOrder, p.variant_key,
          "start window must satisfy earliest <= preferred <= latest");
    if (p.cost_profile.empty())
      add(rules::kEmptyProfile, p.variant_key, "cost profile is empty");
    else if (p.is_divestment() && !p.fixed_in_time)
      add(rules::kDivestmentNotFixed, p.variant_key, "divestment projects must be fixed in time");
  }

  // Options.
  std::map<std::string, std::set<std::string>> families_of_option;
  for (const auto& f : instance.families)
    for (const auto& k : f.option_keys) families_of_option[k].insert(f.family_key);

  for (const auto& o : instance.options) {
    if (o.mandated && o.disabled)
      add(rules::kMandatedAndDisabled, o.option_key, "option is both mandated and disabled");
    for (const auto& [year, v] : o.value_schedule) {
      if (v < 0.0)
        add(rules::kNegativeValue, o.option_key,
            "value at " + std::to_string(year) + " is negative");
      if (o.is_baseline() && v != 0.0)
        add(rules::kBaselineValue, o.option_key,
            "baseline option has nonzero value at " + std::to_string(year));
    }
    for (const auto& ref : o.project_refs)
      if (!project_count.count(ref))
        add(rules::kUnresolvedProject, o.option_key, "project '" + ref + "' does not exist");
    if (!family_count.count(o.family_key))
      add(rules::kUnknownFamily, o.option_key, "family '" + o.family_key + "' does not exist");
    auto it = families_of_option.find(o.option_key);
    if (it == families_of_option.end() || it->second.size() != 1 ||
        *it->second.begin() != o.family_key)
      add(rules::kOptionMembership, o.option_key,
          "option must be listed by exactly its own family");
  }

  // Families.
  for (const auto& f : instance.families) {
    if (f.option_keys.empty()) {
      add(rules::kEmptyFamily, f.family_key, "family has no options");
      continue;
    }
    bool has_baseline = false;
    for (const auto& k : f.option_keys) {
      const auto* o = instance.find_option(k);
      if (!o)
        add(rules::kUnknownOption, f.family_key, "option '" + k + "' does not exist");
      else if (o->is_baseline())
        has_baseline = true;
    }
    if (!has_baseline)
      add(rules::kNoBaseline, f.family_key, "family has no baseline option");
  }

  // A project id with several variants may only be referenced from one family.
  std::map<std::string, std::set<std::string>> variants_of_id;
  for (const auto& p : instance.projects) variants_of_id[p.project_id].insert(p.variant_key);
  std::map<std::string, std::set<std::string>> families_of_id;
  for (const auto& o : instance.options)
    for (const auto& ref : o.project_refs)
      if (const auto* p = instance.find_project(ref))
        families_of_id[p->project_id].insert(o.family_key);
  for (const auto& [id, variants] : variants_of_id)
    if (variants.size() > 1 && families_of_id[id].size() > 1)
      add(rules::kVariantMultiFamily, id,
          "project with variants may appear in options of only one family");

  // Budget.
  std::vector<Year> years;
  for (const auto& b : instance.budget) {
    years.push_back(b.year);
    if (b.under_slack < 0 || b.over_slack < 0)
      add(rules::kNegativeSlack, std::to_string(b.year), "budget slack must be nonnegative");
  }
  std::sort(years.begin(), years.end());
  for (std::size_t i = 1; i < years.size(); ++i) {
    if (years[i] == years[i - 1])
      add(rules::kDuplicateKey, std::to_string(years[i]), "budget year defined more than once");
    else if (years[i] != years[i - 1] + 1)
      add(rules::kBudgetGap, std::to_string(years[i - 1]),
          "budget years must form a contiguous horizon");
  }

  auto horizon = instance.horizon();
  for (const auto& p : instance.projects) {
    if (p.cost_profile.empty()) continue;
    auto starts = p.admissible_starts();
    if (starts.empty()) continue;
    Year first = starts.front();
    Year last = starts.back() + p.duration() - 1;
    if (!horizon || first < horizon->first || last > horizon->second)
      add(rules::kHorizonCoverage, p.variant_key,
          "admissible years " + std::to_string(first) + ".." + std::to_string(last) +
              " fall outside the planning horizon");
  }

  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Raised when an instance that must be valid is not.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Violation> violations)
      : std::runtime_error(summarize(violations)), violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const { return violations_; }

 private:
  static std::string summarize(const std::vector<Violation>& v) {
    std::string s = "instance has " + std::to_string(v.size()) + " violation(s)";
    for (const auto& x : v) s += "\n  [" + x.rule + "] " + x.key + ": " + x.message;
    return s;
  }
  std::vector<Violation> violations_;
};

}  // namespace portfolio
