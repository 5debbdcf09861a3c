#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "portfolio/core_model.hpp"
#include "portfolio/instance_io.hpp"

namespace testing_support {

inline std::filesystem::path fixture_dir() { return FIXTURE_DIR; }

inline portfolio::PortfolioInstance toy() {
  return portfolio::load_instance(fixture_dir() / "toy", portfolio::InstanceFormat::kDelimitedTable);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("portfolio_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

struct SmallShape {
  int max_families = 4;
  int max_options = 3;  // including the baseline
  int max_projects_per_option = 3;
  int max_window = 3;
  double share_probability = 0.3;
  std::uint64_t max_space = std::uint64_t{1} << 17;
};

/// Count of (one pseudo-option or none) choices across families, computed
/// from the raw instance: options multiply their projects' window widths.
inline std::uint64_t choice_space(const portfolio::PortfolioInstance& x) {
  std::uint64_t total = 1;
  for (const auto& f : x.families) {
    std::uint64_t k = 1;
    for (const auto& key : f.option_keys) {
      std::uint64_t combos = 1;
      for (const auto& ref : x.find_option(key)->project_refs)
        combos *= x.find_project(ref)->admissible_starts().size();
      k += combos;
    }
    total *= k;
  }
  return total;
}

/**
 * Small random instance with integer option values so that objective sums
 * compare exactly. Projects may be shared between options, some projects are
 * divestments, and mandates / disabled options appear at low rates.
 */
inline portfolio::PortfolioInstance random_small(std::uint64_t seed, const SmallShape& shape = {}) {
  using namespace portfolio;
  std::mt19937_64 rng(seed);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };

  while (true) {
    PortfolioInstance x;
    x.label = "random-" + std::to_string(seed);
    const Year first = 2030;
    int n_projects = 0;
    Year last = first;
    auto new_project = [&]() {
      Project p;
      p.variant_key = "P" + std::to_string(++n_projects);
      p.project_id = p.variant_key;
      p.name = p.variant_key;
      bool divest = coin(0.1);
      int duration = uni(1, 3);
      for (int k = 0; k < duration; ++k)
        p.cost_profile.push_back(divest ? -uni(1, 6) * 10 : uni(1, 9) * 10);
      int width = divest ? 1 : uni(1, shape.max_window);
      p.earliest_start = first + uni(0, 1);
      p.latest_start = p.earliest_start + width - 1;
      p.preferred_start = p.earliest_start;
      p.fixed_in_time = width == 1;
      p.mandated = coin(0.05);
      last = std::max(last, p.latest_start + duration - 1);
      x.projects.push_back(p);
      return p.variant_key;
    };

    int n_families = uni(1, shape.max_families);
    for (int f = 1; f <= n_families; ++f) {
      Family fam{"F" + std::to_string(f), {}, coin(0.15)};
      int n_options = uni(2, shape.max_options);
      for (int o = 0; o < n_options; ++o) {
        CapabilityOption opt;
        opt.option_key = fam.family_key + "." + std::to_string(o);
        opt.family_key = fam.family_key;
        if (o > 0) {
          int k = uni(1, shape.max_projects_per_option);
          for (int j = 0; j < k; ++j) {
            std::string ref;
            if (n_projects > 0 && coin(shape.share_probability))
              ref = x.projects[static_cast<std::size_t>(uni(0, n_projects - 1))].variant_key;
            else
              ref = new_project();
            if (std::find(opt.project_refs.begin(), opt.project_refs.end(), ref) ==
                opt.project_refs.end())
              opt.project_refs.push_back(ref);
          }
          int v1 = uni(1, 20);
          opt.value_schedule[first] = v1;
          opt.value_schedule[first + 3] = uni(0, v1);
          opt.disabled = coin(0.08);
          opt.mandated = !opt.disabled && coin(0.05);
        } else {
          opt.value_schedule[first] = 0;
        }
        fam.option_keys.push_back(opt.option_key);
        x.options.push_back(std::move(opt));
      }
      x.families.push_back(std::move(fam));
    }
    // At most one mandated option per family.
    for (const auto& fam : x.families) {
      bool seen = false;
      for (const auto& key : fam.option_keys) {
        auto* o = x.find_option(key);
        if (o->mandated && seen) o->mandated = false;
        seen = seen || o->mandated;
      }
    }

    Money demand = 0;
    for (const auto& p : x.projects)
      for (Money c : p.cost_profile) demand += std::max<Money>(c, 0);
    const int years = last - first + 1;
    for (Year y = first; y <= last; ++y) {
      Money b = std::max<Money>(10, demand * uni(30, 90) / 100 / years);
      x.budget.push_back({y, b, b * uni(95, 200) / 100, b * uni(0, 30) / 100});
    }
    if (!validate(x).empty()) continue;
    if (choice_space(x) > shape.max_space) continue;
    return x;
  }
}

}  // namespace testing_support
