/**
 * @file datagen.hpp
 * @brief Synthetic instances with lognormal (duration, total cost) projects.
 *
 * Linear-knapsack mode gives every project its own option and every option
 * its own family. SUKP mode groups several options per family and lets an
 * option reuse projects already drawn for earlier options.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "portfolio/core_model.hpp"

namespace portfolio {

enum class Structure { kLinearKnapsack, kSukp };
enum class CostSpread { kTriangular, kUniform };

struct GenParams {
  int n_projects = 10;
  int n_start_years = 16;
  Year horizon_start = 2025;
  /// Durations are clipped to this many years.
  int max_duration = 10;
  std::array<double, 2> log_mean{1.1, 3.0};  // log duration, log total cost (thousands)
  std::array<std::array<double, 2>, 2> log_cov{{{0.3, 0.5 * std::sqrt(0.3 * 0.8)},
                                                {0.5 * std::sqrt(0.3 * 0.8), 0.8}}};
  /// Yearly budget as a fraction of the pool's concurrent yearly demand,
  /// the sum over projects of total cost / duration.
  double budget_fraction = 0.3;
  /// Slack as fractions of the yearly budget.
  double under_slack_fraction = 1.0;
  double over_slack_fraction = 0.0;
  CostSpread spread = CostSpread::kTriangular;
  Structure structure = Structure::kLinearKnapsack;
  double share_probability = 0.3;
  std::pair<int, int> options_per_family{2, 4};  // non-baseline options, SUKP mode
  int max_projects_per_option = 3;               // SUKP mode
  double value_decay = 0.05;                     // per year of later effectiveness
  std::uint64_t seed = 1;

  /// Helper for building a covariance from variances and a correlation.
  static std::array<std::array<double, 2>, 2> covariance(double var_duration, double var_cost,
                                                         double correlation) {
    double c = correlation * std::sqrt(var_duration * var_cost);
    return {{{var_duration, c}, {c, var_cost}}};
  }
};

class GenerationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace datagen_detail {

/// Lower Cholesky factor of a symmetric positive semi-definite 2x2 matrix.
inline std::array<double, 3> cholesky(const std::array<std::array<double, 2>, 2>& s) {
  constexpr double eps = 1e-12;
  if (std::abs(s[0][1] - s[1][0]) > eps * std::max(1.0, std::abs(s[0][1])))
    throw GenerationError("log covariance is not symmetric");
  if (s[0][0] < -eps || s[1][1] < -eps || s[0][0] * s[1][1] - s[0][1] * s[0][1] < -eps)
    throw GenerationError("log covariance is not positive semi-definite");
  double l00 = std::sqrt(std::max(0.0, s[0][0]));
  double l10 = l00 > 0 ? s[1][0] / l00 : 0.0;
  double l11 = std::sqrt(std::max(0.0, s[1][1] - l10 * l10));
  return {l00, l10, l11};
}

inline void check(const GenParams& p) {
  if (p.n_projects < 0) throw GenerationError("n_projects must be nonnegative");
  if (p.n_start_years < 1) throw GenerationError("n_start_years must be at least 1");
  if (p.max_duration < 1) throw GenerationError("max_duration must be at least 1");
  if (p.budget_fraction < 0) throw GenerationError("budget_fraction must be nonnegative");
  if (p.under_slack_fraction < 0 || p.over_slack_fraction < 0)
    throw GenerationError("slack fractions must be nonnegative");
  if (p.share_probability < 0 || p.share_probability > 1)
    throw GenerationError("share_probability must lie in [0, 1]");
  if (p.options_per_family.first < 1 || p.options_per_family.second < p.options_per_family.first)
    throw GenerationError("options_per_family must be a nonempty range");
  if (p.max_projects_per_option < 1) throw GenerationError("max_projects_per_option must be >= 1");
}

/// Splits `total` over `years` with triangular (or flat) weights using
/// largest remainders; every year receives at least 1.
inline std::vector<Money> spread_cost(Money total, int years, CostSpread spread) {
  total = std::max<Money>(total, years);
  std::vector<double> w(static_cast<std::size_t>(years));
  for (int k = 0; k < years; ++k)
    w[static_cast<std::size_t>(k)] =
        spread == CostSpread::kUniform ? 1.0 : std::min(k + 1, years - k);
  double sum = 0.0;
  for (double v : w) sum += v;
  Money spare = total - years;
  std::vector<Money> out(w.size(), 1);
  std::vector<std::pair<double, std::size_t>> rem;
  Money given = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    double share = static_cast<double>(spare) * w[k] / sum;
    auto whole = static_cast<Money>(std::floor(share));
    out[k] += whole;
    given += whole;
    rem.emplace_back(share - static_cast<double>(whole), k);
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; given < spare; ++i, ++given) ++out[rem[i % rem.size()].second];
  return out;
}

}  // namespace datagen_detail

/// Draws `n` correlated (log duration, log cost) pairs; exposed for moment checks.
inline std::vector<std::array<double, 2>> sample_log_pairs(const GenParams& p, std::size_t n,
                                                           std::mt19937_64& rng) {
  auto l = datagen_detail::cholesky(p.log_cov);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::array<double, 2>> out(n);
  for (auto& s : out) {
    double a = z(rng), b = z(rng);
    s = {p.log_mean[0] + l[0] * a, p.log_mean[1] + l[1] * a + l[2] * b};
  }
  return out;
}

inline PortfolioInstance generate_instance(const GenParams& p) {
  datagen_detail::check(p);
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> value_dist(0.1, 1.0);

  PortfolioInstance x;
  x.label = (p.structure == Structure::kSukp ? "sukp-" : "lk-") + std::to_string(p.n_projects) +
            "-s" + std::to_string(p.seed);
  const Year first = p.horizon_start;
  const Year last_start = first + p.n_start_years - 1;
  const Year last = last_start + p.max_duration - 1;

  auto pairs = sample_log_pairs(p, static_cast<std::size_t>(p.n_projects), rng);
  double concurrent_demand = 0.0;
  for (int i = 0; i < p.n_projects; ++i) {
    const auto& s = pairs[static_cast<std::size_t>(i)];
    int duration = static_cast<int>(std::lround(std::exp(s[0])));
    duration = std::clamp(duration, 1, p.max_duration);
    auto cost = static_cast<Money>(std::llround(std::exp(s[1])));
    Project prj;
    prj.variant_key = "P" + std::to_string(i + 1);
    prj.project_id = prj.variant_key;
    prj.name = prj.variant_key;
    prj.earliest_start = first;
    prj.latest_start = last_start;
    prj.preferred_start = first;
    prj.fixed_in_time = p.n_start_years == 1;
    prj.cost_profile = datagen_detail::spread_cost(cost, duration, p.spread);
    Money total = 0;
    for (Money c : prj.cost_profile) total += c;
    concurrent_demand += static_cast<double>(total) / duration;
    x.projects.push_back(std::move(prj));
  }

  // Value assessed every year of the horizon, decaying after the earliest
  // possible effective year of the option.
  auto make_value = [&](CapabilityOption& o, Year earliest_effective) {
    double v = value_dist(rng);
    for (Year y = first; y <= last + 1; ++y) {
      int late = std::max(0, y - earliest_effective);
      o.value_schedule[y] = v * std::pow(1.0 - p.value_decay, late);
    }
  };
  auto earliest_effective = [&](const CapabilityOption& o) {
    Year e = first;
    for (const auto& ref : o.project_refs) {
      const auto* prj = x.find_project(ref);
      e = std::max(e, prj->earliest_start + prj->duration());
    }
    return e;
  };
  auto add_family = [&](const std::string& key, int n_options, auto&& refs_for) {
    Family f{key, {}, false};
    CapabilityOption base;
    base.option_key = key + ".0";
    base.family_key = key;
    base.value_schedule[first] = 0.0;
    f.option_keys.push_back(base.option_key);
    x.options.push_back(std::move(base));
    for (int k = 1; k <= n_options; ++k) {
      CapabilityOption o;
      o.option_key = key + "." + std::to_string(k);
      o.family_key = key;
      o.project_refs = refs_for();
      make_value(o, earliest_effective(o));
      f.option_keys.push_back(o.option_key);
      x.options.push_back(std::move(o));
    }
    x.families.push_back(std::move(f));
  };

  if (p.structure == Structure::kLinearKnapsack) {
    for (int i = 0; i < p.n_projects; ++i) {
      std::string ref = x.projects[static_cast<std::size_t>(i)].variant_key;
      add_family("F" + std::to_string(i + 1), 1, [&] { return std::vector<std::string>{ref}; });
    }
  } else {
    // Each slot reuses an already drawn project with the share probability and
    // otherwise takes the next fresh one; once fresh projects run out every
    // slot reuses.
    std::size_t next = 0;
    int family = 0;
    std::uniform_int_distribution<int> per_family(p.options_per_family.first,
                                                  p.options_per_family.second);
    std::uniform_int_distribution<int> per_option(1, p.max_projects_per_option);
    while (next < x.projects.size()) {
      int n_options = per_family(rng);
      add_family("F" + std::to_string(++family), n_options, [&] {
        std::vector<std::string> refs;
        int k = per_option(rng);
        for (int j = 0; j < k; ++j) {
          bool reuse = next > 0 && (next >= x.projects.size() || unit(rng) < p.share_probability);
          std::size_t idx;
          if (reuse) {
            idx = std::uniform_int_distribution<std::size_t>(0, next - 1)(rng);
          } else if (next < x.projects.size()) {
            idx = next++;
          } else {
            break;
          }
          const auto& key = x.projects[idx].variant_key;
          if (std::find(refs.begin(), refs.end(), key) == refs.end()) refs.push_back(key);
        }
        if (refs.empty()) refs.push_back(x.projects[std::min(next, x.projects.size()) - 1].variant_key);
        return refs;
      });
    }
  }

  for (Year y = first; y <= last; ++y) {
    auto b = static_cast<Money>(std::llround(p.budget_fraction * concurrent_demand));
    x.budget.push_back({y, b, static_cast<Money>(std::llround(p.under_slack_fraction * b)),
                        static_cast<Money>(std::llround(p.over_slack_fraction * b))});
  }
  return x;
}

}  // namespace portfolio
