#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "portfolio/datagen.hpp"
#include "portfolio/ilp_builder.hpp"
#include "portfolio/instance_io.hpp"
#include "portfolio/solver.hpp"

using namespace portfolio;

TEST(Datagen, LinearKnapsackShape) {
  GenParams p;
  p.n_projects = 25;
  auto x = generate_instance(p);
  EXPECT_TRUE(validate(x).empty());
  EXPECT_EQ(x.families.size(), 25u);
  EXPECT_EQ(x.options.size(), 50u);
  for (const auto& o : x.options) EXPECT_LE(o.project_refs.size(), 1u);
  for (const auto& pr : x.projects) {
    EXPECT_EQ(pr.latest_start - pr.earliest_start + 1, 16);
    for (Money c : pr.cost_profile) EXPECT_GT(c, 0);
  }
  // No ownership row has more than one option term.
  auto m = build_model(x, expand(x));
  for (const auto& r : m.constraints)
    if (row_prefix(r.label) == row_family::kOptProj) EXPECT_EQ(r.terms.size(), 2u);
}

TEST(Datagen, SameSeedIsByteIdentical) {
  GenParams p;
  p.n_projects = 30;
  p.seed = 99;
  EXPECT_EQ(to_json(generate_instance(p)).dump(), to_json(generate_instance(p)).dump());
  p.structure = Structure::kSukp;
  EXPECT_EQ(to_json(generate_instance(p)).dump(), to_json(generate_instance(p)).dump());
  GenParams q = p;
  q.seed = 100;
  EXPECT_NE(to_json(generate_instance(p)).dump(), to_json(generate_instance(q)).dump());
}

TEST(Datagen, ZeroProjects) {
  GenParams p;
  p.n_projects = 0;
  auto x = generate_instance(p);
  EXPECT_TRUE(x.families.empty());
  EXPECT_TRUE(validate(x).empty());
  auto r = solve(build_model(x, expand(x)));
  EXPECT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_EQ(r.primal_bound, 0.0);
}

TEST(Datagen, InvalidCovariance) {
  GenParams p;
  p.log_cov = {{{1.0, 2.0}, {2.0, 1.0}}};
  EXPECT_THROW(generate_instance(p), GenerationError);
  p.log_cov = {{{1.0, 0.2}, {0.1, 1.0}}};
  EXPECT_THROW(generate_instance(p), GenerationError);
  p = {};
  p.n_start_years = 0;
  EXPECT_THROW(generate_instance(p), GenerationError);
}

TEST(Datagen, SukpSharesProjects) {
  int with_sharing = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    GenParams p;
    p.n_projects = 50;
    p.structure = Structure::kSukp;
    p.share_probability = 0.3;
    p.seed = seed;
    auto x = generate_instance(p);
    ASSERT_TRUE(validate(x).empty()) << seed;
    std::map<std::string, int> refs;
    for (const auto& o : x.options)
      for (const auto& r : o.project_refs) ++refs[r];
    bool shared = false;
    for (const auto& [k, n] : refs) shared = shared || n >= 2;
    with_sharing += shared;
    EXPECT_EQ(refs.size(), 50u);  // every project is used
  }
  EXPECT_GE(with_sharing, 95);
}

// Sample log-moments against the parameters, within three standard errors.
TEST(Datagen, LogMomentsConverge) {
  GenParams p;
  std::mt19937_64 rng(12345);
  const std::size_t n = 10000;
  auto s = sample_log_pairs(p, n, rng);
  double m0 = 0, m1 = 0;
  for (const auto& v : s) {
    m0 += v[0];
    m1 += v[1];
  }
  m0 /= n;
  m1 /= n;
  double v0 = 0, v1 = 0, c01 = 0;
  for (const auto& v : s) {
    v0 += (v[0] - m0) * (v[0] - m0);
    v1 += (v[1] - m1) * (v[1] - m1);
    c01 += (v[0] - m0) * (v[1] - m1);
  }
  v0 /= n - 1;
  v1 /= n - 1;
  c01 /= n - 1;
  const double s00 = p.log_cov[0][0], s11 = p.log_cov[1][1], s01 = p.log_cov[0][1];
  EXPECT_LE(std::abs(m0 - p.log_mean[0]), 3 * std::sqrt(s00 / n));
  EXPECT_LE(std::abs(m1 - p.log_mean[1]), 3 * std::sqrt(s11 / n));
  // Normal-theory standard errors of sample (co)variances.
  EXPECT_LE(std::abs(v0 - s00), 3 * s00 * std::sqrt(2.0 / (n - 1)));
  EXPECT_LE(std::abs(v1 - s11), 3 * s11 * std::sqrt(2.0 / (n - 1)));
  EXPECT_LE(std::abs(c01 - s01), 3 * std::sqrt((s00 * s11 + s01 * s01) / (n - 1)));
}

TEST(Datagen, CostSpread) {
  auto tri = datagen_detail::spread_cost(100, 5, CostSpread::kTriangular);
  EXPECT_EQ(std::accumulate(tri.begin(), tri.end(), Money{0}), 100);
  EXPECT_EQ(tri.size(), 5u);
  EXPECT_GT(tri[2], tri[0]);
  EXPECT_LE(std::abs(tri[0] - tri[4]), 1);
  auto flat = datagen_detail::spread_cost(10, 4, CostSpread::kUniform);
  EXPECT_EQ(std::accumulate(flat.begin(), flat.end(), Money{0}), 10);
  auto tiny = datagen_detail::spread_cost(1, 3, CostSpread::kTriangular);
  EXPECT_EQ(tiny, (std::vector<Money>{1, 1, 1}));
}

TEST(Datagen, ValuesDecayWithLaterEffectiveness) {
  GenParams p;
  p.n_projects = 5;
  auto x = generate_instance(p);
  for (const auto& o : x.options) {
    if (o.is_baseline()) continue;
    double v = o.value_at(2100);
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, o.value_at(p.horizon_start + 1) + 1e-12);
    EXPECT_GE(o.value_schedule.begin()->second, 0.1);
    EXPECT_LE(o.value_schedule.begin()->second, 1.0);
  }
}
