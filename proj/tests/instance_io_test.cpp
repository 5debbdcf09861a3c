#include <gtest/gtest.h>

#include <fstream>

#include "portfolio/instance_io.hpp"
#include "support/fixtures.hpp"

using namespace portfolio;

TEST(LoadInstance, ToyTables) {
  auto x = testing_support::toy();
  EXPECT_EQ(x.label, "toy");
  EXPECT_EQ(x.families.size(), 2u);
  EXPECT_EQ(x.options.size(), 5u);
  std::set<std::string> referenced;
  for (const auto& o : x.options)
    for (const auto& r : o.project_refs) referenced.insert(r);
  EXPECT_EQ(referenced, (std::set<std::string>{"P1", "P2", "P3", "P4", "P5", "P6"}));

  const auto* p1 = x.find_project("P1");
  EXPECT_TRUE(p1->mandated);
  EXPECT_FALSE(p1->fixed_in_time);
  EXPECT_EQ(p1->earliest_start, 2021);
  EXPECT_EQ(p1->latest_start, 2023);
  EXPECT_EQ(p1->cost_profile, (std::vector<Money>{3000, 2300}));
  const auto* p2 = x.find_project("P2");
  EXPECT_TRUE(p2->fixed_in_time);
  EXPECT_EQ(p2->preferred_start, 2022);
  EXPECT_EQ(p2->cost_profile, (std::vector<Money>{1500}));
  EXPECT_TRUE(x.find_project("P3")->is_divestment());
  EXPECT_EQ(x.find_option("F2.1")->value_at(2023), 0.5);
  EXPECT_EQ(x.budget.size(), 4u);
  EXPECT_EQ(x.budget[0].floor(), -1000);
  EXPECT_EQ(x.budget[0].ceiling(), 6500);
}

TEST(LoadInstance, StructuredFixtureMatchesTables) {
  auto tables = testing_support::toy();
  auto doc = load_instance(testing_support::fixture_dir() / "toy.json");
  EXPECT_EQ(doc, tables);
}

TEST(LoadInstance, RoundTripBothFormats) {
  auto x = testing_support::toy();
  auto dir = testing_support::scratch_dir("roundtrip");
  write_instance(x, dir / "tables", InstanceFormat::kDelimitedTable);
  write_instance(x, dir / "doc.json", InstanceFormat::kStructuredText);
  EXPECT_EQ(load_instance(dir / "tables", InstanceFormat::kDelimitedTable), x);
  EXPECT_EQ(load_instance(dir / "doc.json", InstanceFormat::kStructuredText), x);
}

TEST(LoadInstance, RoundTripRandomInstances) {
  auto dir = testing_support::scratch_dir("roundtrip_random");
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto x = testing_support::random_small(seed);
    x.label = "r" + std::to_string(seed);
    write_instance(x, dir / x.label, InstanceFormat::kDelimitedTable);
    write_instance(x, dir / (x.label + ".json"), InstanceFormat::kStructuredText);
    EXPECT_EQ(load_instance(dir / x.label), x) << seed;
    EXPECT_EQ(load_instance(dir / (x.label + ".json")), x) << seed;
  }
}

TEST(LoadInstance, EmptyFamilySet) {
  auto dir = testing_support::scratch_dir("empty_families");
  std::ofstream(dir / "doc.json")
      << R"({"label":"x","families":[],"options":[],"projects":[],"budget":[]})";
  try {
    load_instance(dir / "doc.json");
    FAIL() << "expected an error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("family set empty"), std::string::npos);
  }

  std::filesystem::create_directories(dir / "tables");
  std::ofstream(dir / "tables" / "families.csv") << "Family,Option,Projects,Mandated,Disabled\n";
  try {
    load_instance(dir / "tables");
    FAIL() << "expected an error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("family set empty"), std::string::npos);
  }
}

TEST(LoadInstance, DuplicateVariantIsNamed) {
  auto x = testing_support::toy();
  x.projects.push_back(*x.find_project("P4"));
  auto dir = testing_support::scratch_dir("duplicate");
  write_instance(x, dir / "doc.json", InstanceFormat::kStructuredText);
  try {
    load_instance(dir / "doc.json");
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    bool named = false;
    for (const auto& v : e.violations()) named = named || (v.rule == rules::kDuplicateKey && v.key == "P4");
    EXPECT_TRUE(named);
  }
}

TEST(LoadInstance, ParseErrorCarriesLocation) {
  auto dir = testing_support::scratch_dir("bad_cell");
  std::filesystem::copy(testing_support::fixture_dir() / "toy", dir / "toy");
  {
    std::ofstream out(dir / "toy" / "budget.csv");
    out << "Year,Budget,UnderSlack,OverSlack\n2021,6000,7000,500\n2022,lots,7000,500\n";
  }
  try {
    load_instance(dir / "toy");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.file(), "budget.csv");
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.field(), "Budget");
  }
}

TEST(LoadInstance, MalformedJson) {
  EXPECT_THROW(parse_instance_json("{not json"), ParseError);
  EXPECT_THROW(parse_instance_json(R"({"families": 3})"), ParseError);
  EXPECT_THROW(
      parse_instance_json(R"({"families":[{"family_key":"F"}],"options":[],"projects":[],"budget":[]})"),
      ParseError);
}
