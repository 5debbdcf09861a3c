// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   acceptance            all criteria
//   acceptance 2 5        only the listed ones

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "portfolio/portfolio.hpp"
#include "support/fixtures.hpp"
#include "support/reference_oracle.hpp"

using namespace portfolio;
using testing_support::reference_optimum;

namespace {

// Tolerances.
constexpr double kValueTol = 1e-9;        // objective comparisons (oracle values are sums of
                                          // integers or of one-decimal toy values)
constexpr double kRowTol = 1e-9;          // incumbent feasibility against model rows
constexpr double kToySeconds = 1.0;
constexpr double kSuiteSeconds = 60.0;
constexpr int kSuiteSize = 200;
constexpr int kLawInstances = 100;
constexpr int kSukpInstances = 20;
constexpr int kLinearInstances = 20;
constexpr double kSolveCap = 300.0;       // seconds per solve in the timing sweep
constexpr double kSweepGap = 0.05;

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void fail(const std::string& why) {
    if (pass) detail.str("");
    else detail << "; ";
    pass = false;
    detail << why;
  }
};

IlpModel model_of(const PortfolioInstance& x) { return build_model(x, expand(x)); }

std::set<std::string> chosen_sources(const PortfolioInstance& x, const SolveResult& r) {
  auto e = expand(x);
  std::set<std::string> out;
  for (std::size_t i = 0; i < e.options.size(); ++i)
    if (r.incumbent[i] == 1.0) out.insert(e.options[i].source_option);
  return out;
}

std::string join(const std::set<std::string>& s) {
  std::string out;
  for (const auto& k : s) out += (out.empty() ? "" : "+") + k;
  return out.empty() ? "-" : out;
}

/// The seeded random suite shared by the equivalence and gap criteria.
const std::vector<PortfolioInstance>& oracle_suite() {
  static const std::vector<PortfolioInstance> suite = [] {
    std::vector<PortfolioInstance> out;
    for (std::uint64_t seed = 1; static_cast<int>(out.size()) < kSuiteSize; ++seed) {
      auto x = testing_support::random_small(seed);
      try {
        model_of(x);
      } catch (const BuildError&) {
        continue;
      }
      out.push_back(std::move(x));
    }
    return out;
  }();
  return suite;
}

// ---------------------------------------------------------------------------

Outcome toy_exactness() {
  Outcome o;
  auto t0 = Clock::now();
  struct Case {
    std::string name;
    std::function<void(PortfolioInstance&)> edit;
    double expected;
    std::set<std::string> selection;
  };
  std::vector<Case> cases = {
      {"toy", [](PortfolioInstance&) {}, 0.9, {"F1.1", "F2.1"}},
      {"F2.1 removed", [](PortfolioInstance& x) { x.find_option("F2.1")->disabled = true; }, 0.7,
       {"F1.1", "F2.2"}},
      // P1 is mandated in the fixture and only F1.1 uses it, so disabling F1
      // also lifts that mandate.
      {"F1 disabled",
       [](PortfolioInstance& x) {
         x.find_option("F1.1")->disabled = true;
         x.find_project("P1")->mandated = false;
       },
       0.5,
       {"F2.1"}},
  };
  for (const auto& c : cases) {
    auto x = testing_support::toy();
    c.edit(x);
    auto ref = reference_optimum(x);
    auto r = branch_and_bound(model_of(x));
    auto got = r.has_incumbent() ? chosen_sources(x, r) : std::set<std::string>{};
    o.detail << c.name << "=" << r.primal_bound << " " << join(got) << " (oracle " << ref.value << "); ";
    if (!ref.feasible || std::abs(ref.value - c.expected) > kValueTol)
      o.fail(c.name + ": oracle gives " + std::to_string(ref.value));
    if (r.status != SolveStatus::kOptimal || std::abs(r.primal_bound - ref.value) > kValueTol)
      o.fail(c.name + ": solver " + std::to_string(r.primal_bound) + " vs oracle " + std::to_string(ref.value));
    if (got != c.selection || ref.options != c.selection) o.fail(c.name + ": selection " + join(got));
  }
  double t = since(t0);
  o.detail << "time " << t << " s";
  if (t >= kToySeconds) o.fail("took " + std::to_string(t) + " s");
  return o;
}

Outcome oracle_suite_equivalence() {
  Outcome o;
  auto t0 = Clock::now();
  const auto& suite = oracle_suite();
  int feasible = 0, mismatches = 0;
  std::uint64_t shared = 0;
  for (const auto& x : suite) {
    auto ref = reference_optimum(x);
    auto m = model_of(x);
    auto r = branch_and_bound(m);
    std::map<std::string, int> users;
    for (const auto& opt : x.options)
      for (const auto& p : opt.project_refs) ++users[p];
    for (const auto& [p, n] : users) shared += n > 1;
    bool ok = ref.feasible ? (r.status == SolveStatus::kOptimal &&
                              std::abs(r.primal_bound - ref.value) <= kValueTol &&
                              m.violated_rows(r.incumbent, kRowTol).empty())
                           : r.status == SolveStatus::kInfeasible;
    feasible += ref.feasible;
    if (!ok) {
      if (++mismatches <= 3)
        o.fail(x.label + ": solver " + to_string(r.status) + " " + std::to_string(r.primal_bound) +
               " vs oracle " + (ref.feasible ? std::to_string(ref.value) : "infeasible"));
    }
  }
  double t = since(t0);
  if (o.pass)
    o.detail << suite.size() << " instances (" << feasible << " feasible, " << shared
             << " shared projects) all equal; ";
  else
    o.detail << "; " << mismatches << " mismatches; ";
  o.detail << "time " << t << " s";
  if (t >= kSuiteSeconds) o.fail("took " + std::to_string(t) + " s");
  return o;
}

Outcome gap_conventions() {
  Outcome o;
  const double inf = std::numeric_limits<double>::infinity();
  if (relative_gap(0, 0) != 0.0) o.fail("relative_gap(0,0) != 0");
  if (relative_gap(0, 3) != inf || relative_gap(0, -3) != inf) o.fail("relative_gap(0,z) != inf");
  if (std::abs(relative_gap(8, 10) - 0.25) > 1e-15) o.fail("relative_gap(8,10) != 0.25");

  std::size_t runs = 0;
  double worst = 0.0;
  for (double tol : {0.01, 0.05, 0.2}) {
    for (const auto& x : oracle_suite()) {
      auto ref = reference_optimum(x);
      auto m = model_of(x);
      SolveOptions opts;
      opts.gap_tolerance = tol;
      auto r = branch_and_bound(m, opts);
      ++runs;
      if (!ref.feasible) {
        if (r.status != SolveStatus::kInfeasible) o.fail(x.label + ": expected infeasible");
        continue;
      }
      bool done = r.status == SolveStatus::kOptimal || r.status == SolveStatus::kGapReached;
      bool integral = r.has_incumbent() && std::all_of(r.incumbent.begin(), r.incumbent.end(),
                                                       [](double v) { return v == 0.0 || v == 1.0; });
      if (!done || !integral || !m.violated_rows(r.incumbent, kRowTol).empty()) {
        o.fail(x.label + " tol " + std::to_string(tol) + ": no feasible incumbent");
        continue;
      }
      if (r.relative_gap > tol) o.fail(x.label + ": gap " + std::to_string(r.relative_gap));
      if (r.primal_bound > ref.value + kValueTol || r.dual_bound < ref.value - kValueTol)
        o.fail(x.label + ": bounds do not bracket the optimum");
      worst = std::max(worst, r.relative_gap);
    }
  }
  if (o.pass)
    o.detail << "relative_gap conventions hold; " << runs
             << " gap-terminated runs feasible, largest reported gap " << worst;
  return o;
}

Outcome expansion_laws() {
  Outcome o;
  auto width = [](const Project& p) {
    return p.fixed_in_time ? std::size_t{1} : static_cast<std::size_t>(p.latest_start - p.earliest_start + 1);
  };
  int checked = 0;
  for (std::uint64_t seed = 1000; checked < kLawInstances; ++seed) {
    auto x = testing_support::random_small(seed);
    auto e = expand(x);
    std::size_t projects = 0, options = 0;
    for (const auto& p : x.projects) {
      projects += width(p);
      if (e.projects_by_variant.at(p.variant_key).size() != width(p)) o.fail(x.label + " " + p.variant_key);
    }
    for (const auto& opt : x.options) {
      std::size_t k = 1;
      for (const auto& ref : opt.project_refs) k *= width(*x.find_project(ref));
      options += k;
      if (e.options_by_source.at(opt.option_key).size() != k) o.fail(x.label + " " + opt.option_key);
    }
    if (e.projects.size() != projects || e.options.size() != options) o.fail(x.label + " totals");
    ++checked;
  }

  // Sixteen start years against the same pool pinned to one start.
  GenParams p;
  p.n_projects = 100;
  p.n_start_years = 16;
  p.seed = 7;
  auto x = generate_instance(p);
  auto scheduled = model_of(x);
  auto pinned = build_model(x, expand(x, {.schedule = false}));
  auto e = expand(x);
  for (const auto& prj : x.projects)
    if (!prj.fixed_in_time && e.projects_by_variant.at(prj.variant_key).size() != 16)
      o.fail(prj.variant_key + " does not have 16 placements");
  auto scheduled_vars = [](const IlpModel& m, const Expansion& ex) {
    std::size_t baselines = 0;
    for (const auto& po : ex.options) baselines += po.is_baseline();
    return m.num_vars() - baselines;
  };
  std::size_t a = scheduled_vars(scheduled, e), b = scheduled_vars(pinned, expand(x, {.schedule = false}));
  if (a != 16 * b) o.fail("variables " + std::to_string(a) + " vs " + std::to_string(b));
  if (o.pass)
    o.detail << checked << " random instances obey the width and product laws; 100 projects x 16 starts -> "
             << e.projects.size() << " pseudo-projects, non-baseline variables " << b << " -> " << a;
  return o;
}

Outcome constraint_structure() {
  Outcome o;
  auto x = testing_support::toy();
  auto pinned = build_model(x, expand(x, {.schedule = false}));
  const auto* row = pinned.find_row("proj-opt-F1.1");
  auto coef = [&](const IlpModel& m, const ConstraintRow& r, const std::string& v) {
    auto i = m.index_of(v);
    auto c = i ? r.coef_of(*i) : std::nullopt;
    return c ? *c : 0.0;
  };
  if (!row || row->terms.size() != 3 || row->relation != Relation::kGreaterEqual || row->rhs != 0.0 ||
      coef(pinned, *row, "P1") != 1.0 || coef(pinned, *row, "P2") != 1.0 || coef(pinned, *row, "F1.1") != -2.0)
    o.fail("F1.1 link row is not x_P1 + x_P2 - 2 x_F1.1 >= 0");

  // Scheduled model: each F1.1 placement pairs one P1 start with the fixed P2.
  auto m = model_of(x);
  auto e = expand(x);
  for (std::size_t i : e.options_by_source.at("F1.1")) {
    const auto& po = e.options[i];
    const auto* r = m.find_row(row_label(row_family::kProjOpt, po.pseudo_key));
    std::string p1 = e.projects[po.assignment[0].second].pseudo_key;
    if (!r || r->terms.size() != 3 || coef(m, *r, p1) != 1.0 || coef(m, *r, "P2") != 1.0 ||
        coef(m, *r, po.pseudo_key) != -2.0 || r->rhs != 0.0 || r->relation != Relation::kGreaterEqual)
      o.fail("link row for " + po.pseudo_key);
  }

  std::ifstream in(testing_support::fixture_dir() / "toy.lp");
  std::stringstream golden;
  golden << in.rdbuf();
  if (to_lp_string(m) != golden.str()) o.fail("LP text differs from the golden file");
  if (parse_lp(golden.str()) != m) o.fail("golden file does not parse back to the toy model");
  if (o.pass) {
    auto text = to_lp_string(pinned);
    auto at = text.find(" proj_opt_F1.1:") + 1;
    o.detail << "link row '" << text.substr(at, text.find('\n', at) - at) << "'; "
             << e.options_by_source.at("F1.1").size() << " scheduled link rows; golden LP round-trips";
  }
  return o;
}

Outcome rounding_behaviour() {
  Outcome o;
  // SUKP: some rounding of the relaxation breaks a row.
  int sukp = 0, infeasible = 0;
  for (std::uint64_t seed = 1; sukp < kSukpInstances; ++seed) {
    GenParams p;
    p.structure = Structure::kSukp;
    p.n_projects = 12;
    p.n_start_years = 3;
    p.max_duration = 4;
    p.seed = seed;
    auto x = generate_instance(p);
    std::map<std::string, int> users;
    for (const auto& opt : x.options)
      for (const auto& r : opt.project_refs) ++users[r];
    if (std::none_of(users.begin(), users.end(), [](const auto& u) { return u.second > 1; })) continue;
    ++sukp;
    SolveOptions so;
    so.variable_category = VariableCategory::kContinuous;
    auto r = solve(model_of(x), so);
    infeasible += !r.feasible;
  }
  if (infeasible == 0) o.fail("no infeasible rounding on " + std::to_string(sukp) + " SUKP instances");

  // Linear knapsack: a feasible rounding never beats the integer optimum.
  int feasible_roundings = 0;
  for (std::uint64_t seed = 1; seed <= kLinearInstances; ++seed) {
    GenParams p;
    p.n_projects = 12;
    p.n_start_years = 4;
    p.seed = seed;
    auto m = model_of(generate_instance(p));
    SolveOptions so;
    so.variable_category = VariableCategory::kContinuous;
    auto rounded = solve(m, so);
    auto exact = branch_and_bound(m);
    if (exact.status != SolveStatus::kOptimal) {
      o.fail("lk seed " + std::to_string(seed) + " exact solve " + to_string(exact.status));
      continue;
    }
    if (!rounded.feasible) continue;
    ++feasible_roundings;
    if (rounded.primal_bound > exact.primal_bound + kValueTol)
      o.fail("lk seed " + std::to_string(seed) + ": rounded " + std::to_string(rounded.primal_bound) +
             " > exact " + std::to_string(exact.primal_bound));
  }

  // Median solve time per pool size at gap 0.05.
  std::vector<double> medians;
  double slowest = 0.0;
  for (int n : {10, 20, 40, 80}) {
    std::vector<double> times;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      GenParams p;
      p.n_projects = n;
      p.seed = seed;
      auto m = model_of(generate_instance(p));
      SolveOptions so;
      so.gap_tolerance = kSweepGap;
      so.time_limit = kSolveCap;
      auto t0 = Clock::now();
      auto r = solve(m, so);
      double t = since(t0);
      times.push_back(t);
      slowest = std::max(slowest, t);
      if (r.status != SolveStatus::kOptimal && r.status != SolveStatus::kGapReached)
        o.fail("n=" + std::to_string(n) + " seed " + std::to_string(seed) + " " + to_string(r.status));
    }
    medians.push_back(median(times));
  }
  for (std::size_t i = 1; i < medians.size(); ++i)
    if (!(medians[i] > medians[i - 1])) o.fail("median time not increasing at step " + std::to_string(i));

  o.detail << (o.pass ? "" : "; ") << infeasible << "/" << sukp << " SUKP roundings infeasible; "
           << feasible_roundings << "/" << kLinearInstances << " LK roundings feasible, none above exact; medians";
  for (double t : medians) o.detail << " " << t;
  o.detail << " s for n=10,20,40,80; slowest " << slowest << " s";
  return o;
}

Outcome service_contract() {
  Outcome o;
  auto root = testing_support::scratch_dir("acceptance_service");
  WorkshopService service(root);
  httplib::Server server;
  install_routes(server, service);
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);

  std::set<std::string> endpoints;
  auto call = [&](const std::string& method, const std::string& path, const std::string& body,
                  int expected) -> json {
    auto r = method == "GET" ? client.Get(path) : client.Post(path, body, "application/json");
    endpoints.insert(method + " " + path);
    if (!r || r->status != expected) {
      o.fail(method + " " + path + " returned " + (r ? std::to_string(r->status) : "no response"));
      return json();
    }
    auto type = r->get_header_value("Content-Type");
    return type == "application/json" ? json::parse(r->body) : json(r->body);
  };

  std::ifstream in(testing_support::fixture_dir() / "toy.json");
  std::stringstream doc;
  doc << in.rdbuf();
  try {
    std::string v1 = call("POST", "/portfolios", doc.str(), 201).at("version_id");
    auto before = call("GET", "/portfolios/" + v1, "", 200);
    std::string v2 =
        call("POST", "/portfolios/" + v1 + "/edits", json{{"type", "disable_option"}, {"option", "F2.2"}}.dump(), 201)
            .at("version_id");
    auto edited = call("GET", "/portfolios/" + v2, "", 200);
    auto lp = call("GET", "/portfolios/" + v2 + "/export.lp", "", 200);
    if (!lp.is_string() || lp.get<std::string>().find("Choose_F2.2") == std::string::npos)
      o.fail("export.lp missing model text");
    std::string job = call("POST", "/portfolios/" + v2 + "/optimize", "{}", 202).at("job_id");
    json result;
    for (int i = 0; i < 3000; ++i) {
      result = call("GET", "/jobs/" + job, "", 200);
      if (result["state"] == "done" || result["state"] == "failed") break;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    auto ref = reference_optimum(instance_from_json(edited.at("instance")));
    std::set<std::string> selected;
    for (const auto& opt : result["result"]["selected_options"]) selected.insert(opt["option"]);
    if (result["state"] != "done") o.fail("job ended " + result["state"].dump());
    else if (selected != ref.options || std::abs(result["result"]["value"].get<double>() - ref.value) > kValueTol)
      o.fail("selection " + join(selected) + " vs oracle " + join(ref.options));
    for (const auto& y : result["result"]["yearly_spend"])
      if (y["spend"].get<Money>() < y["floor"].get<Money>() || y["spend"].get<Money>() > y["ceiling"].get<Money>())
        o.fail("spend outside the slack band in " + y["year"].dump());
    if (call("GET", "/portfolios/" + v1, "", 200) != before) o.fail("source version changed");
    if (call("GET", "/portfolios/" + v2, "", 200) != edited) o.fail("optimized version changed");
    if (o.pass)
      o.detail << "ingest " << v1 << " -> disable F2.2 -> " << v2 << " -> " << job << ": " << join(selected)
               << " value " << result["result"]["value"] << " (oracle " << join(ref.options) << " " << ref.value
               << "); sources unchanged; " << endpoints.size() << " distinct requests over 6 endpoints";
  } catch (const std::exception& e) {
    o.fail(std::string("flow aborted: ") + e.what());
  }
  server.stop();
  listener.join();
  service.wait_idle();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const std::vector<Criterion> all = {
      {"toy-exactness", toy_exactness},         {"oracle-equivalence", oracle_suite_equivalence},
      {"gap-conventions", gap_conventions},     {"expansion-laws", expansion_laws},
      {"constraint-structure", constraint_structure}, {"rounding-behaviour", rounding_behaviour},
      {"service-contract", service_contract},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (!only.empty() && !only.count(static_cast<int>(i + 1))) continue;
    Outcome o;
    try {
      o = all[i].run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    std::printf("[%s] %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, all[i].name, o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
