// portfolio: command-line front end.
//
//   portfolio validate <instance>
//   portfolio solve <instance> [--gap 0.05] [--time-limit 60] [--continuous]
//   portfolio export-lp <instance> -o model.lp
//   portfolio generate --projects 20 --seed 3 [--sukp] -o instance.json
//   portfolio bench --sizes 10,20,40 --modes exact,gap:0.05,rounded --seeds 5 --out results.csv
//   portfolio serve --store ./store --port 8080
//
// Instances are either a directory of delimited tables or a JSON document.

#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "portfolio/portfolio.hpp"

using namespace portfolio;

namespace {

int cmd_validate(const std::string& path) {
  PortfolioInstance x = std::filesystem::is_directory(path)
                            ? read_delimited(path)
                            : [&] {
                                std::ifstream in(path);
                                if (!in) throw ParseError(path, 0, "", "cannot open file");
                                std::stringstream ss;
                                ss << in.rdbuf();
                                return parse_instance_json(ss.str(), path);
                              }();
  auto v = validate(x);
  for (const auto& e : v) std::cout << e.rule << " " << e.key << ": " << e.message << "\n";
  if (v.empty()) std::cout << "ok: " << x.families.size() << " families, " << x.options.size()
                           << " options, " << x.projects.size() << " projects\n";
  return v.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capability portfolio selection and scheduling"};
  app.require_subcommand(1);

  std::string instance_path, out_path;

  auto* validate_cmd = app.add_subcommand("validate", "Parse and validate an instance");
  validate_cmd->add_option("instance", instance_path)->required();

  SolveOptions solve_opts;
  bool continuous = false, no_schedule = false;
  double time_limit = 0;
  std::size_t node_limit = 0;
  auto* solve_cmd = app.add_subcommand("solve", "Optimize an instance and print the result as JSON");
  solve_cmd->add_option("instance", instance_path)->required();
  solve_cmd->add_option("--gap", solve_opts.gap_tolerance, "Relative gap tolerance")->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--time-limit", time_limit, "Seconds")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--node-limit", node_limit)->check(CLI::PositiveNumber);
  solve_cmd->add_flag("--continuous", continuous, "Solve the relaxation and round");
  solve_cmd->add_option("--threshold", solve_opts.rounding_threshold, "Rounding threshold")
      ->check(CLI::Range(0.0, 1.0));
  solve_cmd->add_flag("--no-schedule", no_schedule, "Pin every project to its preferred start");
  solve_cmd->add_flag("-v,--verbose", "Log search progress to stderr");

  auto* export_cmd = app.add_subcommand("export-lp", "Write the model in LP format");
  export_cmd->add_option("instance", instance_path)->required();
  export_cmd->add_option("-o,--out", out_path, "Output file (stdout when omitted)");

  GenParams gen;
  bool sukp = false, tables = false;
  auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic instance");
  gen_cmd->add_option("--projects", gen.n_projects)->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--start-years", gen.n_start_years)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--budget-fraction", gen.budget_fraction)->check(CLI::NonNegativeNumber);
  gen_cmd->add_flag("--sukp", sukp, "Several options per family with shared projects");
  gen_cmd->add_flag("--tables", tables, "Write a directory of delimited tables instead of JSON");
  gen_cmd->add_option("-o,--out", out_path)->required();

  std::string sizes_text = "10,20,40", modes_text = "exact,gap:0.05,rounded";
  int n_seeds = 3;
  double bench_limit = 0;
  GenParams bench_gen;
  bool bench_sukp = false;
  auto* bench_cmd = app.add_subcommand("bench", "Solver sweep over generated instances");
  bench_cmd->add_option("--sizes", sizes_text, "Comma-separated pool sizes");
  bench_cmd->add_option("--modes", modes_text, "exact, rounded, gap:<tol>");
  bench_cmd->add_option("--seeds", n_seeds, "Seeds 1..N")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--start-years", bench_gen.n_start_years)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--time-limit", bench_limit, "Seconds per solve")->check(CLI::PositiveNumber);
  bench_cmd->add_flag("--sukp", bench_sukp);
  bench_cmd->add_option("--out", out_path)->default_val("results.csv");

  std::string store = "store", host = "0.0.0.0";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP workshop service");
  serve_cmd->add_option("--store", store, "Document directory");
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port)->check(CLI::Range(1, 65535));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate_cmd) return cmd_validate(instance_path);

    if (*solve_cmd) {
      auto x = load_instance(instance_path);
      if (time_limit > 0) solve_opts.time_limit = time_limit;
      if (node_limit > 0) solve_opts.node_limit = node_limit;
      if (continuous) solve_opts.variable_category = VariableCategory::kContinuous;
      if (solve_cmd->count("--verbose")) solve_opts.log = &std::cerr;
      if (no_schedule)
        for (auto& p : x.projects) p.fixed_in_time = true;
      std::cout << optimize_instance(x, solve_opts).dump(2) << "\n";
      return 0;
    }

    if (*export_cmd) {
      auto x = load_instance(instance_path);
      auto text = to_lp_string(build_model(x, expand(x)));
      if (out_path.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(out_path);
        out << text;
        if (!out) throw std::runtime_error("failed writing " + out_path);
      }
      return 0;
    }

    if (*gen_cmd) {
      gen.structure = sukp ? Structure::kSukp : Structure::kLinearKnapsack;
      write_instance(generate_instance(gen), out_path,
                     tables ? InstanceFormat::kDelimitedTable : InstanceFormat::kStructuredText);
      return 0;
    }

    if (*bench_cmd) {
      std::vector<int> sizes;
      for (const auto& s : CLI::detail::split(sizes_text, ',')) sizes.push_back(std::stoi(s));
      std::vector<BenchMode> modes;
      for (const auto& m : CLI::detail::split(modes_text, ',')) modes.push_back(BenchMode::parse(m));
      std::vector<std::uint64_t> seeds;
      for (int s = 1; s <= n_seeds; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
      bench_gen.structure = bench_sukp ? Structure::kSukp : Structure::kLinearKnapsack;
      SweepOptions opts;
      if (bench_limit > 0) opts.time_limit = bench_limit;
      opts.progress = &std::cerr;
      auto records = run_sweep(sizes, modes, seeds, bench_gen, opts);
      std::cout << emit_report(records, out_path);
      return 0;
    }

    if (*serve_cmd) {
      WorkshopService service(store);
      httplib::Server server;
      install_routes(server, service);
      std::cerr << "listening on " << host << ":" << port << ", store " << store << "\n";
      if (!server.listen(host, port)) {
        std::cerr << "cannot bind " << host << ":" << port << "\n";
        return 1;
      }
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
