/**
 * @file bench.hpp
 * @brief Solver sweeps over generated instances: time and value per pool size.
 */
#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "portfolio/datagen.hpp"
#include "portfolio/expansion.hpp"
#include "portfolio/ilp_builder.hpp"
#include "portfolio/solver.hpp"

namespace portfolio {

struct BenchMode {
  enum Kind { kExact, kGap, kRounded } kind = kExact;
  double tolerance = 0.0;

  std::string label() const {
    switch (kind) {
      case kExact: return "exact";
      case kRounded: return "rounded";
      case kGap: {
        std::ostringstream s;
        s << "gap:" << tolerance;
        return s.str();
      }
    }
    return "?";
  }

  /// Accepts `exact`, `rounded` and `gap:<tolerance>`.
  static BenchMode parse(const std::string& text) {
    if (text == "exact") return {kExact, 0.0};
    if (text == "rounded") return {kRounded, 0.0};
    if (text.rfind("gap:", 0) == 0) {
      try {
        std::size_t used = 0;
        double tol = std::stod(text.substr(4), &used);
        if (used == text.size() - 4 && tol >= 0) return {kGap, tol};
      } catch (const std::exception&) {
      }
    }
    throw std::invalid_argument("unknown bench mode '" + text + "'");
  }
};

struct BenchRecord {
  int n_projects = 0;
  std::string mode;
  std::uint64_t seed = 0;
  double wall_time = 0.0;
  double value = 0.0;
  double gap = 0.0;
  bool feasible = false;
  std::string status;
  /// LP relaxation objective for rounded runs, the dual bound otherwise.
  double bound = 0.0;
  std::size_t nodes = 0;
  std::string error;
};

struct SweepOptions {
  std::optional<double> time_limit;  // per solve, seconds
  std::ostream* progress = nullptr;
};

/// One record per (size, mode, seed). Each instance is generated once per
/// (size, seed) and solved in every mode; wall time covers the solve only.
inline std::vector<BenchRecord> run_sweep(const std::vector<int>& sizes,
                                          const std::vector<BenchMode>& modes,
                                          const std::vector<std::uint64_t>& seeds,
                                          const GenParams& base, const SweepOptions& opts = {}) {
  std::vector<BenchRecord> out;
  for (int size : sizes) {
    for (std::uint64_t seed : seeds) {
      std::optional<IlpModel> model;
      std::string setup_error;
      try {
        GenParams p = base;
        p.n_projects = size;
        p.seed = seed;
        auto instance = generate_instance(p);
        model = build_model(instance, expand(instance));
      } catch (const std::exception& e) {
        setup_error = e.what();
      }
      for (const auto& mode : modes) {
        BenchRecord r;
        r.n_projects = size;
        r.mode = mode.label();
        r.seed = seed;
        if (!model) {
          r.status = "error";
          r.error = setup_error;
          out.push_back(std::move(r));
          continue;
        }
        SolveOptions so;
        so.time_limit = opts.time_limit;
        so.variable_category =
            mode.kind == BenchMode::kRounded ? VariableCategory::kContinuous : VariableCategory::kBinary;
        so.gap_tolerance = mode.kind == BenchMode::kGap ? mode.tolerance : 0.0;
        try {
          auto t0 = std::chrono::steady_clock::now();
          auto res = solve(*model, so);
          r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          r.value = res.has_incumbent() ? res.primal_bound : 0.0;
          r.gap = res.relative_gap;
          r.feasible = res.has_incumbent() && res.feasible;
          r.status = to_string(res.status);
          r.bound = res.dual_bound;
          r.nodes = res.nodes_explored;
        } catch (const std::exception& e) {
          r.status = "error";
          r.error = e.what();
        }
        if (opts.progress)
          *opts.progress << "size=" << r.n_projects << " mode=" << r.mode << " seed=" << r.seed
                         << " status=" << r.status << " time=" << r.wall_time
                         << " value=" << r.value << "\n";
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct SummaryRow {
  int n_projects = 0;
  std::string mode;
  std::size_t runs = 0;
  double median_time = 0.0;
  double median_value = 0.0;
  std::size_t not_feasible = 0;
};

/// Median time and value per (size, mode), in first-seen order.
inline std::vector<SummaryRow> summarize(const std::vector<BenchRecord>& records) {
  std::vector<SummaryRow> rows;
  std::map<std::pair<int, std::string>, std::size_t> index;
  std::vector<std::vector<double>> times, values;
  for (const auto& r : records) {
    auto key = std::make_pair(r.n_projects, r.mode);
    auto [it, fresh] = index.try_emplace(key, rows.size());
    if (fresh) {
      rows.push_back({r.n_projects, r.mode, 0, 0, 0, 0});
      times.emplace_back();
      values.emplace_back();
    }
    auto& row = rows[it->second];
    ++row.runs;
    if (!r.feasible) ++row.not_feasible;
    times[it->second].push_back(r.wall_time);
    values[it->second].push_back(r.value);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].median_time = median(times[i]);
    rows[i].median_value = median(values[i]);
  }
  return rows;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

/// Summary path next to the table: `results.csv` -> `results.summary.txt`.
inline std::filesystem::path summary_path(const std::filesystem::path& table) {
  auto p = table;
  return p.replace_extension(".summary.txt");
}

/// Writes the record table and the text summary; returns the summary text.
inline std::string emit_report(const std::vector<BenchRecord>& records,
                               const std::filesystem::path& path) {
  if (records.empty()) throw std::invalid_argument("no bench records to report");
  {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "n_projects,mode,seed,wall_time,value,gap,feasible,status,bound,nodes,error\n";
    out.precision(10);
    for (const auto& r : records)
      out << r.n_projects << "," << r.mode << "," << r.seed << "," << r.wall_time << ","
          << r.value << "," << r.gap << "," << (r.feasible ? "true" : "false") << "," << r.status
          << "," << r.bound << "," << r.nodes << "," << csv_escape(r.error) << "\n";
    if (!out) throw std::runtime_error("failed writing " + path.string());
  }
  std::ostringstream s;
  s << "n_projects mode runs median_time_s median_value not_feasible\n";
  for (const auto& row : summarize(records))
    s << row.n_projects << " " << row.mode << " " << row.runs << " " << row.median_time << " "
      << row.median_value << " " << row.not_feasible << "\n";
  std::ofstream out(summary_path(path));
  out << s.str();
  if (!out) throw std::runtime_error("failed writing " + summary_path(path).string());
  return s.str();
}

}  // namespace portfolio
