/**
 * @file service.hpp
 * @brief Workshop service: versioned portfolios, edits, background optimization.
 *
 * Versions and jobs are JSON documents in an append-only directory:
 *
 *   <root>/versions/v<N>.json   immutable once written
 *   <root>/jobs/j<N>.json       rewritten by atomic rename on each state change
 *
 * Endpoints:
 *   POST /portfolios                 ingest an instance document -> 201 {version_id}
 *   GET  /portfolios/{id}            version document
 *   POST /portfolios/{id}/edits      one edit, or {"edits": [...]} -> 201 {version_id}
 *   POST /portfolios/{id}/optimize   solve options -> 202 {job_id}
 *   GET  /jobs/{id}                  job document, with result once done
 *   GET  /portfolios/{id}/export.lp  LP text of the version's model
 *
 * Errors are {"error": <code>, "message": ..., "violations": [...]?}.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "portfolio/core_model.hpp"
#include "portfolio/expansion.hpp"
#include "portfolio/ilp_builder.hpp"
#include "portfolio/instance_io.hpp"
#include "portfolio/lp_format.hpp"
#include "portfolio/solver.hpp"

namespace portfolio {

using nlohmann::json;

/// Error carrying an HTTP status and a machine-readable code.
class ApiError : public std::runtime_error {
 public:
  ApiError(int status, std::string code, const std::string& message, json extra = json::object())
      : std::runtime_error(message), status_(status), code_(std::move(code)), extra_(std::move(extra)) {}

  int status() const { return status_; }
  const std::string& code() const { return code_; }

  json body() const {
    json b = extra_;
    b["error"] = code_;
    b["message"] = what();
    return b;
  }

 private:
  int status_;
  std::string code_;
  json extra_;
};

inline json violations_json(const std::vector<Violation>& v) {
  json out = json::array();
  for (const auto& x : v) out.push_back({{"rule", x.rule}, {"key", x.key}, {"message", x.message}});
  return out;
}

/// JSON has no infinity; unbounded numbers are written as null.
inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------------------
// Edits

namespace edit_detail {

inline std::string str_field(const json& e, const char* name) {
  if (!e.contains(name) || !e.at(name).is_string())
    throw ApiError(400, "bad_edit", std::string("edit needs a string field '") + name + "'");
  return e.at(name).get<std::string>();
}

inline long long int_field(const json& e, const char* name) {
  if (!e.contains(name) || !e.at(name).is_number_integer())
    throw ApiError(400, "bad_edit", std::string("edit needs an integer field '") + name + "'");
  return e.at(name).get<long long>();
}

inline CapabilityOption& option(PortfolioInstance& x, const std::string& key) {
  auto* o = x.find_option(key);
  if (!o) throw ApiError(400, "unknown_key", "unknown option '" + key + "'");
  return *o;
}

inline Project& project(PortfolioInstance& x, const std::string& key) {
  auto* p = x.find_project(key);
  if (!p) throw ApiError(400, "unknown_key", "unknown project '" + key + "'");
  return *p;
}

}  // namespace edit_detail

/**
 * Applies one edit in place. Unknown keys and malformed edits raise 400,
 * edits that contradict the instance raise 409.
 */
inline void apply_edit(PortfolioInstance& x, const json& e) {
  using namespace edit_detail;
  if (!e.is_object()) throw ApiError(400, "bad_edit", "edit must be an object");
  const std::string type = str_field(e, "type");

  if (type == "mandate_option") {
    auto& o = option(x, str_field(e, "option"));
    if (o.disabled)
      throw ApiError(409, rules::kMandatedAndDisabled, "option " + o.option_key + " is disabled");
    for (const auto& other : x.options)
      if (other.family_key == o.family_key && other.mandated && other.option_key != o.option_key)
        throw ApiError(409, "family_multiple_mandates",
                       "family " + o.family_key + " already mandates " + other.option_key);
    o.mandated = true;
  } else if (type == "disable_option") {
    auto& o = option(x, str_field(e, "option"));
    if (o.mandated)
      throw ApiError(409, rules::kMandatedAndDisabled, "option " + o.option_key + " is mandated");
    o.disabled = true;
  } else if (type == "lock_project") {
    auto& p = project(x, str_field(e, "project"));
    auto year = static_cast<Year>(int_field(e, "year"));
    if (year < p.earliest_start || year > p.latest_start)
      throw ApiError(409, rules::kWindowOrder,
                     "year " + std::to_string(year) + " lies outside the start window of " +
                         p.variant_key);
    p.fixed_in_time = true;
    p.preferred_start = year;
  } else if (type == "mandate_project") {
    project(x, str_field(e, "project")).mandated = true;
  } else if (type == "set_cost_profile") {
    auto& p = project(x, str_field(e, "project"));
    if (!e.contains("profile") || !e.at("profile").is_array())
      throw ApiError(400, "bad_edit", "set_cost_profile needs an integer array 'profile'");
    std::vector<Money> profile;
    for (const auto& v : e.at("profile")) {
      if (!v.is_number_integer()) throw ApiError(400, "bad_edit", "profile entries must be integers");
      profile.push_back(v.get<Money>());
    }
    p.cost_profile = std::move(profile);
  } else if (type == "set_budget_line") {
    auto year = static_cast<Year>(int_field(e, "year"));
    BudgetLine* line = nullptr;
    for (auto& b : x.budget)
      if (b.year == year) line = &b;
    if (!line) {
      x.budget.push_back({year, 0, 0, 0});
      line = &x.budget.back();
    }
    if (e.contains("budget")) line->budget = int_field(e, "budget");
    if (e.contains("under_slack")) line->under_slack = int_field(e, "under_slack");
    if (e.contains("over_slack")) line->over_slack = int_field(e, "over_slack");
    std::sort(x.budget.begin(), x.budget.end(),
              [](const BudgetLine& a, const BudgetLine& b) { return a.year < b.year; });
  } else if (type == "set_start_window") {
    auto& p = project(x, str_field(e, "project"));
    p.earliest_start = static_cast<Year>(int_field(e, "earliest"));
    p.latest_start = static_cast<Year>(int_field(e, "latest"));
    if (e.contains("preferred"))
      p.preferred_start = static_cast<Year>(int_field(e, "preferred"));
    else
      p.preferred_start = std::clamp(p.preferred_start, p.earliest_start,
                                     std::max(p.earliest_start, p.latest_start));
    if (e.contains("fixed_in_time")) {
      if (!e.at("fixed_in_time").is_boolean())
        throw ApiError(400, "bad_edit", "fixed_in_time must be a boolean");
      p.fixed_in_time = e.at("fixed_in_time").get<bool>();
    }
  } else {
    throw ApiError(400, "bad_edit", "unknown edit type '" + type + "'");
  }
}

// ---------------------------------------------------------------------------
// Solve options and results

inline SolveOptions solve_options_from_json(const json& j) {
  SolveOptions o;
  if (j.is_null()) return o;
  if (!j.is_object()) throw ApiError(400, "bad_options", "solve options must be an object");
  try {
    std::string cat = j.value("variable_category", std::string("binary"));
    if (cat == "binary") o.variable_category = VariableCategory::kBinary;
    else if (cat == "continuous") o.variable_category = VariableCategory::kContinuous;
    else throw ApiError(400, "bad_options", "variable_category must be binary or continuous");
    o.gap_tolerance = j.value("gap_tolerance", 0.0);
    if (j.contains("time_limit") && !j.at("time_limit").is_null())
      o.time_limit = j.at("time_limit").get<double>();
    if (j.contains("node_limit") && !j.at("node_limit").is_null())
      o.node_limit = j.at("node_limit").get<std::size_t>();
    o.rounding_threshold = j.value("rounding_threshold", 0.5);
  } catch (const json::exception& e) {
    throw ApiError(400, "bad_options", e.what());
  }
  if (o.gap_tolerance < 0) throw ApiError(400, "bad_options", "gap_tolerance must be nonnegative");
  if (!(o.rounding_threshold > 0 && o.rounding_threshold < 1))
    throw ApiError(400, "bad_options", "rounding_threshold must lie in (0, 1)");
  if (o.time_limit && *o.time_limit < 0) throw ApiError(400, "bad_options", "time_limit must be nonnegative");
  return o;
}

inline json solve_options_to_json(const SolveOptions& o) {
  json j;
  j["variable_category"] = o.variable_category == VariableCategory::kBinary ? "binary" : "continuous";
  j["gap_tolerance"] = o.gap_tolerance;
  j["time_limit"] = o.time_limit ? json(*o.time_limit) : json(nullptr);
  j["node_limit"] = o.node_limit ? json(*o.node_limit) : json(nullptr);
  j["rounding_threshold"] = o.rounding_threshold;
  return j;
}

/// Expansion, build and solve on a copy of the instance; the result names
/// the chosen options and project placements and the spend per budget year.
inline json optimize_instance(const PortfolioInstance& instance, const SolveOptions& options) {
  auto e = expand(instance);
  auto model = build_model(instance, e);
  auto r = solve(model, options);

  json out;
  out["status"] = to_string(r.status);
  out["value"] = r.has_incumbent() ? json(r.primal_bound) : json(nullptr);
  out["primal_bound"] = finite_or_null(r.primal_bound);
  out["dual_bound"] = finite_or_null(r.dual_bound);
  out["relative_gap"] = finite_or_null(r.relative_gap);
  out["nodes_explored"] = r.nodes_explored;
  out["wall_time"] = r.wall_time;
  out["feasible"] = r.has_incumbent() && r.feasible;
  out["infeasible_rows"] = r.infeasible_rows;

  VariableLayout layout(e);
  json chosen_options = json::array(), chosen_projects = json::array();
  std::map<Year, Money> spend;
  if (r.has_incumbent()) {
    for (std::size_t i = 0; i < e.options.size(); ++i) {
      if (r.incumbent[layout.option(i)] != 1.0) continue;
      const auto& po = e.options[i];
      chosen_options.push_back({{"option", po.source_option},
                                {"pseudo_option", po.pseudo_key},
                                {"family", po.family_key},
                                {"effective_year", po.effective_year},
                                {"value", po.value}});
    }
    for (std::size_t j = 0; j < e.projects.size(); ++j) {
      if (r.incumbent[layout.project(j)] != 1.0) continue;
      const auto& pp = e.projects[j];
      chosen_projects.push_back({{"project", pp.source_variant},
                                 {"project_id", pp.project_id},
                                 {"pseudo_project", pp.pseudo_key},
                                 {"start_year", pp.start_year}});
      for (const auto& [y, c] : pp.yearly_cost) spend[y] += c;
    }
  }
  out["selected_options"] = chosen_options;
  out["selected_projects"] = chosen_projects;

  json yearly = json::array();
  for (const auto& b : instance.budget) {
    json row = {{"year", b.year}, {"budget", b.budget}, {"floor", b.floor()}, {"ceiling", b.ceiling()}};
    row["spend"] = r.has_incumbent() ? json(spend.count(b.year) ? spend[b.year] : 0) : json(nullptr);
    yearly.push_back(row);
  }
  out["yearly_spend"] = yearly;

  std::set<Year> violated;
  for (const auto& label : r.infeasible_rows) {
    auto prefix = row_prefix(label);
    if (prefix == row_family::kBudgetHi || prefix == row_family::kBudgetLo)
      violated.insert(std::stoi(label.substr(prefix.size() + 1)));
  }
  out["violated_years"] = std::vector<Year>(violated.begin(), violated.end());
  return out;
}

// ---------------------------------------------------------------------------
// Store

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  char buf[32], out[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

/// Append-only JSON document store. Ids are sequential per kind.
class DocumentStore {
 public:
  explicit DocumentStore(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_ / "versions");
    std::filesystem::create_directories(root_ / "jobs");
    next_version_ = scan("versions", 'v') + 1;
    next_job_ = scan("jobs", 'j') + 1;
  }

  const std::filesystem::path& root() const { return root_; }

  std::string new_version_id() {
    std::lock_guard lock(mu_);
    return "v" + std::to_string(next_version_++);
  }
  std::string new_job_id() {
    std::lock_guard lock(mu_);
    return "j" + std::to_string(next_job_++);
  }

  void put_version(const std::string& id, const json& doc) {
    auto path = file("versions", id);
    if (std::filesystem::exists(path)) throw std::logic_error("version " + id + " already stored");
    write_atomic(path, doc);
  }
  void put_job(const std::string& id, const json& doc) { write_atomic(file("jobs", id), doc); }

  std::optional<json> version(const std::string& id) const { return read(file("versions", id)); }
  std::optional<json> job(const std::string& id) const { return read(file("jobs", id)); }

 private:
  static bool valid_id(const std::string& id) {
    static const std::regex shape("[vj][0-9]+");
    return std::regex_match(id, shape);
  }

  std::filesystem::path file(const char* kind, const std::string& id) const {
    if (!valid_id(id)) return {};
    return root_ / kind / (id + ".json");
  }

  std::optional<json> read(const std::filesystem::path& path) const {
    if (path.empty()) return std::nullopt;
    std::ifstream in(path);
    if (!in) return std::nullopt;
    return json::parse(in);
  }

  void write_atomic(const std::filesystem::path& path, const json& doc) {
    std::lock_guard lock(write_mu_);
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp);
      out << doc.dump(2) << "\n";
      if (!out) throw std::runtime_error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }

  std::size_t scan(const char* kind, char prefix) const {
    std::size_t top = 0;
    for (const auto& entry : std::filesystem::directory_iterator(root_ / kind)) {
      auto name = entry.path().stem().string();
      if (entry.path().extension() != ".json" || name.size() < 2 || name[0] != prefix) continue;
      try {
        top = std::max<std::size_t>(top, std::stoul(name.substr(1)));
      } catch (const std::exception&) {
      }
    }
    return top;
  }

  std::filesystem::path root_;
  std::mutex mu_, write_mu_;
  std::size_t next_version_ = 1, next_job_ = 1;
};

// ---------------------------------------------------------------------------
// Service

class WorkshopService {
 public:
  explicit WorkshopService(std::filesystem::path root) : store_(std::move(root)) {}

  ~WorkshopService() { wait_idle(); }

  WorkshopService(const WorkshopService&) = delete;
  WorkshopService& operator=(const WorkshopService&) = delete;

  std::string ingest(const std::string& body) {
    PortfolioInstance x;
    try {
      x = parse_instance_json(body, "document");
    } catch (const ParseError& e) {
      throw ApiError(400, "parse_error", e.what());
    }
    if (x.families.empty()) throw ApiError(400, "parse_error", "family set empty");
    if (auto v = validate(x); !v.empty())
      throw ApiError(400, "validation_failed", "instance has violations",
                     {{"violations", violations_json(v)}});
    return store_version(x, std::nullopt, json::array());
  }

  json get_version(const std::string& id) const { return load_version(id); }

  std::string apply_edits(const std::string& id, const std::string& body) {
    json parent = load_version(id);
    json req;
    try {
      req = json::parse(body);
    } catch (const json::parse_error& e) {
      throw ApiError(400, "parse_error", e.what());
    }
    json edits = req.is_object() && req.contains("edits") ? req.at("edits") : json::array({req});
    if (!edits.is_array() || edits.empty()) throw ApiError(400, "bad_edit", "no edits given");

    auto x = instance_from_json(parent.at("instance"), id);
    for (const auto& e : edits) apply_edit(x, e);
    if (auto v = validate(x); !v.empty())
      throw ApiError(409, "conflict", "edits leave the instance inconsistent",
                     {{"violations", violations_json(v)}});
    try {
      build_model(x, expand(x));
    } catch (const BuildError& e) {
      throw ApiError(409, "conflict", e.what());
    } catch (const ExpansionError& e) {
      throw ApiError(409, "conflict", e.what());
    }
    return store_version(x, id, edits);
  }

  std::string optimize(const std::string& id, const std::string& body) {
    load_version(id);
    json opts_json;
    if (!body.empty()) {
      try {
        opts_json = json::parse(body);
      } catch (const json::parse_error& e) {
        throw ApiError(400, "parse_error", e.what());
      }
    }
    SolveOptions options = solve_options_from_json(opts_json);
    std::string job_id = store_.new_job_id();
    json job = {{"job_id", job_id},
                {"version_id", id},
                {"options", solve_options_to_json(options)},
                {"state", "queued"},
                {"created_at", utc_timestamp()}};
    store_.put_job(job_id, job);

    std::lock_guard lock(jobs_mu_);
    ++active_;
    workers_.emplace_back([this, job, id, options]() mutable { run_job(std::move(job), id, options); });
    return job_id;
  }

  json get_job(const std::string& id) const {
    auto j = store_.job(id);
    if (!j) throw ApiError(404, "not_found", "unknown job '" + id + "'");
    return *j;
  }

  std::string export_lp(const std::string& id) const {
    json v = load_version(id);
    auto x = instance_from_json(v.at("instance"), id);
    try {
      return to_lp_string(build_model(x, expand(x)));
    } catch (const BuildError& e) {
      throw ApiError(409, "conflict", e.what());
    } catch (const ExpansionError& e) {
      throw ApiError(409, "conflict", e.what());
    }
  }

  /// Blocks until every started job has finished.
  void wait_idle() {
    std::unique_lock lock(jobs_mu_);
    idle_.wait(lock, [this] { return active_ == 0; });
    for (auto& t : workers_)
      if (t.joinable()) t.join();
    workers_.clear();
  }

  const DocumentStore& store() const { return store_; }

 private:
  json load_version(const std::string& id) const {
    auto v = store_.version(id);
    if (!v) throw ApiError(404, "not_found", "unknown version '" + id + "'");
    return *v;
  }

  std::string store_version(const PortfolioInstance& x, std::optional<std::string> parent,
                            const json& edits) {
    std::string id = store_.new_version_id();
    json doc = {{"version_id", id},
                {"parent_id", parent ? json(*parent) : json(nullptr)},
                {"created_at", utc_timestamp()},
                {"edits", edits},
                {"instance", to_json(x)}};
    store_.put_version(id, doc);
    return id;
  }

  std::mutex& version_lock(const std::string& id) {
    std::lock_guard lock(jobs_mu_);
    auto& m = version_locks_[id];
    if (!m) m = std::make_unique<std::mutex>();
    return *m;
  }

  void run_job(json job, const std::string& version_id, const SolveOptions& options) {
    {
      std::lock_guard serial(version_lock(version_id));
      job["state"] = "running";
      job["started_at"] = utc_timestamp();
      store_.put_job(job["job_id"], job);
      try {
        auto v = load_version(version_id);
        auto x = instance_from_json(v.at("instance"), version_id);
        job["result"] = optimize_instance(x, options);
        job["state"] = "done";
      } catch (const std::exception& e) {
        job["state"] = "failed";
        job["reason"] = e.what();
      }
      job["finished_at"] = utc_timestamp();
      store_.put_job(job["job_id"], job);
    }
    std::lock_guard lock(jobs_mu_);
    --active_;
    idle_.notify_all();
  }

  DocumentStore store_;
  mutable std::mutex jobs_mu_;
  std::condition_variable idle_;
  std::size_t active_ = 0;
  std::vector<std::thread> workers_;
  std::map<std::string, std::unique_ptr<std::mutex>> version_locks_;
};

// ---------------------------------------------------------------------------
// HTTP

inline void install_routes(httplib::Server& server, WorkshopService& service) {
  auto send_json = [](httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };
  auto guard = [send_json](auto&& fn) {
    return [fn, send_json](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const ApiError& e) {
        send_json(res, e.status(), e.body());
      } catch (const std::exception& e) {
        send_json(res, 500, {{"error", "internal"}, {"message", e.what()}});
      }
    };
  };

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

  server.Post("/portfolios", guard([&service, send_json](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 201, {{"version_id", service.ingest(req.body)}});
  }));
  server.Get(R"(/portfolios/([^/]+))",
             guard([&service, send_json](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, service.get_version(req.matches[1]));
             }));
  server.Post(R"(/portfolios/([^/]+)/edits)",
              guard([&service, send_json](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 201, {{"version_id", service.apply_edits(req.matches[1], req.body)}});
              }));
  server.Post(R"(/portfolios/([^/]+)/optimize)",
              guard([&service, send_json](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 202, {{"job_id", service.optimize(req.matches[1], req.body)}});
              }));
  server.Get(R"(/jobs/([^/]+))", guard([&service, send_json](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, service.get_job(req.matches[1]));
             }));
  server.Get(R"(/portfolios/([^/]+)/export\.lp)",
             guard([&service](const httplib::Request& req, httplib::Response& res) {
               res.status = 200;
               res.set_content(service.export_lp(req.matches[1]), "text/plain");
             }));
}

}  // namespace portfolio
