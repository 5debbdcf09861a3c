/**
 * @file instance_io.hpp
 * @brief Reading and writing portfolio instances.
 *
 * Two formats are supported:
 *
 *  - Delimited tables: a directory holding `families.csv`, `projects.csv`
 *    and `budget.csv` (plus an optional `label.txt`). The family file lists one
 *    option per row; the project file lists each variant with its yearly spend
 *    placed at the preferred start year.
 *  - Structured text: one JSON object with `families`, `options`, `projects`,
 *    `budget` and `label`, whose records use the type field names verbatim.
 */
#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "portfolio/core_model.hpp"

namespace portfolio {

enum class InstanceFormat { kDelimitedTable, kStructuredText };

/// Malformed input. `line` is 1-based (0 when not applicable).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string file, std::size_t line, std::string field, const std::string& what)
      : std::runtime_error(format(file, line, field, what)),
        file_(std::move(file)),
        line_(line),
        field_(std::move(field)) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  static std::string format(const std::string& file, std::size_t line, const std::string& field,
                            const std::string& what) {
    std::string s = file;
    if (line) s += ":" + std::to_string(line);
    if (!field.empty()) s += " [" + field + "]";
    return s + ": " + what;
  }
  std::string file_;
  std::size_t line_;
  std::string field_;
};

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

struct Table {
  std::string file;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

inline Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "", "cannot open file");
  Table t;
  t.file = path.filename().string();
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw ParseError(t.file, n, "", "expected " + std::to_string(t.header.size()) +
                                          " cells, found " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(n);
  }
  if (t.header.empty()) throw ParseError(t.file, 0, "", "missing header row");
  return t;
}

inline bool parse_bool(const Table& t, std::size_t row, std::size_t col) {
  std::string v = t.rows[row][col];
  for (auto& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no" || v.empty()) return false;
  throw ParseError(t.file, t.line_numbers[row], t.header[col], "not a boolean: '" + t.rows[row][col] + "'");
}

template <typename Int>
Int parse_int(const std::string& file, std::size_t line, const std::string& field,
              const std::string& text) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return static_cast<Int>(v);
  } catch (const std::exception&) {
    throw ParseError(file, line, field, "not an integer: '" + text + "'");
  }
}

inline double parse_double(const std::string& file, std::size_t line, const std::string& field,
                           const std::string& text) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError(file, line, field, "not a number: '" + text + "'");
  }
}

inline std::string format_double(double v) {
  nlohmann::json j = v;
  return j.dump();
}

inline const char* bool_text(bool b) { return b ? "True" : "False"; }

inline void expect_header(const Table& t, const std::vector<std::string>& fixed) {
  if (t.header.size() < fixed.size())
    throw ParseError(t.file, 1, "", "header must start with " + join(fixed, ","));
  for (std::size_t i = 0; i < fixed.size(); ++i)
    if (t.header[i] != fixed[i])
      throw ParseError(t.file, 1, t.header[i], "expected header column '" + fixed[i] + "'");
}

inline const std::vector<std::string> kFamilyColumns = {"Family", "Option", "Projects", "Mandated",
                                                        "Disabled"};
inline const std::vector<std::string> kProjectColumns = {
    "Project", "ProjectID", "Mandated", "FixedInTime", "PreferredStart", "EarliestStart",
    "LatestStart"};
inline const std::vector<std::string> kBudgetColumns = {"Year", "Budget", "UnderSlack",
                                                        "OverSlack"};

}  // namespace detail

// ---------------------------------------------------------------------------
// Structured text (JSON)

inline nlohmann::json to_json(const PortfolioInstance& x) {
  using nlohmann::json;
  json doc;
  doc["label"] = x.label;
  doc["families"] = json::array();
  for (const auto& f : x.families)
    doc["families"].push_back(
        {{"family_key", f.family_key}, {"option_keys", f.option_keys}, {"mandated", f.mandated}});
  doc["options"] = json::array();
  for (const auto& o : x.options) {
    json schedule = json::object();
    for (const auto& [year, v] : o.value_schedule) schedule[std::to_string(year)] = v;
    doc["options"].push_back({{"option_key", o.option_key},
                              {"family_key", o.family_key},
                              {"project_refs", o.project_refs},
                              {"value_schedule", schedule},
                              {"mandated", o.mandated},
                              {"disabled", o.disabled}});
  }
  doc["projects"] = json::array();
  for (const auto& p : x.projects)
    doc["projects"].push_back({{"variant_key", p.variant_key},
                               {"project_id", p.project_id},
                               {"name", p.name},
                               {"mandated", p.mandated},
                               {"fixed_in_time", p.fixed_in_time},
                               {"preferred_start", p.preferred_start},
                               {"earliest_start", p.earliest_start},
                               {"latest_start", p.latest_start},
                               {"cost_profile", p.cost_profile}});
  doc["budget"] = json::array();
  for (const auto& b : x.budget)
    doc["budget"].push_back({{"year", b.year},
                             {"budget", b.budget},
                             {"under_slack", b.under_slack},
                             {"over_slack", b.over_slack}});
  return doc;
}

/// Builds an instance from a JSON document without validating it.
/// Structural problems (missing fields, wrong types) raise ParseError.
inline PortfolioInstance instance_from_json(const nlohmann::json& doc,
                                            const std::string& source = "document") {
  PortfolioInstance x;
  std::string where;
  auto fail = [&](const std::string& what) -> ParseError {
    return ParseError(source, 0, where, what);
  };
  try {
    if (!doc.is_object()) throw fail("document must be an object");
    for (const char* section : {"families", "options", "projects", "budget"})
      if (!doc.contains(section) || !doc.at(section).is_array())
        throw ParseError(source, 0, section, "missing array");
    x.label = doc.value("label", std::string{});
    std::size_t i = 0;
    for (const auto& f : doc.at("families")) {
      where = "families[" + std::to_string(i++) + "]";
      x.families.push_back({f.at("family_key").get<std::string>(),
                            f.at("option_keys").get<std::vector<std::string>>(),
                            f.value("mandated", false)});
    }
    i = 0;
    for (const auto& o : doc.at("options")) {
      where = "options[" + std::to_string(i++) + "]";
      CapabilityOption opt;
      opt.option_key = o.at("option_key").get<std::string>();
      opt.family_key = o.at("family_key").get<std::string>();
      opt.project_refs = o.value("project_refs", std::vector<std::string>{});
      if (o.contains("value_schedule")) {
        for (const auto& [year, v] : o.at("value_schedule").items())
          opt.value_schedule[detail::parse_int<Year>(source, 0, where + ".value_schedule", year)] =
              v.get<double>();
      }
      opt.mandated = o.value("mandated", false);
      opt.disabled = o.value("disabled", false);
      x.options.push_back(std::move(opt));
    }
    i = 0;
    for (const auto& p : doc.at("projects")) {
      where = "projects[" + std::to_string(i++) + "]";
      Project prj;
      prj.variant_key = p.at("variant_key").get<std::string>();
      prj.project_id = p.value("project_id", prj.variant_key);
      prj.name = p.value("name", prj.variant_key);
      prj.mandated = p.value("mandated", false);
      prj.fixed_in_time = p.value("fixed_in_time", false);
      prj.preferred_start = p.at("preferred_start").get<Year>();
      prj.earliest_start = p.value("earliest_start", prj.preferred_start);
      prj.latest_start = p.value("latest_start", prj.preferred_start);
      prj.cost_profile = p.at("cost_profile").get<std::vector<Money>>();
      x.projects.push_back(std::move(prj));
    }
    i = 0;
    for (const auto& b : doc.at("budget")) {
      where = "budget[" + std::to_string(i++) + "]";
      x.budget.push_back({b.at("year").get<Year>(), b.at("budget").get<Money>(),
                          b.value("under_slack", Money{0}), b.value("over_slack", Money{0})});
    }
  } catch (const nlohmann::json::exception& e) {
    throw fail(e.what());
  }
  return x;
}

// ---------------------------------------------------------------------------
// Delimited tables

inline PortfolioInstance read_delimited(const std::filesystem::path& dir) {
  using namespace detail;
  PortfolioInstance x;

  // families.csv: one row per option; a row with an empty Option cell only
  // carries family-level flags (Mandated).
  Table ft = read_table(dir / "families.csv");
  expect_header(ft, kFamilyColumns);
  std::vector<Year> value_years;
  for (std::size_t c = kFamilyColumns.size(); c < ft.header.size(); ++c) {
    const auto& h = ft.header[c];
    if (h.rfind("Value@", 0) != 0)
      throw ParseError(ft.file, 1, h, "value columns must be named Value@<year>");
    value_years.push_back(parse_int<Year>(ft.file, 1, h, h.substr(6)));
  }
  for (std::size_t r = 0; r < ft.rows.size(); ++r) {
    const auto& row = ft.rows[r];
    std::size_t line = ft.line_numbers[r];
    if (row[0].empty()) throw ParseError(ft.file, line, "Family", "family key is empty");
    Family* fam = x.find_family(row[0]);
    if (!fam) {
      x.families.push_back({row[0], {}, false});
      fam = &x.families.back();
    }
    if (row[1].empty()) {
      fam->mandated = parse_bool(ft, r, 3);
      continue;
    }
    CapabilityOption o;
    o.option_key = row[1];
    o.family_key = row[0];
    if (!row[2].empty())
      for (auto& ref : split(row[2], ';'))
        if (!ref.empty()) o.project_refs.push_back(ref);
    o.mandated = parse_bool(ft, r, 3);
    o.disabled = parse_bool(ft, r, 4);
    for (std::size_t k = 0; k < value_years.size(); ++k) {
      const auto& cell = row[kFamilyColumns.size() + k];
      if (!cell.empty())
        o.value_schedule[value_years[k]] =
            parse_double(ft.file, line, ft.header[kFamilyColumns.size() + k], cell);
    }
    fam->option_keys.push_back(o.option_key);
    x.options.push_back(std::move(o));
  }
  if (x.families.empty()) throw ParseError(ft.file, 0, "", "family set empty");

  // projects.csv: spend per calendar year at the preferred start placement.
  Table pt = read_table(dir / "projects.csv");
  expect_header(pt, kProjectColumns);
  std::vector<Year> cost_years;
  for (std::size_t c = kProjectColumns.size(); c < pt.header.size(); ++c)
    cost_years.push_back(parse_int<Year>(pt.file, 1, pt.header[c], pt.header[c]));
  for (std::size_t k = 1; k < cost_years.size(); ++k)
    if (cost_years[k] != cost_years[k - 1] + 1)
      throw ParseError(pt.file, 1, pt.header[kProjectColumns.size() + k],
                       "year columns must be consecutive");
  for (std::size_t r = 0; r < pt.rows.size(); ++r) {
    const auto& row = pt.rows[r];
    std::size_t line = pt.line_numbers[r];
    Project p;
    p.variant_key = row[0];
    p.project_id = row[1].empty() ? row[0] : row[1];
    p.name = p.variant_key;
    p.mandated = parse_bool(pt, r, 2);
    p.fixed_in_time = parse_bool(pt, r, 3);
    p.preferred_start = parse_int<Year>(pt.file, line, pt.header[4], row[4]);
    p.earliest_start = parse_int<Year>(pt.file, line, pt.header[5], row[5]);
    p.latest_start = parse_int<Year>(pt.file, line, pt.header[6], row[6]);
    std::vector<Money> spend(cost_years.size(), 0);
    for (std::size_t k = 0; k < cost_years.size(); ++k) {
      const auto& cell = row[kProjectColumns.size() + k];
      if (!cell.empty())
        spend[k] = parse_int<Money>(pt.file, line, pt.header[kProjectColumns.size() + k], cell);
    }
    // Profile = spend from the preferred start year to the last nonzero year.
    std::ptrdiff_t last = -1;
    for (std::size_t k = 0; k < spend.size(); ++k) {
      if (spend[k] == 0) continue;
      if (cost_years[k] < p.preferred_start)
        throw ParseError(pt.file, line, pt.header[kProjectColumns.size() + k],
                         "spend before the preferred start year");
      last = static_cast<std::ptrdiff_t>(k);
    }
    for (std::ptrdiff_t k = 0; k <= last; ++k)
      if (cost_years[static_cast<std::size_t>(k)] >= p.preferred_start)
        p.cost_profile.push_back(spend[static_cast<std::size_t>(k)]);
    x.projects.push_back(std::move(p));
  }

  Table bt = read_table(dir / "budget.csv");
  expect_header(bt, kBudgetColumns);
  for (std::size_t r = 0; r < bt.rows.size(); ++r) {
    const auto& row = bt.rows[r];
    std::size_t line = bt.line_numbers[r];
    x.budget.push_back({parse_int<Year>(bt.file, line, "Year", row[0]),
                        parse_int<Money>(bt.file, line, "Budget", row[1]),
                        parse_int<Money>(bt.file, line, "UnderSlack", row[2]),
                        parse_int<Money>(bt.file, line, "OverSlack", row[3])});
  }

  if (std::ifstream lf(dir / "label.txt"); lf) {
    std::string label;
    std::getline(lf, label);
    x.label = trim(label);
  } else {
    x.label = dir.filename().string();
  }
  return x;
}

inline void write_delimited(const PortfolioInstance& x, const std::filesystem::path& dir) {
  using namespace detail;
  std::filesystem::create_directories(dir);

  std::set<Year> value_years;
  for (const auto& o : x.options)
    for (const auto& [y, v] : o.value_schedule) value_years.insert(y);
  {
    std::ofstream out(dir / "families.csv");
    out << join(kFamilyColumns, ",");
    for (Year y : value_years) out << ",Value@" << y;
    out << "\n";
    for (const auto& f : x.families) {
      if (f.mandated) {
        out << f.family_key << ",,,True,False";
        for (std::size_t k = 0; k < value_years.size(); ++k) out << ",";
        out << "\n";
      }
      for (const auto& key : f.option_keys) {
        const auto* o = x.find_option(key);
        if (!o) continue;
        out << f.family_key << "," << o->option_key << "," << join(o->project_refs, ";") << ","
            << bool_text(o->mandated) << "," << bool_text(o->disabled);
        for (Year y : value_years) {
          out << ",";
          if (auto it = o->value_schedule.find(y); it != o->value_schedule.end())
            out << format_double(it->second);
        }
        out << "\n";
      }
    }
    if (!out) throw std::runtime_error("failed writing " + (dir / "families.csv").string());
  }

  {
    std::optional<Year> lo, hi;
    auto widen = [&](Year a, Year b) {
      lo = lo ? std::min(*lo, a) : a;
      hi = hi ? std::max(*hi, b) : b;
    };
    if (auto h = x.horizon()) widen(h->first, h->second);
    for (const auto& p : x.projects)
      if (!p.cost_profile.empty())
        widen(p.preferred_start, p.preferred_start + p.duration() - 1);
    std::ofstream out(dir / "projects.csv");
    out << join(kProjectColumns, ",");
    if (lo)
      for (Year y = *lo; y <= *hi; ++y) out << "," << y;
    out << "\n";
    for (const auto& p : x.projects) {
      out << p.variant_key << "," << p.project_id << "," << bool_text(p.mandated) << ","
          << bool_text(p.fixed_in_time) << "," << p.preferred_start << "," << p.earliest_start
          << "," << p.latest_start;
      if (lo)
        for (Year y = *lo; y <= *hi; ++y) {
          Year k = y - p.preferred_start;
          out << "," << (k >= 0 && k < p.duration() ? p.cost_profile[static_cast<std::size_t>(k)] : 0);
        }
      out << "\n";
    }
    if (!out) throw std::runtime_error("failed writing " + (dir / "projects.csv").string());
  }

  {
    std::ofstream out(dir / "budget.csv");
    out << join(kBudgetColumns, ",") << "\n";
    for (const auto& b : x.budget)
      out << b.year << "," << b.budget << "," << b.under_slack << "," << b.over_slack << "\n";
    if (!out) throw std::runtime_error("failed writing " + (dir / "budget.csv").string());
  }
  std::ofstream(dir / "label.txt") << x.label << "\n";
}

// ---------------------------------------------------------------------------

inline PortfolioInstance parse_instance_json(const std::string& text,
                                             const std::string& source = "document") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source, 0, "", e.what());
  }
  return instance_from_json(doc, source);
}

/// Loads and validates an instance. Throws ParseError or ValidationError.
inline PortfolioInstance load_instance(const std::filesystem::path& path, InstanceFormat format) {
  PortfolioInstance x;
  if (format == InstanceFormat::kDelimitedTable) {
    x = read_delimited(path);
  } else {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string(), 0, "", "cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    x = parse_instance_json(ss.str(), path.filename().string());
    if (x.families.empty()) throw ParseError(path.filename().string(), 0, "families", "family set empty");
  }
  if (auto v = validate(x); !v.empty()) throw ValidationError(std::move(v));
  return x;
}

/// Picks the format from the path: directories are delimited tables.
inline PortfolioInstance load_instance(const std::filesystem::path& path) {
  return load_instance(path, std::filesystem::is_directory(path) ? InstanceFormat::kDelimitedTable
                                                                 : InstanceFormat::kStructuredText);
}

inline void write_instance(const PortfolioInstance& x, const std::filesystem::path& path,
                           InstanceFormat format) {
  if (format == InstanceFormat::kDelimitedTable) {
    write_delimited(x, path);
    return;
  }
  std::ofstream out(path);
  out << to_json(x).dump(2) << "\n";
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace portfolio
