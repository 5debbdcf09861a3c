/**
 * @file lp_format.hpp
 * @brief CPLEX-style LP text export and import for IlpModel.
 *
 * Variables are written as `Choose_<pseudo key>`. Row names replace the dash
 * of the label prefix by an underscore (`budget-hi-2021` -> `budget_hi_2021`)
 * since `-` is not a legal name character in the format; the reader maps
 * known prefixes back. On import, option variables are recognised by their
 * presence in a family row.
 */
#pragma once

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "portfolio/ilp_model.hpp"

namespace portfolio {

inline constexpr std::string_view kLpVarPrefix = "Choose_";

class LpFormatError : public std::runtime_error {
 public:
  LpFormatError(std::size_t line, const std::string& what)
      : std::runtime_error("LP line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace lp_detail {

inline std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string signed_coef(double c) {
  return (c < 0 ? "-" : "+") + shortest(c < 0 ? -c : c);
}

inline std::string lp_row_name(const std::string& label) {
  std::string prefix = row_prefix(label);
  if (prefix.empty()) return label;
  std::string out = prefix;
  for (auto& ch : out)
    if (ch == '-') ch = '_';
  return out + "_" + label.substr(prefix.size() + 1);
}

inline std::string label_from_lp(const std::string& name) {
  for (const auto& p : row_family::all()) {
    std::string lp = p;
    for (auto& ch : lp)
      if (ch == '-') ch = '_';
    lp += "_";
    if (name.size() > lp.size() && name.compare(0, lp.size(), lp) == 0)
      return p + "-" + name.substr(lp.size());
  }
  return name;
}

inline void write_terms(std::ostream& out, const IlpModel& m, const std::vector<Term>& terms) {
  constexpr std::size_t kPerLine = 8;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    if (k && k % kPerLine == 0) out << "\n   ";
    out << " " << signed_coef(terms[k].coef) << " " << kLpVarPrefix
        << m.variables[terms[k].var].name;
  }
}

// ---- reader ---------------------------------------------------------------

enum class Tok { kName, kNumber, kSign, kRel, kColon };

struct Token {
  Tok kind;
  std::string text;
  std::size_t line;
};

inline bool name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) ||
         std::string_view("!\"#$%&()/,.;?@_`'{}|~").find(c) != std::string_view::npos;
}

inline std::vector<Token> lex(const std::string& text, std::size_t first_line) {
  std::vector<Token> out;
  std::size_t line = first_line;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '+' || c == '-') {
      out.push_back({Tok::kSign, std::string(1, c), line});
      ++i;
    } else if (c == '<' || c == '>' || c == '=') {
      std::string r(1, c);
      if (i + 1 < text.size() && (text[i + 1] == '=' || text[i + 1] == '<' || text[i + 1] == '>'))
        r += text[++i];
      ++i;
      if (r == "=<" || r == "<") r = "<=";
      if (r == "=>" || r == ">") r = ">=";
      out.push_back({Tok::kRel, r, line});
    } else if (c == ':') {
      out.push_back({Tok::kColon, ":", line});
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i;
      while (j < text.size() &&
             (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.'))
        ++j;
      if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
        if (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) {
          j = k;
          while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        }
      }
      out.push_back({Tok::kNumber, text.substr(i, j - i), line});
      i = j;
    } else if (name_char(c)) {
      std::size_t j = i;
      while (j < text.size() && name_char(text[j])) ++j;
      out.push_back({Tok::kName, text.substr(i, j - i), line});
      i = j;
    } else {
      throw LpFormatError(line, std::string("unexpected character '") + c + "'");
    }
  }
  return out;
}

inline double to_number(const Token& t) {
  double v = 0.0;
  auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
  if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size())
    throw LpFormatError(t.line, "bad number '" + t.text + "'");
  return v;
}

struct Cursor {
  const std::vector<Token>& toks;
  std::size_t pos = 0;
  bool done() const { return pos >= toks.size(); }
  const Token& peek() const { return toks[pos]; }
  const Token& next() { return toks[pos++]; }
  std::size_t line() const { return done() ? (toks.empty() ? 0 : toks.back().line) : peek().line; }
};

/// `name :` when present.
inline std::string maybe_label(Cursor& c) {
  if (c.pos + 1 < c.toks.size() && c.toks[c.pos].kind == Tok::kName &&
      c.toks[c.pos + 1].kind == Tok::kColon) {
    std::string n = c.toks[c.pos].text;
    c.pos += 2;
    return n;
  }
  return {};
}

/// Linear expression up to a relation (or end of tokens). Constant terms are
/// accumulated into `constant`.
inline std::vector<std::pair<std::string, double>> expression(Cursor& c, double& constant) {
  std::vector<std::pair<std::string, double>> out;
  constant = 0.0;
  while (!c.done() && c.peek().kind != Tok::kRel) {
    double sign = 1.0;
    while (!c.done() && c.peek().kind == Tok::kSign) sign *= c.next().text == "-" ? -1.0 : 1.0;
    if (c.done()) throw LpFormatError(c.line(), "dangling sign");
    double coef = 1.0;
    bool have_number = false;
    if (c.peek().kind == Tok::kNumber) {
      coef = to_number(c.next());
      have_number = true;
    }
    if (!c.done() && c.peek().kind == Tok::kName &&
        !(c.pos + 1 < c.toks.size() && c.toks[c.pos + 1].kind == Tok::kColon)) {
      out.emplace_back(c.next().text, sign * coef);
    } else if (have_number) {
      constant += sign * coef;
    } else {
      throw LpFormatError(c.line(), "expected a term");
    }
    if (!c.done() && c.peek().kind != Tok::kSign && c.peek().kind != Tok::kRel) break;
  }
  return out;
}

inline std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

}  // namespace lp_detail

/// Renders the model in LP format.
inline std::string to_lp_string(const IlpModel& m) {
  using namespace lp_detail;
  std::ostringstream out;
  out << "\\Problem name: " << m.name << "\n\n";
  out << "Maximize\n obj:";
  std::vector<Term> obj;
  for (std::size_t j = 0; j < m.objective.size(); ++j)
    if (m.objective[j] != 0.0) obj.push_back({j, m.objective[j]});
  if (obj.empty())
    out << " 0";
  else
    write_terms(out, m, obj);
  out << "\nSubject To\n";
  for (const auto& r : m.constraints) {
    out << " " << lp_row_name(r.label) << ":";
    if (r.terms.empty() && m.num_vars() > 0)
      out << " +0 " << kLpVarPrefix << m.variables[0].name;
    else
      write_terms(out, m, r.terms);
    out << " " << to_string(r.relation) << " " << shortest(r.rhs) << "\n";
  }
  out << "Bounds\n";
  for (const auto& v : m.variables) out << " 0 <= " << kLpVarPrefix << v.name << " <= 1\n";
  out << "Binaries\n";
  for (std::size_t j = 0; j < m.variables.size(); ++j) {
    out << " " << kLpVarPrefix << m.variables[j].name;
    if (j % 8 == 7 || j + 1 == m.variables.size()) out << "\n";
  }
  out << "End\n";
  return out.str();
}

inline void export_lp(const IlpModel& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << to_lp_string(m);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

/// Parses an LP document holding a binary maximization model.
inline IlpModel parse_lp(const std::string& text) {
  using namespace lp_detail;
  enum class Section { kNone, kObjective, kConstraints, kBounds, kBinaries, kGenerals, kEnd };
  static const std::map<std::string, Section> headers = {
      {"maximize", Section::kObjective}, {"maximise", Section::kObjective},
      {"maximum", Section::kObjective},  {"max", Section::kObjective},
      {"subject to", Section::kConstraints}, {"such that", Section::kConstraints},
      {"st", Section::kConstraints},     {"s.t.", Section::kConstraints},
      {"bounds", Section::kBounds},      {"bound", Section::kBounds},
      {"binaries", Section::kBinaries},  {"binary", Section::kBinaries},
      {"bin", Section::kBinaries},       {"generals", Section::kGenerals},
      {"general", Section::kGenerals},   {"gen", Section::kGenerals},
      {"end", Section::kEnd}};

  IlpModel m;
  std::map<Section, std::string> body;
  std::map<Section, std::size_t> start_line;
  Section cur = Section::kNone;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  bool saw_objective = false;
  while (std::getline(in, line)) {
    ++n;
    if (auto pos = line.find('\\'); pos != std::string::npos) {
      std::string comment = line.substr(pos);
      if (comment.rfind("\\Problem name:", 0) == 0) {
        std::string name = comment.substr(14);
        auto b = name.find_first_not_of(' ');
        m.name = b == std::string::npos ? "" : name.substr(b);
      }
      line = line.substr(0, pos);
    }
    std::string key = lower(line);
    auto b = key.find_first_not_of(" \t\r");
    auto e = key.find_last_not_of(" \t\r");
    key = b == std::string::npos ? "" : key.substr(b, e - b + 1);
    if (key == "minimize" || key == "minimise" || key == "min" || key == "minimum")
      throw LpFormatError(n, "only maximization models are supported");
    if (auto it = headers.find(key); it != headers.end()) {
      cur = it->second;
      if (cur == Section::kObjective) saw_objective = true;
      start_line.emplace(cur, n + 1);
      continue;
    }
    if (cur == Section::kNone) {
      if (!key.empty()) throw LpFormatError(n, "content before the objective section");
      continue;
    }
    if (cur == Section::kEnd) {
      if (!key.empty()) throw LpFormatError(n, "content after End");
      continue;
    }
    body[cur] += line + "\n";
  }
  if (!saw_objective) throw LpFormatError(n, "missing Maximize section");

  // Binaries fix variable order.
  std::map<std::string, std::size_t> index;
  auto strip = [](const Token& t) {
    if (t.text.rfind(kLpVarPrefix, 0) != 0)
      throw LpFormatError(t.line, "variable '" + t.text + "' lacks the Choose_ prefix");
    return t.text.substr(kLpVarPrefix.size());
  };
  {
    auto toks = lex(body[Section::kBinaries], start_line[Section::kBinaries]);
    for (const auto& t : toks) {
      if (t.kind != Tok::kName) throw LpFormatError(t.line, "expected a variable name");
      std::string name = strip(t);
      if (index.count(name)) throw LpFormatError(t.line, "duplicate binary " + t.text);
      index[name] = m.variables.size();
      m.variables.push_back({name, VarKind::kProject});
    }
  }
  if (!body[Section::kGenerals].empty() &&
      !lex(body[Section::kGenerals], start_line[Section::kGenerals]).empty())
    throw LpFormatError(start_line[Section::kGenerals], "general integers are not supported");
  m.objective.assign(m.variables.size(), 0.0);

  auto var_of = [&](const std::string& raw, std::size_t at) {
    Token t{Tok::kName, raw, at};
    auto it = index.find(strip(t));
    if (it == index.end()) throw LpFormatError(at, "variable " + raw + " is not declared binary");
    return it->second;
  };

  {
    auto toks = lex(body[Section::kObjective], start_line[Section::kObjective]);
    Cursor c{toks};
    maybe_label(c);
    double constant = 0.0;
    for (const auto& [name, coef] : expression(c, constant))
      m.objective[var_of(name, c.line())] += coef;
    if (!c.done()) throw LpFormatError(c.line(), "unexpected token in objective");
  }

  {
    auto toks = lex(body[Section::kConstraints], start_line[Section::kConstraints]);
    Cursor c{toks};
    while (!c.done()) {
      std::size_t at = c.line();
      std::string name = maybe_label(c);
      double constant = 0.0;
      auto expr = expression(c, constant);
      if (c.done() || c.peek().kind != Tok::kRel) throw LpFormatError(at, "row lacks a relation");
      std::string rel = c.next().text;
      double sign = 1.0;
      while (!c.done() && c.peek().kind == Tok::kSign) sign *= c.next().text == "-" ? -1.0 : 1.0;
      if (c.done() || c.peek().kind != Tok::kNumber) throw LpFormatError(at, "row lacks a rhs");
      double rhs = sign * to_number(c.next());
      ConstraintRow row;
      row.label = label_from_lp(name.empty() ? "R" + std::to_string(m.constraints.size() + 1) : name);
      row.relation = rel == "<=" ? Relation::kLessEqual
                     : rel == ">=" ? Relation::kGreaterEqual
                                   : Relation::kEqual;
      row.rhs = rhs - constant;
      std::map<std::size_t, double> terms;
      for (const auto& [v, coef] : expr) terms[var_of(v, at)] += coef;
      for (const auto& [v, coef] : terms)
        if (coef != 0.0) row.terms.push_back({v, coef});
      m.constraints.push_back(std::move(row));
    }
  }

  {
    auto toks = lex(body[Section::kBounds], start_line[Section::kBounds]);
    // Only the binary box is accepted: `0 <= x <= 1`, `x <= 1`, `x >= 0`.
    Cursor c{toks};
    while (!c.done()) {
      std::size_t at = c.line();
      std::vector<Token> stmt;
      stmt.push_back(c.next());
      while (!c.done() && (stmt.back().kind == Tok::kRel || stmt.back().kind == Tok::kSign ||
                           c.peek().kind == Tok::kRel))
        stmt.push_back(c.next());
      std::string shape;
      for (const auto& t : stmt)
        shape += t.kind == Tok::kName ? "n" : t.kind == Tok::kNumber ? "k" : t.kind == Tok::kRel ? t.text : "s";
      auto num = [&](std::size_t i) { return to_number(stmt[i]); };
      bool ok = false;
      if (shape == "k<=n<=k") {
        var_of(stmt[2].text, at);
        ok = num(0) == 0.0 && num(4) == 1.0;
      } else if (shape == "n<=k") {
        var_of(stmt[0].text, at);
        ok = num(2) == 1.0;
      } else if (shape == "n>=k") {
        var_of(stmt[0].text, at);
        ok = num(2) == 0.0;
      }
      if (!ok) throw LpFormatError(at, "only 0/1 bounds are supported");
    }
  }

  std::set<std::size_t> option_vars;
  for (const auto& r : m.constraints)
    if (row_prefix(r.label) == row_family::kFamily)
      for (const auto& t : r.terms) option_vars.insert(t.var);
  for (std::size_t v : option_vars) m.variables[v].kind = VarKind::kOption;
  return m;
}

inline IlpModel read_lp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_lp(ss.str());
}

}  // namespace portfolio
