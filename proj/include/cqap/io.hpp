#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "cqap/prob.hpp"
#include "cqap/query.hpp"

namespace cqap {

// Input files are malformed; carries the file name and line.
class InputError : public std::runtime_error {
 public:
  InputError(const std::string& where, int line, const std::string& msg)
      : std::runtime_error(where + ":" + std::to_string(line) + ": " + msg) {}
};

// Interns string values to dense integers; values are never coerced.
class Dictionary {
 public:
  Value intern(const std::string& s) {
    auto [it, fresh] = ids_.emplace(s, static_cast<Value>(names_.size()));
    if (fresh) names_.push_back(s);
    return it->second;
  }
  std::optional<Value> find(const std::string& s) const {
    auto it = ids_.find(s);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  const std::string& name(Value v) const { return names_.at(v); }
  std::size_t size() const { return names_.size(); }

 private:
  std::unordered_map<std::string, Value> ids_;
  std::vector<std::string> names_;
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) out.push_back(trim(cur));
  if (!s.empty() && s.back() == ',') out.push_back("");
  return out;
}

}  // namespace detail

// One update: multiplicity change or uncertain probability fold.
struct UpdateLine {
  std::string relation;
  std::vector<std::string> values;
  std::variant<std::int64_t, PProb> change;
};

struct RequestLine {
  std::vector<std::pair<std::string, std::string>> bindings;
  std::optional<std::size_t> limit;
};

struct ScriptLine {
  int line = 0;
  std::variant<UpdateLine, RequestLine> item;
};

// `+R a,b`, `-R a,b`, `R a,b *m`, `R a,b @p±`, `? A=a, B=b [limit n]`; `#` starts a comment.
inline ScriptLine parse_script_line(const std::string& raw, const std::string& where, int line) {
  std::string s = detail::trim(raw.substr(0, raw.find('#')));
  ScriptLine out;
  out.line = line;
  auto fail = [&](const std::string& m) { throw InputError(where, line, m); };
  if (s[0] == '?') {
    RequestLine r;
    std::string body = detail::trim(s.substr(1));
    auto lim = body.rfind("limit");
    if (lim != std::string::npos && (lim == 0 || body[lim - 1] == ' ' || body[lim - 1] == ',') &&
        lim + 5 < body.size() && (body[lim + 5] == ' ' || body[lim + 5] == '\t')) {
      std::string n = detail::trim(body.substr(lim + 5));
      try {
        std::size_t used = 0;
        long long v = std::stoll(n, &used);
        if (used != n.size() || v < 0) fail("bad limit '" + n + "'");
        r.limit = static_cast<std::size_t>(v);
      } catch (const std::logic_error&) {
        fail("bad limit '" + n + "'");
      }
      body = detail::trim(body.substr(0, lim));
      if (!body.empty() && body.back() == ',') body.pop_back();
    }
    if (!detail::trim(body).empty())
      for (const std::string& b : detail::split_commas(body)) {
        auto eq = b.find('=');
        if (eq == std::string::npos) fail("binding '" + b + "' lacks '='");
        std::string var = detail::trim(b.substr(0, eq)), val = detail::trim(b.substr(eq + 1));
        if (var.empty() || val.empty()) fail("empty binding '" + b + "'");
        r.bindings.emplace_back(var, val);
      }
    out.item = r;
    return out;
  }
  UpdateLine u;
  std::optional<std::int64_t> sign;
  if (s[0] == '+' || s[0] == '-') {
    sign = s[0] == '+' ? 1 : -1;
    s = detail::trim(s.substr(1));
  }
  auto sp = s.find_first_of(" \t");
  if (sp == std::string::npos) fail("update needs a relation and a tuple");
  u.relation = s.substr(0, sp);
  std::string rest = detail::trim(s.substr(sp));
  std::string suffix;
  auto mark = rest.find_first_of("*@");
  if (mark != std::string::npos) {
    suffix = detail::trim(rest.substr(mark));
    rest = detail::trim(rest.substr(0, mark));
  }
  u.values = detail::split_commas(rest);
  for (const auto& v : u.values)
    if (v.empty()) fail("empty value in tuple");
  if (sign) {
    if (!suffix.empty()) fail("'+'/'-' updates take no multiplicity or probability");
    u.change = *sign;
  } else if (suffix.empty()) {
    fail("update needs '+'/'-' or a '*m' / '@p' suffix");
  } else if (suffix[0] == '*') {
    std::string m = detail::trim(suffix.substr(1));
    try {
      std::size_t used = 0;
      long long v = std::stoll(m, &used);
      if (used != m.size()) fail("bad multiplicity '" + m + "'");
      u.change = static_cast<std::int64_t>(v);
    } catch (const std::logic_error&) {
      fail("bad multiplicity '" + m + "'");
    }
  } else {
    try {
      u.change = parse_pprob(detail::trim(suffix.substr(1)));
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }
  out.item = u;
  return out;
}

inline std::vector<ScriptLine> parse_script(std::istream& in, const std::string& where) {
  std::vector<ScriptLine> out;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (detail::trim(raw.substr(0, raw.find('#'))).empty()) continue;
    out.push_back(parse_script_line(raw, where, line));
  }
  return out;
}

// Rows of `<R>.csv`: header = schema, optional trailing `__m` (multiplicity) or `__p`
// (probability token) column.
struct DataRow {
  std::string relation;
  Tuple tuple;
  std::variant<std::int64_t, PProb> change;
};

inline std::vector<DataRow> load_relation_csv(const std::filesystem::path& file,
                                              const std::string& relation, std::size_t arity,
                                              Dictionary& dict) {
  std::ifstream in(file);
  if (!in) throw InputError(file.string(), 0, "cannot open");
  std::string raw;
  int line = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, raw)) {
    ++line;
    if (!detail::trim(raw).empty()) header = detail::split_commas(detail::trim(raw));
  }
  if (header.empty()) return {};
  enum { Plain, Mult, Prob } extra = Plain;
  if (header.back() == "__m") extra = Mult;
  if (header.back() == "__p") extra = Prob;
  std::size_t cols = header.size() - (extra == Plain ? 0 : 1);
  if (cols != arity)
    throw InputError(file.string(), line,
                     "header has " + std::to_string(cols) + " columns, relation " + relation +
                         " has arity " + std::to_string(arity));
  std::vector<DataRow> rows;
  while (std::getline(in, raw)) {
    ++line;
    if (detail::trim(raw).empty()) continue;
    auto f = detail::split_commas(detail::trim(raw));
    if (f.size() != header.size())
      throw InputError(file.string(), line,
                       "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(f.size()));
    DataRow r;
    r.relation = relation;
    for (std::size_t i = 0; i < cols; ++i) r.tuple.push_back(dict.intern(f[i]));
    r.change = std::int64_t{1};
    try {
      if (extra == Mult) {
        std::size_t used = 0;
        long long m = std::stoll(f.back(), &used);
        if (used != f.back().size()) throw std::invalid_argument("bad multiplicity");
        r.change = static_cast<std::int64_t>(m);
      } else if (extra == Prob) {
        r.change = parse_pprob(f.back());
      }
    } catch (const std::exception& e) {
      throw InputError(file.string(), line, e.what());
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

// Loads `<dir>/<R>.csv` for every relation of the query; a missing file is an empty relation.
inline std::vector<DataRow> load_data_dir(const std::filesystem::path& dir, const Query& q,
                                          Dictionary& dict) {
  std::map<std::string, std::size_t> arity;
  for (const auto& a : q.atoms) {
    auto [it, fresh] = arity.emplace(a.relation, a.vars.size());
    if (!fresh && it->second != a.vars.size())
      throw QueryError("relation " + a.relation + " is used with two arities");
  }
  std::vector<DataRow> rows;
  for (const auto& [rel, n] : arity) {
    auto file = dir / (rel + ".csv");
    if (!std::filesystem::exists(file)) continue;
    auto part = load_relation_csv(file, rel, n, dict);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

inline Database<std::int64_t> to_database(const Query& q, const std::vector<DataRow>& rows) {
  Database<std::int64_t> db;
  for (const auto& a : q.atoms) db.relation(a.relation, a.vars.size());
  for (const auto& r : rows) {
    if (!std::holds_alternative<std::int64_t>(r.change))
      throw std::invalid_argument("probabilities in data need the probabilistic mode");
    db.relation(r.relation, r.tuple.size()).upsert(r.tuple, std::get<std::int64_t>(r.change));
  }
  return db;
}

inline ProbDatabase to_prob_database(const Query& q, const std::vector<DataRow>& rows) {
  ProbDatabase db;
  for (const auto& a : q.atoms) db.declare(a.relation, a.vars.size());
  for (const auto& r : rows) {
    if (std::holds_alternative<PProb>(r.change))
      db.upsert(r.relation, r.tuple, ProbUpdate::uncertain(std::get<PProb>(r.change)));
    else
      db.upsert(r.relation, r.tuple, ProbUpdate::certain(std::get<std::int64_t>(r.change)));
  }
  return db;
}

}  // namespace cqap
