#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cqap {

using VarId = int;
using VarSet = std::uint64_t;   // bit i = variable i
using AtomSet = std::uint64_t;  // bit i = atom i

inline constexpr int kMaxVars = 64;
inline constexpr int kMaxAtoms = 64;

inline VarSet bit(int i) { return VarSet{1} << i; }
inline bool has(std::uint64_t set, int i) { return (set >> i) & 1U; }
inline int popcount(std::uint64_t s) { return std::popcount(s); }

inline std::vector<int> members(std::uint64_t s) {
  std::vector<int> out;
  while (s) {
    out.push_back(std::countr_zero(s));
    s &= s - 1;
  }
  return out;
}

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t pos)
      : std::runtime_error(msg + " at position " + std::to_string(pos)), pos_(pos) {}
  std::size_t position() const { return pos_; }

 private:
  std::size_t pos_;
};

class QueryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Atom {
  std::string relation;
  std::vector<VarId> vars;
};

struct Query {
  std::string name = "Q";
  std::vector<std::string> var_names;
  std::vector<Atom> atoms;
  std::vector<VarId> outputs;
  std::vector<VarId> inputs;

  int num_vars() const { return static_cast<int>(var_names.size()); }
  int num_atoms() const { return static_cast<int>(atoms.size()); }

  VarId find_var(const std::string& n) const {
    auto it = std::find(var_names.begin(), var_names.end(), n);
    return it == var_names.end() ? -1 : static_cast<VarId>(it - var_names.begin());
  }
  VarId var(const std::string& n) const {
    VarId v = find_var(n);
    if (v < 0) throw QueryError("unknown variable '" + n + "'");
    return v;
  }
  VarId intern(const std::string& n) {
    VarId v = find_var(n);
    if (v >= 0) return v;
    if (num_vars() >= kMaxVars) throw QueryError("too many variables");
    var_names.push_back(n);
    return num_vars() - 1;
  }

  VarSet output_set() const { return to_set(outputs); }
  VarSet input_set() const { return to_set(inputs); }
  VarSet free_set() const { return output_set() | input_set(); }
  VarSet all_vars() const {
    VarSet s = 0;
    for (const auto& a : atoms) s |= to_set(a.vars);
    return s;
  }
  VarSet atom_vars(int i) const { return to_set(atoms[i].vars); }
  AtomSet atoms_of(VarId v) const {
    AtomSet s = 0;
    for (int i = 0; i < num_atoms(); ++i)
      if (std::find(atoms[i].vars.begin(), atoms[i].vars.end(), v) != atoms[i].vars.end())
        s |= bit(i);
    return s;
  }
  bool is_input(VarId v) const { return has(input_set(), v); }
  bool is_output(VarId v) const { return has(output_set(), v); }

  static VarSet to_set(const std::vector<VarId>& vs) {
    VarSet s = 0;
    for (VarId v : vs) s |= bit(v);
    return s;
  }

  std::string names(VarSet s) const {
    std::string out;
    for (int v : members(s)) {
      if (!out.empty()) out += ",";
      out += var_names[v];
    }
    return out;
  }

  std::string to_string() const {
    auto side = [&](const std::vector<VarId>& vs) {
      if (vs.empty()) return std::string(".");
      std::string s;
      for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i) s += ",";
        s += var_names[vs[i]];
      }
      return s;
    };
    std::string out = name + "(" + side(outputs) + "|" + side(inputs) + ") = ";
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (i) out += ", ";
      out += atoms[i].relation + "(";
      for (std::size_t j = 0; j < atoms[i].vars.size(); ++j) {
        if (j) out += ",";
        out += var_names[atoms[i].vars[j]];
      }
      out += ")";
    }
    return out + ".";
  }
};

struct Hypergraph {
  VarSet vertices = 0;
  std::vector<VarSet> edges;
};

inline Hypergraph hypergraph(const Query& q) {
  Hypergraph h;
  for (int i = 0; i < q.num_atoms(); ++i) {
    h.edges.push_back(q.atom_vars(i));
    h.vertices |= h.edges.back();
  }
  return h;
}

namespace detail {

class QueryLexer {
 public:
  explicit QueryLexer(const std::string& text) : s_(text) {}

  void skip() {
    while (i_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(s_[i_]))) {
        ++i_;
      } else if (s_[i_] == '#') {
        while (i_ < s_.size() && s_[i_] != '\n') ++i_;
      } else {
        break;
      }
    }
  }
  bool at_end() {
    skip();
    return i_ >= s_.size();
  }
  std::size_t pos() const { return i_; }
  bool peek(char c) {
    skip();
    return i_ < s_.size() && s_[i_] == c;
  }
  bool accept(char c) {
    if (!peek(c)) return false;
    ++i_;
    return true;
  }
  // U+00B7 middle dot, used in some texts for the empty side
  bool accept_empty_marker() {
    skip();
    if (s_.compare(i_, 2, "\xC2\xB7") == 0) {
      i_ += 2;
      return true;
    }
    return accept('.');
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }
  std::string ident() {
    skip();
    std::size_t b = i_;
    if (i_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) {
      ++i_;
      while (i_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_'))
        ++i_;
    }
    if (b == i_) fail("expected identifier");
    return s_.substr(b, i_ - b);
  }
  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, i_); }

 private:
  const std::string& s_;
  std::size_t i_ = 0;
};

}  // namespace detail

// Name(o1,..,ok | i1,..,im) = R(X,Y), S(Y,Z).
inline Query parse_query(const std::string& text) {
  detail::QueryLexer lx(text);
  Query q;
  q.name = lx.ident();
  lx.expect('(');

  auto head_side = [&](char terminator) {
    std::vector<std::pair<std::string, std::size_t>> vs;
    if (lx.accept_empty_marker()) return vs;
    if (lx.peek(terminator)) return vs;
    do {
      std::size_t p = (lx.skip(), lx.pos());
      vs.emplace_back(lx.ident(), p);
    } while (lx.accept(','));
    return vs;
  };
  auto outs = head_side('|');
  lx.expect('|');
  auto ins = head_side(')');
  lx.expect(')');
  lx.expect('=');

  do {
    Atom a;
    a.relation = lx.ident();
    lx.expect('(');
    if (lx.peek(')')) lx.fail("atom '" + a.relation + "' has no variables");
    do {
      std::size_t p = (lx.skip(), lx.pos());
      VarId v = q.intern(lx.ident());
      if (std::find(a.vars.begin(), a.vars.end(), v) != a.vars.end())
        throw ParseError("duplicate variable '" + q.var_names[v] + "' in atom " + a.relation, p);
      a.vars.push_back(v);
    } while (lx.accept(','));
    lx.expect(')');
    q.atoms.push_back(std::move(a));
    if (q.num_atoms() > kMaxAtoms) lx.fail("too many atoms");
  } while (lx.accept(','));
  lx.accept('.');
  if (!lx.at_end()) lx.fail("unexpected trailing input");

  VarSet seen = 0;
  auto head = [&](const std::vector<std::pair<std::string, std::size_t>>& vs,
                  std::vector<VarId>& out) {
    for (const auto& [n, p] : vs) {
      VarId v = q.find_var(n);
      if (v < 0) throw ParseError("head variable '" + n + "' does not occur in the body", p);
      if (has(seen, v))
        throw ParseError("variable '" + n + "' listed twice in the head", p);
      seen |= bit(v);
      out.push_back(v);
    }
  };
  head(outs, q.outputs);
  head(ins, q.inputs);
  return q;
}

// ---------------------------------------------------------------------------
// fracture

struct FractureMap {
  Query fracture;
  // original input variable (id in the source query) -> fresh variables, one per component
  std::map<VarId, std::vector<VarId>> renaming;
  std::vector<int> component_of;  // atom index -> component id
  int num_components = 0;

  std::vector<int> component_atoms(int c) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(component_of.size()); ++i)
      if (component_of[i] == c) out.push_back(i);
    return out;
  }
};

inline FractureMap fracture(const Query& q) {
  const int n = q.num_atoms();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  const VarSet in = q.input_set();
  for (int v = 0; v < q.num_vars(); ++v) {
    if (has(in, v)) continue;
    int first = -1;
    for (int a : members(q.atoms_of(v))) {
      if (first < 0) first = a;
      else parent[find(a)] = find(first);
    }
  }

  FractureMap fm;
  fm.component_of.assign(n, -1);
  std::map<int, int> comp_id;
  for (int i = 0; i < n; ++i) {
    int r = find(i);
    auto [it, fresh] = comp_id.emplace(r, fm.num_components);
    if (fresh) ++fm.num_components;
    fm.component_of[i] = it->second;
  }

  // representatives of each input variable, ordered by first occurrence
  std::map<std::pair<VarId, int>, std::string> rep_name;
  std::map<VarId, std::vector<int>> comps_of_input;
  for (int i = 0; i < n; ++i)
    for (VarId v : q.atoms[i].vars) {
      if (!has(in, v)) continue;
      auto& cs = comps_of_input[v];
      if (std::find(cs.begin(), cs.end(), fm.component_of[i]) == cs.end())
        cs.push_back(fm.component_of[i]);
    }
  std::vector<std::string> taken = q.var_names;
  for (VarId v : q.inputs) {
    const auto& cs = comps_of_input[v];
    for (std::size_t k = 0; k < cs.size(); ++k) {
      std::string nm = q.var_names[v];
      if (cs.size() > 1) {
        nm += "_" + std::to_string(k + 1);
        while (std::find(taken.begin(), taken.end(), nm) != taken.end()) nm += "_";
        taken.push_back(nm);
      }
      rep_name[{v, cs[k]}] = nm;
    }
  }

  Query& f = fm.fracture;
  f.name = q.name;
  for (int i = 0; i < n; ++i) {
    Atom a;
    a.relation = q.atoms[i].relation;
    for (VarId v : q.atoms[i].vars) {
      const std::string& nm =
          has(in, v) ? rep_name.at({v, fm.component_of[i]}) : q.var_names[v];
      a.vars.push_back(f.intern(nm));
    }
    f.atoms.push_back(std::move(a));
  }
  for (VarId v : q.outputs) f.outputs.push_back(f.var(q.var_names[v]));
  for (VarId v : q.inputs) {
    auto& reps = fm.renaming[v];
    for (int c : comps_of_input[v]) {
      VarId fv = f.var(rep_name.at({v, c}));
      reps.push_back(fv);
      f.inputs.push_back(fv);
    }
  }
  return fm;
}

// Sub-query over a set of atoms; head restricted to the variables that occur.
inline Query restrict_to_atoms(const Query& q, const std::vector<int>& atom_ids) {
  Query r;
  r.name = q.name;
  std::vector<VarId> map(q.num_vars(), -1);
  for (int i : atom_ids) {
    Atom a;
    a.relation = q.atoms[i].relation;
    for (VarId v : q.atoms[i].vars) {
      if (map[v] < 0) map[v] = r.intern(q.var_names[v]);
      a.vars.push_back(map[v]);
    }
    r.atoms.push_back(std::move(a));
  }
  for (VarId v : q.outputs)
    if (map[v] >= 0) r.outputs.push_back(map[v]);
  for (VarId v : q.inputs)
    if (map[v] >= 0) r.inputs.push_back(map[v]);
  return r;
}

// Canonical renaming in atom order; two queries are isomorphic (for our purposes)
// when their canonical strings coincide.
inline std::string canonical_form(const Query& q) {
  std::vector<int> order(q.num_vars(), -1);
  int next = 0;
  for (const auto& a : q.atoms)
    for (VarId v : a.vars)
      if (order[v] < 0) order[v] = next++;
  std::ostringstream os;
  for (const auto& a : q.atoms) {
    os << a.relation << "(";
    for (VarId v : a.vars) {
      os << "v" << order[v];
      if (q.is_input(v)) os << "i";
      else if (q.is_output(v)) os << "o";
      os << ",";
    }
    os << ")";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// structure

inline bool dominates(const Query& q, VarId b, VarId a) {
  if (b < 0 || a < 0 || b >= q.num_vars() || a >= q.num_vars())
    throw QueryError("unknown variable");
  AtomSet sb = q.atoms_of(b), sa = q.atoms_of(a);
  return (sa & sb) == sa && sa != sb;
}

struct StructuralFlags {
  bool hierarchical = false;
  bool free_dominant = false;
  bool input_dominant = false;
  bool almost_free_dominant = false;
  bool almost_input_dominant = false;
};

namespace detail {

inline bool dominance_closed(const Query& q, VarSet cls) {
  for (VarId a : members(cls))
    for (VarId b : members(q.all_vars()))
      if (!has(cls, b) && dominates(q, b, a)) return false;
  return true;
}

// condition (1) of the "almost" variants for the class `cls`
inline bool almost_covered(const Query& q, VarSet cls) {
  for (VarId b : members(q.all_vars())) {
    if (has(cls, b)) continue;
    VarSet dominated = 0;
    for (VarId a : members(cls))
      if (dominates(q, b, a)) dominated |= bit(a);
    std::vector<int> ab = members(q.atoms_of(b));
    for (int r : ab) {
      bool ok = false;
      for (int s : ab) {
        if (s == r && ab.size() > 1) continue;
        if ((dominated & ~(q.atom_vars(r) | q.atom_vars(s))) == 0) {
          ok = true;
          break;
        }
      }
      if (!ok) return false;
    }
  }
  return true;
}

}  // namespace detail

inline bool is_hierarchical(const Query& q) {
  std::vector<int> vs = members(q.all_vars());
  for (VarId a : vs)
    for (VarId b : vs) {
      AtomSet x = q.atoms_of(a), y = q.atoms_of(b);
      if ((x & y) != 0 && (x & y) != x && (x & y) != y) return false;
    }
  return true;
}

inline StructuralFlags structural_tests(const Query& q) {
  StructuralFlags f;
  f.hierarchical = is_hierarchical(q);
  f.free_dominant = detail::dominance_closed(q, q.free_set());
  f.input_dominant = detail::dominance_closed(q, q.input_set());
  f.almost_free_dominant = !f.free_dominant && detail::almost_covered(q, q.free_set());
  f.almost_input_dominant = !f.input_dominant && detail::almost_covered(q, q.input_set());
  return f;
}

enum class QueryClass { CQAP0, CQAP1, GENERAL };

inline const char* to_string(QueryClass c) {
  switch (c) {
    case QueryClass::CQAP0: return "CQAP0";
    case QueryClass::CQAP1: return "CQAP1";
    default: return "GENERAL";
  }
}

// classification of a query that is already its own fracture
inline QueryClass classify_fractured(const Query& f) {
  StructuralFlags t = structural_tests(f);
  if (!t.hierarchical) return QueryClass::GENERAL;
  if (t.free_dominant && t.input_dominant) return QueryClass::CQAP0;
  if (t.almost_free_dominant || t.almost_input_dominant) return QueryClass::CQAP1;
  return QueryClass::GENERAL;
}

inline QueryClass classify(const Query& q) { return classify_fractured(fracture(q).fracture); }

}  // namespace cqap
