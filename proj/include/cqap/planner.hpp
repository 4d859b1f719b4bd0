#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "cqap/cover.hpp"
#include "cqap/query.hpp"
#include "cqap/rational.hpp"

namespace cqap {

class SearchLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Maximum number of variables the VO searches accept. CQAP_VO_LIMIT overrides.
inline int vo_search_limit() {
  if (const char* s = std::getenv("CQAP_VO_LIMIT")) {
    int v = std::atoi(s);
    if (v > 0) return v;
  }
  return 14;
}

// ---------------------------------------------------------------------------
// variable orders

enum class NodeKind { Var, Atom, Indicator };

struct HeavyLight {
  VarSet key = 0;
  bool heavy = false;
  bool operator==(const HeavyLight&) const = default;
};

struct VoNode {
  NodeKind kind = NodeKind::Var;
  VarId var = -1;     // Var
  int atom = -1;      // Atom, Indicator (source atom)
  VarSet ind_vars = 0;  // Indicator schema Z
  std::vector<HeavyLight> sig;  // Atom leaves of partitioned strategies
  int parent = -1;
  std::vector<int> children;
};

struct VariableOrder {
  std::vector<VoNode> nodes;
  std::vector<int> roots;

  int add(VoNode n, int parent) {
    n.parent = parent;
    n.children.clear();
    nodes.push_back(std::move(n));
    int id = static_cast<int>(nodes.size()) - 1;
    if (parent < 0) roots.push_back(id);
    else nodes[parent].children.push_back(id);
    return id;
  }
  int add_var(VarId v, int parent) {
    VoNode n;
    n.var = v;
    return add(std::move(n), parent);
  }
  int add_atom(int atom, int parent, std::vector<HeavyLight> sig = {}) {
    VoNode n;
    n.kind = NodeKind::Atom;
    n.atom = atom;
    n.sig = std::move(sig);
    return add(std::move(n), parent);
  }
  int add_indicator(int atom, VarSet z, int parent) {
    VoNode n;
    n.kind = NodeKind::Indicator;
    n.atom = atom;
    n.ind_vars = z;
    return add(std::move(n), parent);
  }

  bool is_var(int id) const { return nodes[id].kind == NodeKind::Var; }

  int var_node(VarId v) const {
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
      if (nodes[i].kind == NodeKind::Var && nodes[i].var == v) return i;
    return -1;
  }

  // ancestor variables, root first
  std::vector<VarId> anc(int id) const {
    std::vector<VarId> out;
    for (int p = nodes[id].parent; p >= 0; p = nodes[p].parent) out.push_back(nodes[p].var);
    std::reverse(out.begin(), out.end());
    return out;
  }
  VarSet anc_set(int id) const { return Query::to_set(anc(id)); }

  VarSet leaf_schema(const Query& q, int id) const {
    const VoNode& n = nodes[id];
    if (n.kind == NodeKind::Atom) return q.atom_vars(n.atom);
    if (n.kind == NodeKind::Indicator) return n.ind_vars;
    return 0;
  }

  template <class F>
  void visit_subtree(int id, F&& f) const {
    f(id);
    for (int c : nodes[id].children) visit_subtree(c, f);
  }

  // vars of atoms and indicators in the subtree
  VarSet subtree_schema_vars(const Query& q, int id) const {
    VarSet s = 0;
    visit_subtree(id, [&](int n) { s |= leaf_schema(q, n); });
    return s;
  }
  std::vector<int> subtree_leaves(int id) const {
    std::vector<int> out;
    visit_subtree(id, [&](int n) {
      if (!is_var(n)) out.push_back(n);
    });
    return out;
  }
  AtomSet subtree_atoms(int id) const {
    AtomSet s = 0;
    visit_subtree(id, [&](int n) {
      if (nodes[n].kind == NodeKind::Atom) s |= bit(nodes[n].atom);
    });
    return s;
  }
  VarSet subtree_vars(int id) const {
    VarSet s = 0;
    visit_subtree(id, [&](int n) {
      if (is_var(n)) s |= bit(nodes[n].var);
    });
    return s;
  }
  VarSet dep(const Query& q, int id) const { return anc_set(id) & subtree_schema_vars(q, id); }
  VarSet bag(const Query& q, int id) const { return bit(nodes[id].var) | dep(q, id); }

  int root_of(int id) const {
    while (nodes[id].parent >= 0) id = nodes[id].parent;
    return id;
  }

  std::vector<int> preorder() const {
    std::vector<int> out;
    for (int r : roots) visit_subtree(r, [&](int n) { out.push_back(n); });
    return out;
  }

  std::string to_string(const Query& q) const {
    std::ostringstream os;
    std::function<void(int)> rec = [&](int id) {
      const VoNode& n = nodes[id];
      if (n.kind == NodeKind::Var) {
        os << q.var_names[n.var];
        if (!n.children.empty()) {
          os << "{";
          for (std::size_t i = 0; i < n.children.size(); ++i) {
            if (i) os << " ";
            rec(n.children[i]);
          }
          os << "}";
        }
      } else if (n.kind == NodeKind::Atom) {
        os << q.atoms[n.atom].relation;
        for (const auto& hl : n.sig) os << "^" << q.names(hl.key) << (hl.heavy ? "H" : "L");
        os << "(";
        for (std::size_t j = 0; j < q.atoms[n.atom].vars.size(); ++j)
          os << (j ? "," : "") << q.var_names[q.atoms[n.atom].vars[j]];
        os << ")";
      } else {
        os << "I_{" << q.names(n.ind_vars) << "}" << q.atoms[n.atom].relation;
      }
    };
    for (std::size_t i = 0; i < roots.size(); ++i) {
      if (i) os << " | ";
      rec(roots[i]);
    }
    return os.str();
  }
};

// Structural validity: every atom once, as a child of its lowest variable, with all of its
// variables on the root path; every variable once; indicators hang below variables covering Z.
inline std::string vo_problems(const Query& q, const VariableOrder& vo) {
  std::vector<int> atom_seen(q.num_atoms(), 0);
  std::vector<int> var_seen(q.num_vars(), 0);
  for (int id = 0; id < static_cast<int>(vo.nodes.size()); ++id) {
    const VoNode& n = vo.nodes[id];
    for (int c : n.children)
      if (vo.nodes[c].parent != id) return "broken parent link";
    if (n.kind == NodeKind::Var) {
      if (n.var < 0 || n.var >= q.num_vars()) return "bad variable id";
      ++var_seen[n.var];
      continue;
    }
    if (!n.children.empty()) return "leaf with children";
    if (n.parent < 0) return "leaf without parent variable";
    VarSet path = vo.anc_set(id);
    VarSet schema = vo.leaf_schema(q, id);
    if ((schema & path) != schema) return "leaf variables not on its root path";
    if (n.kind == NodeKind::Atom) {
      ++atom_seen[n.atom];
      if (!has(schema, vo.nodes[n.parent].var)) return "atom not below its lowest variable";
    } else if (n.ind_vars == 0) {
      return "empty indicator";
    }
  }
  for (int a = 0; a < q.num_atoms(); ++a)
    if (atom_seen[a] != 1) return "atom " + q.atoms[a].relation + " not placed exactly once";
  for (VarId v : members(q.all_vars()))
    if (var_seen[v] != 1) return "variable " + q.var_names[v] + " not placed exactly once";
  return {};
}

inline bool is_access_top(const Query& q, const VariableOrder& vo) {
  VarSet in = q.input_set(), fr = q.free_set();
  for (int id = 0; id < static_cast<int>(vo.nodes.size()); ++id) {
    if (!vo.is_var(id)) continue;
    VarId x = vo.nodes[id].var;
    VarSet below = vo.subtree_vars(id) & ~bit(x);
    if (!has(fr, x) && (below & fr)) return false;
    if (!has(in, x) && (below & in)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// GYO*

// Returns indices of indicator hyperedges that survive GYO reduction of indicators + atoms
// when the residual hypergraph is non-empty.
inline std::vector<int> gyo_star(const std::vector<VarSet>& indicators,
                                 const std::vector<VarSet>& atoms) {
  struct Edge {
    VarSet vars;
    bool indicator;
    int idx;
    bool alive = true;
  };
  std::vector<Edge> e;
  for (int i = 0; i < static_cast<int>(atoms.size()); ++i) e.push_back({atoms[i], false, i});
  for (int i = 0; i < static_cast<int>(indicators.size()); ++i)
    e.push_back({indicators[i], true, i});

  bool changed = true;
  while (changed) {
    changed = false;
    VarSet all = 0;
    for (const auto& x : e)
      if (x.alive) all |= x.vars;
    for (int v : members(all)) {
      int cnt = 0, last = -1;
      for (int j = 0; j < static_cast<int>(e.size()); ++j)
        if (e[j].alive && has(e[j].vars, v)) ++cnt, last = j;
      if (cnt == 1) {
        e[last].vars &= ~bit(v);
        changed = true;
      }
    }
    // equal edges: the later one (indicators come after atoms) is removed
    for (int j = 0; j < static_cast<int>(e.size()); ++j) {
      if (!e[j].alive) continue;
      for (int k = 0; k < static_cast<int>(e.size()); ++k) {
        if (k == j || !e[k].alive) continue;
        bool sub = (e[j].vars & e[k].vars) == e[j].vars;
        if (sub && (e[j].vars != e[k].vars || j > k)) {
          e[j].alive = false;
          changed = true;
          break;
        }
      }
    }
  }
  bool residual = false;
  for (const auto& x : e)
    if (x.alive && x.vars) residual = true;
  std::vector<int> out;
  if (!residual) return out;
  for (const auto& x : e)
    if (x.alive && x.indicator) out.push_back(x.idx);
  return out;
}

namespace detail {

// indicator projections chosen at a variable with bag S whose subtree holds `inside`
inline std::vector<std::pair<int, VarSet>> indicators_at(const Query& q, AtomSet universe,
                                                         AtomSet inside, VarSet s) {
  std::vector<std::pair<int, VarSet>> cand;
  std::vector<VarSet> cand_edges, atom_edges;
  for (int a : members(universe)) {
    if (has(inside, a)) {
      atom_edges.push_back(q.atom_vars(a));
      continue;
    }
    VarSet z = q.atom_vars(a) & s;
    if (z) {
      cand.emplace_back(a, z);
      cand_edges.push_back(z);
    }
  }
  std::vector<std::pair<int, VarSet>> out;
  for (int i : gyo_star(cand_edges, atom_edges)) out.push_back(cand[i]);
  return out;
}

inline void add_indicators_rec(const Query& q, VariableOrder& vo, AtomSet universe, int id) {
  if (!vo.is_var(id)) return;
  std::vector<int> kids = vo.nodes[id].children;
  for (int c : kids) add_indicators_rec(q, vo, universe, c);
  VarSet s = vo.bag(q, id);
  for (auto [a, z] : indicators_at(q, universe, vo.subtree_atoms(id), s))
    vo.add_indicator(a, z, id);
}

}  // namespace detail

// Adds indicator children at every variable, computed on the VO as given.
inline VariableOrder add_indicators(const Query& q, VariableOrder vo) {
  for (auto& n : vo.nodes)
    if (n.kind == NodeKind::Indicator) throw std::invalid_argument("VO already has indicators");
  AtomSet universe = q.num_atoms() == 64 ? ~AtomSet{0} : (AtomSet{1} << q.num_atoms()) - 1;
  std::vector<int> roots = vo.roots;
  for (int r : roots) detail::add_indicators_rec(q, vo, universe, r);
  return vo;
}

// ---------------------------------------------------------------------------
// widths

struct Widths {
  Rational dynamic = 0;
  Rational static_ = 0;
  bool operator==(const Widths& o) const {
    return dynamic == o.dynamic && static_ == o.static_;
  }
  bool operator<(const Widths& o) const {
    if (dynamic != o.dynamic) return dynamic < o.dynamic;
    return static_ < o.static_;
  }
};

namespace detail {

inline std::pair<Rational, Rational> node_widths(const std::vector<VarSet>& edges, VarSet bag) {
  Rational w = fractional_cover(edges, bag);
  Rational d = 0;
  for (VarSet y : edges) {
    Rational r = fractional_cover(edges, bag & ~y);
    if (r > d) d = r;
  }
  return {d, w};
}

}  // namespace detail

inline Widths vo_widths(const Query& q, const VariableOrder& vo) {
  Widths out;
  for (int id = 0; id < static_cast<int>(vo.nodes.size()); ++id) {
    if (!vo.is_var(id)) continue;
    std::vector<VarSet> edges;
    for (int l : vo.subtree_leaves(id)) edges.push_back(vo.leaf_schema(q, l));
    auto [d, w] = detail::node_widths(edges, vo.bag(q, id));
    if (d > out.dynamic) out.dynamic = d;
    if (w > out.static_) out.static_ = w;
  }
  return out;
}

// ---------------------------------------------------------------------------
// access-top search

// A VO fragment: variable, atoms hanging directly below it, child fragments.
struct Frag {
  VarId var = -1;
  std::vector<int> leaves;
  std::vector<std::shared_ptr<const Frag>> children;
};
using FragPtr = std::shared_ptr<const Frag>;

inline void attach(VariableOrder& vo, const Frag& f, int parent) {
  int id = vo.add_var(f.var, parent);
  for (int a : f.leaves) vo.add_atom(a, id);
  for (const auto& c : f.children) attach(vo, *c, id);
}

// Search space of access-top VOs for a set of atoms below an already placed path.
class AccessTopSearch {
 public:
  struct Entry {
    Rational delta, w;
    std::vector<std::pair<int, VarSet>> indicators;  // sorted
    FragPtr frag;
  };

  // `universe` are the atoms that count for indicator candidates; `in`/`out` the access pattern.
  AccessTopSearch(const Query& q, AtomSet universe, VarSet in, VarSet out)
      : q_(q), universe_(universe), in_(in), out_(out) {}

  VarSet atoms_vars(AtomSet a) const {
    VarSet s = 0;
    for (int i : members(a)) s |= q_.atom_vars(i);
    return s;
  }

  // variables that may be placed next given the unplaced variables
  std::vector<VarId> choices(VarSet unplaced) const {
    VarSet c = unplaced & in_;
    if (!c) c = unplaced & out_;
    if (!c) c = unplaced;
    std::vector<VarId> vs = members(c);
    std::sort(vs.begin(), vs.end(),
              [&](VarId a, VarId b) { return q_.var_names[a] < q_.var_names[b]; });
    return vs;
  }

  struct Split {
    std::vector<int> leaves;
    std::vector<AtomSet> parts;
  };

  Split split(AtomSet a, VarSet placed) const {
    Split s;
    AtomSet rest = 0;
    for (int i : members(a)) {
      if ((q_.atom_vars(i) & ~placed) == 0) s.leaves.push_back(i);
      else rest |= bit(i);
    }
    while (rest) {
      AtomSet comp = rest & (~rest + 1);
      VarSet vars = q_.atom_vars(std::countr_zero(comp)) & ~placed;
      bool grown = true;
      while (grown) {
        grown = false;
        for (int i : members(rest & ~comp))
          if (q_.atom_vars(i) & vars) {
            comp |= bit(i);
            vars |= q_.atom_vars(i) & ~placed;
            grown = true;
          }
      }
      s.parts.push_back(comp);
      rest &= ~comp;
    }
    return s;
  }

  // Pareto-optimal (delta, w) entries per indicator set for atoms `a` below placed path `p`.
  const std::vector<Entry>& solve(AtomSet a, VarSet p) {
    p &= atoms_vars(a);
    auto key = std::make_pair(a, p);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::vector<Entry> result;
    for (VarId x : choices(atoms_vars(a) & ~p)) {
      VarSet placed = p | bit(x);
      Split sp = split(a, placed);
      VarSet bag = bit(x) | p;
      auto here = detail::indicators_at(q_, universe_, a, bag);
      std::vector<const std::vector<Entry>*> kids;
      for (AtomSet part : sp.parts) kids.push_back(&solve(part, placed));
      std::vector<std::size_t> pick(kids.size(), 0);
      bool empty = false;
      for (auto* k : kids) empty |= k->empty();
      if (empty) continue;
      for (;;) {
        Entry e;
        e.indicators = here;
        std::vector<VarSet> edges;
        for (int i : members(a)) edges.push_back(q_.atom_vars(i));
        auto f = std::make_shared<Frag>();
        f->var = x;
        f->leaves = sp.leaves;
        for (std::size_t i = 0; i < kids.size(); ++i) {
          const Entry& c = (*kids[i])[pick[i]];
          e.delta = std::max(e.delta, c.delta);
          e.w = std::max(e.w, c.w);
          e.indicators.insert(e.indicators.end(), c.indicators.begin(), c.indicators.end());
          f->children.push_back(c.frag);
        }
        for (auto& [ia, z] : e.indicators) edges.push_back(z);
        std::sort(e.indicators.begin(), e.indicators.end());
        auto [d, w] = detail::node_widths(edges, bag);
        e.delta = std::max(e.delta, d);
        e.w = std::max(e.w, w);
        e.frag = f;
        insert(result, std::move(e));
        std::size_t i = 0;
        while (i < pick.size() && ++pick[i] == kids[i]->size()) pick[i++] = 0;
        if (i == pick.size()) break;
      }
    }
    return memo_.emplace(key, std::move(result)).first->second;
  }

  // all fragments (no width bookkeeping) for atoms `a` below `p`
  void all(AtomSet a, VarSet p, const std::function<void(FragPtr)>& emit, std::size_t& budget) {
    p &= atoms_vars(a);
    for (VarId x : choices(atoms_vars(a) & ~p)) {
      VarSet placed = p | bit(x);
      Split sp = split(a, placed);
      std::vector<std::vector<FragPtr>> kids;
      for (AtomSet part : sp.parts) {
        std::vector<FragPtr> fs;
        all(part, placed, [&](FragPtr f) { fs.push_back(std::move(f)); }, budget);
        kids.push_back(std::move(fs));
      }
      std::vector<std::size_t> pick(kids.size(), 0);
      for (;;) {
        auto f = std::make_shared<Frag>();
        f->var = x;
        f->leaves = sp.leaves;
        for (std::size_t i = 0; i < kids.size(); ++i) f->children.push_back(kids[i][pick[i]]);
        if (budget == 0) throw SearchLimitError("access-top VO enumeration exceeded its budget");
        --budget;
        emit(f);
        std::size_t i = 0;
        while (i < pick.size() && ++pick[i] == kids[i].size()) pick[i++] = 0;
        if (i == pick.size()) break;
      }
    }
  }

 private:
  static bool dominated(const Entry& a, const Entry& b) {
    return b.delta <= a.delta && b.w <= a.w;
  }
  static void insert(std::vector<Entry>& v, Entry e) {
    for (const auto& x : v)
      if (x.indicators == e.indicators && dominated(e, x)) return;
    std::erase_if(v, [&](const Entry& x) { return x.indicators == e.indicators && dominated(x, e); });
    v.push_back(std::move(e));
  }

  const Query& q_;
  AtomSet universe_;
  VarSet in_, out_;
  std::map<std::pair<AtomSet, VarSet>, std::vector<Entry>> memo_;
};

inline AtomSet all_atoms(const Query& q) {
  return q.num_atoms() == 64 ? ~AtomSet{0} : (AtomSet{1} << q.num_atoms()) - 1;
}

// connected components of the body (shared variables), in order of first atom
inline std::vector<AtomSet> body_components(const Query& q) {
  AccessTopSearch s(q, all_atoms(q), 0, 0);
  return s.split(all_atoms(q), 0).parts;
}

inline void check_guard(const Query& q) {
  if (popcount(q.all_vars()) > vo_search_limit())
    throw SearchLimitError("query has " + std::to_string(popcount(q.all_vars())) +
                           " variables; the VO search limit is " +
                           std::to_string(vo_search_limit()));
}

// Streams every access-top extended VO of a (fractured) query.
inline void enumerate_access_top_vos(const Query& qf,
                                     const std::function<void(const VariableOrder&)>& emit,
                                     std::size_t budget = 1'000'000) {
  check_guard(qf);
  AccessTopSearch s(qf, all_atoms(qf), qf.input_set(), qf.output_set());
  std::vector<std::vector<FragPtr>> per;
  for (AtomSet comp : body_components(qf)) {
    std::vector<FragPtr> fs;
    s.all(comp, 0, [&](FragPtr f) { fs.push_back(std::move(f)); }, budget);
    per.push_back(std::move(fs));
  }
  std::vector<std::size_t> pick(per.size(), 0);
  for (;;) {
    VariableOrder vo;
    for (std::size_t i = 0; i < per.size(); ++i) attach(vo, *per[i][pick[i]], -1);
    emit(add_indicators(qf, std::move(vo)));
    std::size_t i = 0;
    while (i < pick.size() && ++pick[i] == per[i].size()) pick[i++] = 0;
    if (i == pick.size()) break;
  }
}

struct Plan {
  Widths widths;
  VariableOrder vo;  // extended witness
};

// Lexicographically minimal (delta, w) over access-top VOs of `qf`, with a witness.
// `qf` is taken as is (callers pass the fracture).
inline Plan best_access_top(const Query& qf) {
  check_guard(qf);
  AccessTopSearch s(qf, all_atoms(qf), qf.input_set(), qf.output_set());
  std::vector<const std::vector<AccessTopSearch::Entry>*> per;
  for (AtomSet comp : body_components(qf)) per.push_back(&s.solve(comp, 0));
  Plan plan;
  Rational dmax = 0;
  for (auto* es : per) {
    Rational best = -1;
    for (const auto& e : *es)
      if (best < 0 || e.delta < best) best = e.delta;
    dmax = std::max(dmax, best);
  }
  VariableOrder vo;
  Rational wmax = 0;
  for (auto* es : per) {
    const AccessTopSearch::Entry* pick = nullptr;
    for (const auto& e : *es)
      if (e.delta <= dmax && (!pick || e.w < pick->w)) pick = &e;
    wmax = std::max(wmax, pick->w);
    attach(vo, *pick->frag, -1);
  }
  plan.widths.dynamic = dmax;
  plan.widths.static_ = wmax;
  plan.vo = add_indicators(qf, std::move(vo));
  return plan;
}

inline Plan query_plan(const Query& q) { return best_access_top(fracture(q).fracture); }

inline Widths query_widths(const Query& q) { return query_plan(q).widths; }

// ---------------------------------------------------------------------------
// canonical variable orders (hierarchical queries)

namespace detail {

inline void canonical_rec(const Query& q, AtomSet a, VarSet placed, int parent,
                          VariableOrder& vo,
                          const std::function<bool(VarId, VarId)>& less) {
  VarSet common = ~VarSet{0};
  for (int i : members(a)) common &= q.atom_vars(i);
  common &= ~placed;
  if (!common) throw std::invalid_argument("query is not hierarchical");
  std::vector<VarId> chain = members(common);
  std::stable_sort(chain.begin(), chain.end(), less);
  int node = parent;
  for (VarId v : chain) node = vo.add_var(v, node);
  placed |= common;
  AccessTopSearch s(q, all_atoms(q), 0, 0);
  auto sp = s.split(a, placed);
  for (int l : sp.leaves) vo.add_atom(l, node);
  for (AtomSet part : sp.parts) canonical_rec(q, part, placed, node, vo, less);
}

}  // namespace detail

// One canonical VO; variables sharing a node chain are ordered input, output, bound, then by name.
inline VariableOrder canonical_vo(const Query& q) {
  if (!is_hierarchical(q)) throw std::invalid_argument("query is not hierarchical");
  auto rank = [&](VarId v) { return q.is_input(v) ? 0 : q.is_output(v) ? 1 : 2; };
  auto less = [&](VarId a, VarId b) {
    if (rank(a) != rank(b)) return rank(a) < rank(b);
    return q.var_names[a] < q.var_names[b];
  };
  VariableOrder vo;
  for (AtomSet comp : body_components(q)) detail::canonical_rec(q, comp, 0, -1, vo, less);
  return vo;
}

// All canonical VOs (every order of each chain of variables with equal atom sets).
inline void canonical_vos(const Query& q, const std::function<void(const VariableOrder&)>& emit,
                          std::size_t budget = 100'000) {
  if (!is_hierarchical(q)) throw std::invalid_argument("query is not hierarchical");
  // group variables by atom set; chains are exactly these groups
  std::map<AtomSet, std::vector<VarId>> groups;
  for (VarId v : members(q.all_vars())) groups[q.atoms_of(v)].push_back(v);
  std::vector<std::vector<VarId>> gs;
  for (auto& [k, g] : groups) {
    std::sort(g.begin(), g.end());
    gs.push_back(g);
  }
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == gs.size()) {
      std::map<VarId, int> pos;
      for (const auto& g : gs)
        for (std::size_t j = 0; j < g.size(); ++j) pos[g[j]] = static_cast<int>(j);
      auto less = [&](VarId a, VarId b) { return pos[a] < pos[b]; };
      VariableOrder vo;
      for (AtomSet comp : body_components(q)) detail::canonical_rec(q, comp, 0, -1, vo, less);
      if (budget == 0) throw SearchLimitError("canonical VO enumeration exceeded its budget");
      --budget;
      emit(vo);
      return;
    }
    std::vector<VarId> g = gs[i];
    do {
      gs[i] = g;
      rec(i + 1);
    } while (std::next_permutation(g.begin(), g.end()));
    gs[i] = g;
  };
  rec(0);
}

inline bool is_canonical(const Query& q, const VariableOrder& vo) {
  for (int id = 0; id < static_cast<int>(vo.nodes.size()); ++id) {
    if (vo.nodes[id].kind != NodeKind::Atom) continue;
    if (vo.anc_set(id) != q.atom_vars(vo.nodes[id].atom)) return false;
  }
  return true;
}

}  // namespace cqap
