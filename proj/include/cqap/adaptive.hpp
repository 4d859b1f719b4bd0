#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "cqap/engine.hpp"

namespace cqap {

// ---------------------------------------------------------------------------
// strategy construction

namespace detail {

struct SNode {
  VarId var = -1;
  int atom = -1;
  std::vector<HeavyLight> sig;
  std::vector<std::shared_ptr<const SNode>> kids;
};
using SPtr = std::shared_ptr<const SNode>;

// same variable ids as q, restricted to `atoms`, with the given access pattern
inline bool is_cqap0_sub(const Query& q, AtomSet atoms, VarSet out, VarSet in) {
  Query s;
  s.var_names = q.var_names;
  for (int a : members(atoms)) s.atoms.push_back(q.atoms[a]);
  s.outputs = members(out);
  s.inputs = members(in);
  StructuralFlags f = structural_tests(s);
  return f.hierarchical && f.free_dominant && f.input_dominant;
}

inline SPtr from_frag(const Frag& f, const std::vector<HeavyLight>& sig) {
  auto n = std::make_shared<SNode>();
  n->var = f.var;
  for (int a : f.leaves) {
    auto l = std::make_shared<SNode>();
    l->atom = a;
    l->sig = sig;
    n->kids.push_back(l);
  }
  for (const auto& c : f.children) n->kids.push_back(from_frag(*c, sig));
  return n;
}

// optimal access-top arrangement of `atoms` below the placed variables `anc`
inline SPtr access_top_below(const Query& q, AtomSet atoms, VarSet anc, VarSet in, VarSet out,
                             const std::vector<HeavyLight>& sig) {
  AccessTopSearch s(q, all_atoms(q), in, out);
  const auto& es = s.solve(atoms, anc);
  const AccessTopSearch::Entry* best = nullptr;
  for (const auto& e : es)
    if (!best || e.delta < best->delta || (e.delta == best->delta && e.w < best->w)) best = &e;
  return from_frag(*best->frag, sig);
}

inline std::vector<SPtr> under(VarId x, const std::vector<std::vector<SPtr>>& kids) {
  std::vector<SPtr> out;
  std::vector<std::size_t> pick(kids.size(), 0);
  for (const auto& k : kids)
    if (k.empty()) return out;
  for (;;) {
    auto n = std::make_shared<SNode>();
    n->var = x;
    for (std::size_t i = 0; i < kids.size(); ++i) n->kids.push_back(kids[i][pick[i]]);
    out.push_back(n);
    std::size_t i = 0;
    while (i < pick.size() && ++pick[i] == kids[i].size()) pick[i++] = 0;
    if (i == pick.size()) break;
  }
  return out;
}

inline std::vector<SPtr> omega(const Query& q, const VariableOrder& vo, int id,
                               const std::vector<HeavyLight>& sig) {
  const VoNode& n = vo.nodes[id];
  if (n.kind == NodeKind::Atom) {
    auto l = std::make_shared<SNode>();
    l->atom = n.atom;
    l->sig = n.sig;
    l->sig.insert(l->sig.end(), sig.begin(), sig.end());
    return {l};
  }
  if (n.kind != NodeKind::Var) throw std::invalid_argument("strategy construction expects a VO without indicators");
  const VarId x = n.var;
  const VarSet anc = vo.anc_set(id);
  const VarSet vars = vo.subtree_vars(id);
  const AtomSet atoms = vo.subtree_atoms(id);
  const VarSet in = q.input_set(), out = q.output_set();
  const VarSet in_x = (in & vars) | anc, out_x = out & vars;
  if (is_cqap0_sub(q, atoms, out_x, in_x))
    return {access_top_below(q, atoms, anc, in_x, out_x, sig)};

  auto recur = [&](const std::vector<HeavyLight>& s) {
    std::vector<std::vector<SPtr>> kids;
    for (int c : n.children) kids.push_back(omega(q, vo, c, s));
    return under(x, kids);
  };
  if (has(in, x) || (has(out, x) && (vars & in) == 0)) return recur(sig);

  const VarSet key = anc | bit(x);
  auto heavy = sig, light = sig;
  heavy.push_back({key, true});
  light.push_back({key, false});
  std::vector<SPtr> result = recur(heavy);
  result.push_back(access_top_below(q, atoms, anc, in_x, out_x, light));
  return result;
}

inline void attach_strategy(VariableOrder& vo, const SNode& n, int parent) {
  if (n.atom >= 0) {
    vo.add_atom(n.atom, parent, n.sig);
    return;
  }
  int id = vo.add_var(n.var, parent);
  // atoms first, as in the planner's fragments
  for (const auto& k : n.kids)
    if (k->atom >= 0) attach_strategy(vo, *k, id);
  for (const auto& k : n.kids)
    if (k->atom < 0) attach_strategy(vo, *k, id);
}

}  // namespace detail

// Strategies for the tree of a canonical VO rooted at `root`; each result is a single-root VO
// whose atom leaves carry heavy/light signatures, with indicators added.
inline std::vector<VariableOrder> omega_strategies(const Query& q, const VariableOrder& canon,
                                                   int root) {
  if (!is_canonical(q, canon)) throw std::invalid_argument("VO is not canonical");
  std::vector<VariableOrder> out;
  for (const auto& s : detail::omega(q, canon, root, {})) {
    VariableOrder vo;
    detail::attach_strategy(vo, *s, -1);
    out.push_back(add_indicators(q, std::move(vo)));
  }
  return out;
}

// All strategies of a hierarchical query, grouped by the roots of its canonical VO.
inline std::vector<std::vector<VariableOrder>> omega_strategies(const Query& q) {
  VariableOrder canon = canonical_vo(q);
  std::vector<std::vector<VariableOrder>> out;
  for (int r : canon.roots) out.push_back(omega_strategies(q, canon, r));
  return out;
}

// Variables of a strategy VO that must be fixed per iterator: non-inputs with an input below,
// and bound variables with a free variable below.
inline VarSet violating_vars(const Query& q, const VariableOrder& vo) {
  VarSet u = 0;
  const VarSet in = q.input_set(), out = q.output_set();
  for (int id = 0; id < static_cast<int>(vo.nodes.size()); ++id) {
    if (!vo.is_var(id)) continue;
    VarId x = vo.nodes[id].var;
    if (has(in, x)) continue;
    VarSet below = vo.subtree_vars(id) & ~bit(x);
    if ((below & in) || (!has(out, x) && (below & out))) u |= bit(x);
  }
  return u;
}

// Epsilon minimizing m * N^e + k * N^(1-e) over a grid of [0,1].
inline double recommend_epsilon(double n, double updates, double tuples_per_request) {
  double best = 0, best_cost = -1;
  for (int i = 0; i <= 100; ++i) {
    double e = i / 100.0;
    double cost = updates * std::pow(n, e) + tuples_per_request * std::pow(n, 1 - e);
    if (best_cost < 0 || cost < best_cost) {
      best = e;
      best_cost = cost;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// adaptive engine

template <class P>
class AdaptiveEngine {
 public:
  using Traits = PayloadTraits<P>;

  struct Stats {
    std::size_t rebuilds = 0;
    std::size_t migrations = 0;
    std::size_t last_iterators = 0;  // heavy iterators opened by the last request
  };

  AdaptiveEngine(const Query& q, Database<P> db, double epsilon)
      : q_(q), fm_(fracture(q)), eps_(epsilon) {
    if (epsilon < 0 || epsilon > 1) throw std::invalid_argument("epsilon must lie in [0,1]");
    const Query& qf = fm_.fracture;
    if (!is_hierarchical(qf))
      throw std::invalid_argument("adaptive mode needs a hierarchical fracture");
    VariableOrder all;
    auto groups = omega_strategies(qf);
    for (std::size_t c = 0; c < groups.size(); ++c)
      for (const auto& vo : groups[c]) {
        append(all, vo, vo.roots[0], -1);
        info_.push_back({static_cast<int>(c), violating_vars(qf, vo)});
      }
    components_ = static_cast<int>(groups.size());
    vo_ = all;
    auto trees = build_view_trees(qf, all);
    views_ = std::make_unique<ViewEngine<P>>(
        qf, std::move(trees), std::move(db),
        [this](int t, int n, const Tuple& tu) { return member(t, n, tu); });
    register_keys();
    rebuild();
  }

  AdaptiveEngine(const AdaptiveEngine&) = delete;
  AdaptiveEngine& operator=(const AdaptiveEngine&) = delete;

  const Query& query() const { return q_; }
  const FractureMap& fractured() const { return fm_; }
  const VariableOrder& strategies() const { return vo_; }
  const ViewEngine<P>& views() const { return *views_; }
  const Database<P>& db() const { return views_->db(); }
  double epsilon() const { return eps_; }
  double theta() const { return theta_; }
  const Stats& stats() const { return stats_; }
  int tree_component(int t) const { return info_[t].component; }
  int num_components() const { return components_; }

  void update(const std::string& rel, const Tuple& t, const P& m) {
    views_->update(rel, t, m);
    std::size_t n = views_->db().size();
    if (2 * n < n_snap_ || n > 2 * n_snap_) {
      rebuild();
      return;
    }
    for (const auto& [key, srcs] : deg_src_)
      for (const auto& d : srcs)
        if (d.rel == rel) rebalance(key, project(t, d.cols));
  }

  SourcePtr open(const Tuple& inputs) {
    Binding b = bind_request(q_, fm_, inputs);
    const Query& qf = fm_.fracture;
    stats_.last_iterators = 0;
    std::vector<std::vector<SourcePtr>> per(components_);
    std::vector<std::vector<int>> slots(components_);
    for (int t = 0; t < views_->num_trees(); ++t) {
      const ViewTree& tr = views_->tree(t);
      auto [out, sl] = outputs_within(qf, tr.vars);
      int c = info_[t].component;
      slots[c] = sl;
      VarSet fixed = b.fixed & tr.vars;
      VarSet u = info_[t].u;
      if (!u) {
        per[c].push_back(std::make_unique<TreeIterator<P>>(*views_, t, out, fixed, b.val));
        continue;
      }
      // one iterator per heavy key: U together with its ancestors
      VarSet head = u;
      for (VarId x : members(u))
        for (VarId p = tr.var_parent[x]; p >= 0; p = tr.var_parent[p]) head |= bit(p);
      std::vector<VarId> uv;
      for (VarId x : tr.var_order)
        if (has(head, x) && !has(fixed, x)) uv.push_back(x);
      TreeIterator<P> heads(*views_, t, uv, fixed, b.val);
      Tuple ut;
      while (heads.next(ut)) {
        std::vector<Value> val = b.val;
        for (std::size_t i = 0; i < uv.size(); ++i) val[uv[i]] = ut[i];
        per[c].push_back(std::make_unique<TreeIterator<P>>(*views_, t, out, fixed | head, val));
        ++stats_.last_iterators;
      }
    }
    std::vector<SourcePtr> parts;
    for (auto& s : per) parts.push_back(union_distinct(std::move(s)));
    return std::make_unique<ProductNest>(std::move(parts), std::move(slots), q_.outputs.size());
  }

  // Full-scan audit of the partition conditions: every key is heavy or light consistently,
  // heavy keys have degree >= theta/2 and light keys degree < 3/2 theta.
  bool partition_ok() const {
    for (const auto& [key, srcs] : deg_src_) {
      auto it = heavy_.find(key);
      for (const auto& d : srcs) {
        const Relation<P>& r = *views_->db().find(d.rel);
        bool ok = true;
        r.for_each_bucket(d.index, [&](const Tuple& z, const auto&) {
          double deg = static_cast<double>(degree(key, z));
          bool h = it != heavy_.end() && it->second.count(z);
          if (h ? deg < 0.5 * theta_ : deg >= 1.5 * theta_) ok = false;
        });
        if (!ok) return false;
      }
    }
    return true;
  }

  // number of keys currently designated heavy, over all partition keys
  std::size_t heavy_keys() const {
    std::size_t n = 0;
    for (const auto& [k, s] : heavy_) n += s.size();
    return n;
  }

 private:
  struct TreeInfo {
    int component;
    VarSet u;
  };
  struct DegSrc {
    std::string rel;
    int atom;
    int index;
    std::vector<int> cols;  // atom columns of the key variables, ascending variable id
  };

  static void append(VariableOrder& dst, const VariableOrder& src, int id, int parent) {
    int nid = dst.add(src.nodes[id], parent);
    for (int c : src.nodes[id].children) append(dst, src, c, nid);
  }

  static std::vector<int> key_cols(const Atom& a, VarSet key) {
    std::vector<int> cols;
    for (VarId v : members(key))
      cols.push_back(static_cast<int>(std::find(a.vars.begin(), a.vars.end(), v) - a.vars.begin()));
    return cols;
  }

  void register_keys() {
    const Query& qf = fm_.fracture;
    for (const auto& n : vo_.nodes)
      for (const auto& hl : n.sig) {
        if (deg_src_.count(hl.key)) continue;
        auto& srcs = deg_src_[hl.key];
        for (int a = 0; a < qf.num_atoms(); ++a) {
          if ((qf.atom_vars(a) & hl.key) != hl.key) continue;
          auto cols = key_cols(qf.atoms[a], hl.key);
          Relation<P>& r = views_->mutable_db().relation(qf.atoms[a].relation, qf.atoms[a].vars.size());
          srcs.push_back({qf.atoms[a].relation, a, r.add_index(cols), cols});
        }
      }
  }

  std::size_t degree(VarSet key, const Tuple& z) const {
    std::size_t d = 0;
    for (const auto& s : deg_src_.at(key))
      d = std::max(d, views_->db().find(s.rel)->count(s.index, z));
    return d;
  }

  bool is_heavy(VarSet key, const Tuple& z) const {
    auto it = heavy_.find(key);
    return it != heavy_.end() && it->second.count(z) > 0;
  }

  bool member(int t, int n, const Tuple& tu) const {
    const ViewNode& vn = views_->tree(t).nodes[n];
    const Atom& a = fm_.fracture.atoms[vn.atom];
    for (const auto& hl : vn.sig)
      if (is_heavy(hl.key, project(tu, key_cols(a, hl.key))) != hl.heavy) return false;
    return true;
  }

  void rebuild() {
    std::size_t n = views_->db().size();
    n_snap_ = std::max<std::size_t>(n, 1);
    theta_ = std::pow(static_cast<double>(n), eps_);
    heavy_.clear();
    for (const auto& [key, srcs] : deg_src_) {
      auto& hs = heavy_[key];
      for (const auto& d : srcs)
        views_->db().find(d.rel)->for_each_bucket(d.index, [&](const Tuple& z, const auto&) {
          if (static_cast<double>(degree(key, z)) >= theta_) hs.insert(z);
        });
    }
    views_->materialize();
    ++stats_.rebuilds;
  }

  void rebalance(VarSet key, const Tuple& z) {
    double deg = static_cast<double>(degree(key, z));
    bool h = is_heavy(key, z);
    if (!h && deg >= 1.5 * theta_) migrate(key, z, true);
    else if (h && (deg < 0.5 * theta_ || deg == 0)) migrate(key, z, false);
  }

  // moves every tuple with key value z to the parts matching its new status
  void migrate(VarSet key, const Tuple& z, bool heavy) {
    ++stats_.migrations;
    struct Move {
      int t, n;
      Tuple tu;
      P p;
      bool was;
    };
    std::vector<Move> moves;
    for (int t = 0; t < views_->num_trees(); ++t) {
      const ViewTree& tr = views_->tree(t);
      for (int n = 0; n < static_cast<int>(tr.nodes.size()); ++n) {
        const ViewNode& vn = tr.nodes[n];
        if (vn.kind != ViewKind::Atom) continue;
        bool keyed = false;
        for (const auto& hl : vn.sig) keyed |= hl.key == key;
        if (!keyed) continue;
        for (const auto& d : deg_src_.at(key)) {
          if (d.atom != vn.atom) continue;
          const Relation<P>& r = *views_->db().find(d.rel);
          const auto* b = r.bucket(d.index, z);
          if (!b) continue;
          for (auto s = b->head; s != Relation<P>::npos; s = r.next_in(d.index, s))
            moves.push_back({t, n, r.tuple(s), r.payload(s), member(t, n, r.tuple(s))});
        }
      }
    }
    if (heavy) heavy_[key].insert(z);
    else heavy_[key].erase(z);
    for (const auto& m : moves) {
      bool now = member(m.t, m.n, m.tu);
      if (now == m.was) continue;
      views_->leaf_update(m.t, m.n, m.tu, now ? m.p : Traits::neg(m.p));
    }
  }

  Query q_;
  FractureMap fm_;
  double eps_;
  double theta_ = 1;
  std::size_t n_snap_ = 1;
  int components_ = 0;
  VariableOrder vo_;
  std::vector<TreeInfo> info_;
  std::unique_ptr<ViewEngine<P>> views_;
  std::map<VarSet, std::vector<DegSrc>> deg_src_;
  std::map<VarSet, std::unordered_set<Tuple, TupleHash>> heavy_;
  Stats stats_;
};

}  // namespace cqap
