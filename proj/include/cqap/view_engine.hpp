#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cqap/query.hpp"
#include "cqap/relation.hpp"
#include "cqap/view_tree.hpp"

namespace cqap {

template <class P>
struct Database {
  std::map<std::string, Relation<P>> rels;

  Relation<P>& relation(const std::string& name, std::size_t arity) {
    auto it = rels.find(name);
    if (it == rels.end()) it = rels.emplace(name, Relation<P>(arity)).first;
    if (it->second.arity() != arity)
      throw std::invalid_argument("relation " + name + " used with arity " +
                                  std::to_string(arity) + " but has arity " +
                                  std::to_string(it->second.arity()));
    return it->second;
  }
  const Relation<P>* find(const std::string& name) const {
    auto it = rels.find(name);
    return it == rels.end() ? nullptr : &it->second;
  }
  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [k, r] : rels) n += r.size();
    return n;
  }
};

class StaleIterator : public std::logic_error {
 public:
  StaleIterator() : std::logic_error("iterator invalidated by an update") {}
};

// Materialized view trees over one database; all updates go through here.
template <class P>
class ViewEngine {
 public:
  using Traits = PayloadTraits<P>;
  // Decides whether a base tuple belongs to an atom leaf (partitioned strategies).
  using Filter = std::function<bool(int tree, int node, const Tuple&)>;

  ViewEngine(Query q, std::vector<ViewTree> trees, Database<P> db, Filter filter = {})
      : q_(std::move(q)), trees_(std::move(trees)), db_(std::move(db)), filter_(std::move(filter)) {
    for (const auto& a : q_.atoms) db_.relation(a.relation, a.vars.size());
    state_.resize(trees_.size());
    for (int t = 0; t < num_trees(); ++t) {
      const ViewTree& tr = trees_[t];
      state_[t].resize(tr.nodes.size());
      for (int n = 0; n < static_cast<int>(tr.nodes.size()); ++n) {
        const ViewNode& vn = tr.nodes[n];
        NodeState& st = state_[t][n];
        if (vn.alias) {
          st.rel = state_[t][vn.children[0]].rel;
        } else {
          st.own = std::make_unique<Relation<P>>(vn.schema.size());
          st.rel = st.own.get();
        }
        if (vn.kind == ViewKind::Atom) {
          atom_leaves_[q_.atoms[vn.atom].relation].push_back({t, n});
        } else if (vn.kind == ViewKind::Indicator) {
          const Atom& a = q_.atoms[vn.atom];
          std::vector<int> cols;
          for (VarId v : vn.schema)
            cols.push_back(static_cast<int>(std::find(a.vars.begin(), a.vars.end(), v) - a.vars.begin()));
          Relation<P>& base = db_.relation(a.relation, a.vars.size());
          indicator_leaves_[a.relation].push_back({t, n, base.add_index(cols), cols});
        }
      }
      for (int n = 0; n < static_cast<int>(tr.nodes.size()); ++n) register_join_indexes(t, n);
      for (VarId x : tr.var_order) {
        int vx = tr.var_view[x];
        require_index(t, vx, tr.nodes[vx].vars() & ~bit(x));
      }
    }
  }

  ViewEngine(const ViewEngine&) = delete;
  ViewEngine& operator=(const ViewEngine&) = delete;

  const Query& query() const { return q_; }
  int num_trees() const { return static_cast<int>(trees_.size()); }
  const ViewTree& tree(int t) const { return trees_[t]; }
  const Database<P>& db() const { return db_; }
  const Relation<P>& rel(int t, int n) const { return *state_[t][n].rel; }
  std::uint64_t epoch() const { return epoch_; }
  const std::uint64_t* epoch_ptr() const { return &epoch_; }

  // Index on the columns holding `vars` (ascending column order). Registration is plan time only.
  int require_index(int t, int n, VarSet vars) {
    NodeState& st = state_[t][n];
    for (auto [k, id] : st.idx)
      if (k == vars) return id;
    int id = st.rel->add_index(cols_for(t, n, vars));
    st.idx.emplace_back(vars, id);
    return id;
  }
  int index(int t, int n, VarSet vars) const {
    for (auto [k, id] : state_[t][n].idx)
      if (k == vars) return id;
    throw std::logic_error("index not registered at plan time");
  }
  std::vector<int> cols_for(int t, int n, VarSet vars) const {
    std::vector<int> cols;
    const auto& sch = trees_[t].nodes[n].schema;
    for (int i = 0; i < static_cast<int>(sch.size()); ++i)
      if (has(vars, sch[i])) cols.push_back(i);
    return cols;
  }
  // key over `vars` of node n taken from a binding indexed by variable
  Tuple key(int t, int n, VarSet vars, const std::vector<Value>& val) const {
    Tuple k;
    k.reserve(trees_[t].nodes[n].schema.size());
    for (VarId v : trees_[t].nodes[n].schema)
      if (has(vars, v)) k.push_back(val[v]);
    return k;
  }
  // Same as key() but written to a scratch buffer; valid until the next probe_key call.
  const Tuple& probe_key(int t, int n, VarSet vars, const std::vector<Value>& val) const {
    scratch_.clear();
    for (VarId v : trees_[t].nodes[n].schema)
      if (has(vars, v)) scratch_.push_back(val[v]);
    return scratch_;
  }

  void materialize() {
    ++epoch_;
    for (int t = 0; t < num_trees(); ++t) {
      for (auto& st : state_[t])
        if (st.own) st.own->clear();
      const ViewTree& tr = trees_[t];
      for (int n = 0; n < static_cast<int>(tr.nodes.size()); ++n) {
        const ViewNode& vn = tr.nodes[n];
        Relation<P>& out = *state_[t][n].rel;
        if (vn.kind == ViewKind::Atom) {
          const Relation<P>& base = *db_.find(q_.atoms[vn.atom].relation);
          base.for_each([&](const Tuple& tu, const P& p) {
            if (!filter_ || filter_(t, n, tu)) out.assign(tu, p);
          });
        } else if (vn.kind == ViewKind::Indicator) {
          for (const auto& ind : indicator_leaves_[q_.atoms[vn.atom].relation]) {
            if (ind.tree != t || ind.node != n) continue;
            const Relation<P>& base = *db_.find(q_.atoms[vn.atom].relation);
            base.for_each_bucket(ind.base_index, [&](const Tuple& k, const auto&) {
              out.assign(k, Traits::one());
            });
          }
        } else if (!vn.alias) {
          std::vector<Value> val(q_.num_vars(), 0);
          join(t, n, 0, val, false, [&](const P& p) { out.assign(key(t, n, vn.vars(), val), p); });
        }
      }
    }
  }

  // Single-tuple update of a base relation and of every view depending on it.
  void update(const std::string& relation, const Tuple& tu, const P& m) {
    Relation<P>* base = db_mut(relation);
    if (!base) throw std::invalid_argument("unknown relation " + relation);
    if (tu.size() != base->arity()) base->upsert(tu, m);  // throws arity mismatch
    ++epoch_;
    auto& inds = indicator_leaves_[relation];
    std::vector<std::size_t> before;
    for (const auto& ind : inds) before.push_back(base->count(ind.base_index, project(tu, ind.cols)));
    base->upsert(tu, m);
    for (auto [t, n] : atom_leaves_[relation])
      if (!filter_ || filter_(t, n, tu)) leaf_update(t, n, tu, m);
    for (std::size_t i = 0; i < inds.size(); ++i) {
      Tuple z = project(tu, inds[i].cols);
      bool was = before[i] > 0, now = base->count(inds[i].base_index, z) > 0;
      if (was == now) continue;
      P delta = now ? Traits::one() : Traits::neg(Traits::one());
      leaf_update(inds[i].tree, inds[i].node, z, delta);
    }
  }

  // Applies a delta to one leaf and propagates it to the root of its tree.
  void leaf_update(int t, int n, const Tuple& tu, const P& delta) {
    ++epoch_;
    auto [old, now] = state_[t][n].rel->upsert(tu, delta);
    if (!(old == now)) on_change(t, n, tu, old, now);
  }

  // Recomputes everything in a fresh engine and compares all stored views.
  bool matches_recompute() const {
    ViewEngine fresh(q_, trees_, db_, filter_);
    fresh.materialize();
    for (int t = 0; t < num_trees(); ++t)
      for (std::size_t n = 0; n < state_[t].size(); ++n)
        if (!(*state_[t][n].rel == *fresh.state_[t][n].rel)) return false;
    return true;
  }

  void set_filter(Filter f) { filter_ = std::move(f); }
  Database<P>& mutable_db() { return db_; }

 private:
  struct NodeState {
    Relation<P>* rel = nullptr;
    std::unique_ptr<Relation<P>> own;
    std::vector<std::pair<VarSet, int>> idx;
    std::vector<std::pair<VarSet, std::vector<VarId>>> orders;  // join order per start set
  };
  struct IndicatorLeaf {
    int tree, node, base_index;
    std::vector<int> cols;
  };

  Relation<P>* db_mut(const std::string& name) {
    auto it = db_.rels.find(name);
    return it == db_.rels.end() ? nullptr : &it->second;
  }

  // Registers the indexes the join at node n needs for materialization and for deltas
  // arriving from each child.
  void register_join_indexes(int t, int n) {
    const ViewNode& vn = trees_[t].nodes[n];
    if (vn.children.empty() || vn.alias) return;
    std::vector<VarSet> pre{0};
    for (int c : vn.children) pre.push_back(trees_[t].nodes[c].vars() & vn.vars());
    for (VarSet bound : pre) {
      auto& orders = state_[t][n].orders;
      bool known = false;
      for (const auto& o : orders) known |= o.first == bound;
      if (known) continue;
      orders.emplace_back(bound, join_order(t, n, bound));
      for (VarId z : orders.back().second) {
        for (int c : vn.children) {
          VarSet cv = trees_[t].nodes[c].vars();
          if (!has(cv, z)) continue;
          for (VarSet k : {bound & cv, (bound | bit(z)) & cv})
            if (k != 0 && k != cv) require_index(t, c, k);
        }
        bound |= bit(z);
      }
    }
    for (int c : vn.children) {
      VarSet cv = trees_[t].nodes[c].vars();
      if ((cv & vn.vars()) != cv) require_index(t, c, cv & vn.vars());
    }
  }

  // Variables of n outside `bound`, most widely shared among the children first.
  std::vector<VarId> join_order(int t, int n, VarSet bound) const {
    const ViewNode& vn = trees_[t].nodes[n];
    std::vector<VarId> out;
    while ((vn.vars() & ~bound) != 0) {
      VarId pick = 0;
      int cover = -1;
      for (VarId v : vn.schema) {
        if (has(bound, v)) continue;
        int k = 0;
        for (int c : vn.children) k += has(trees_[t].nodes[c].vars(), v);
        if (k > cover) {
          pick = v;
          cover = k;
        }
      }
      out.push_back(pick);
      bound |= bit(pick);
    }
    return out;
  }
  const std::vector<VarId>& order_for(int t, int n, VarSet bound) const {
    for (const auto& o : state_[t][n].orders)
      if (o.first == bound) return o.second;
    throw std::logic_error("join order not registered at plan time");
  }

  // payload a child contributes at a complete binding of the parent schema
  P child_value(int t, int n, int c, const std::vector<Value>& val) const {
    VarSet cv = trees_[t].nodes[c].vars();
    VarSet s = cv & trees_[t].nodes[n].vars();
    const Relation<P>& r = *state_[t][c].rel;
    if (s == cv) return r.get(probe_key(t, c, cv, val));
    const auto* b = r.bucket(index(t, c, s), probe_key(t, c, s, val));
    return b ? b->aggregate : Traits::zero();
  }

  // Attribute-at-a-time join of the children of n over n's schema, starting from the
  // variables in `bound` (already set in val). Calls emit(payload) per complete binding.
  template <class F>
  void join(int t, int n, VarSet bound, std::vector<Value>& val, bool allow_zero, F&& emit) const {
    join_rec(t, n, order_for(t, n, bound), 0, bound, val, allow_zero, emit);
  }

  template <class F>
  void join_rec(int t, int n, const std::vector<VarId>& order, std::size_t pos, VarSet bound,
                std::vector<Value>& val, bool allow_zero, F& emit) const {
    const ViewNode& vn = trees_[t].nodes[n];
    if (pos == order.size()) {
      P acc = Traits::zero();
      bool first = true;
      for (int c : vn.children) {
        P x = child_value(t, n, c, val);
        if (Traits::is_zero(x)) {
          if (allow_zero) emit(Traits::zero());
          return;
        }
        acc = first ? x : Traits::mul(acc, x);
        first = false;
      }
      if (allow_zero || !Traits::is_zero(acc)) emit(acc);
      return;
    }
    VarId z = order[pos];
    int driver = -1;
    std::size_t best = 0;
    for (int c : vn.children) {
      VarSet cv = trees_[t].nodes[c].vars();
      if (!has(cv, z)) continue;
      VarSet k = bound & cv;
      const Relation<P>& r = *state_[t][c].rel;
      std::size_t cnt = k == 0 ? r.size() : r.count(index(t, c, k), probe_key(t, c, k, val));
      if (cnt == 0) return;
      if (driver < 0 || cnt < best) {
        driver = c;
        best = cnt;
      }
    }
    if (driver < 0) throw std::logic_error("join variable not covered by any child");

    const ViewNode& dn = trees_[t].nodes[driver];
    const Relation<P>& dr = *state_[t][driver].rel;
    VarSet dk = bound & dn.vars();
    int zc = dn.col(z);
    bool multi = (dn.vars() & ~bound) != bit(z);
    std::unordered_set<Value> seen;
    auto visit = [&](std::uint32_t s) {
      ++counters().probes;
      Value zv = dr.tuple(s)[zc];
      if (multi && !seen.insert(zv).second) return;
      val[z] = zv;
      VarSet nb = bound | bit(z);
      for (int c : vn.children) {
        if (c == driver) continue;
        VarSet cv = trees_[t].nodes[c].vars();
        if (!has(cv, z)) continue;
        VarSet k = nb & cv;
        const Relation<P>& r = *state_[t][c].rel;
        bool ok = k == cv ? r.contains(probe_key(t, c, k, val))
                          : r.count(index(t, c, k), probe_key(t, c, k, val)) > 0;
        if (!ok) return;
      }
      join_rec(t, n, order, pos + 1, nb, val, allow_zero, emit);
    };
    if (dk == 0) {
      for (auto s = dr.first(); s != Relation<P>::npos; s = dr.next(s)) visit(s);
    } else {
      int ix = index(t, driver, dk);
      const auto* b = dr.bucket(ix, probe_key(t, driver, dk, val));
      for (auto s = b->head; s != Relation<P>::npos; s = dr.next_in(ix, s)) visit(s);
    }
  }

  void on_change(int t, int n, const Tuple& k, const P& old, const P& now) {
    (void)old;
    (void)now;
    const ViewTree& tr = trees_[t];
    int p = tr.nodes[n].parent;
    if (p < 0) return;
    if (tr.nodes[p].alias) {
      on_change(t, p, k, old, now);
      return;
    }
    std::vector<Value> val(q_.num_vars(), 0);
    const ViewNode& cn = tr.nodes[n];
    for (std::size_t i = 0; i < cn.schema.size(); ++i) val[cn.schema[i]] = k[i];
    const ViewNode& pn = tr.nodes[p];
    Relation<P>& pr = *state_[t][p].rel;
    join(t, p, cn.vars() & pn.vars(), val, true, [&](const P& value) {
      Tuple pk = key(t, p, pn.vars(), val);
      P before = pr.assign(pk, value);
      if (!(before == value)) on_change(t, p, pk, before, value);
    });
  }

  Query q_;
  std::vector<ViewTree> trees_;
  Database<P> db_;
  Filter filter_;
  std::vector<std::vector<NodeState>> state_;
  std::map<std::string, std::vector<std::pair<int, int>>> atom_leaves_;
  std::map<std::string, std::vector<IndicatorLeaf>> indicator_leaves_;
  std::uint64_t epoch_ = 0;
  mutable Tuple scratch_;
};

}  // namespace cqap
