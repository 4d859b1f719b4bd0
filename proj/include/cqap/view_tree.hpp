#pragma once

#include <algorithm>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cqap/planner.hpp"
#include "cqap/query.hpp"

namespace cqap {

enum class ViewKind { Atom, Indicator, View, Aux };

struct ViewNode {
  ViewKind kind = ViewKind::View;
  VarId var = -1;              // View, Aux
  std::vector<VarId> schema;   // column order of the stored relation
  int atom = -1;               // Atom, Indicator
  std::vector<HeavyLight> sig; // Atom
  bool alias = false;          // View that reuses its single atom child
  int parent = -1;
  std::vector<int> children;

  VarSet vars() const { return Query::to_set(schema); }
  int col(VarId v) const {
    auto it = std::find(schema.begin(), schema.end(), v);
    return it == schema.end() ? -1 : static_cast<int>(it - schema.begin());
  }
};

struct ViewTree {
  std::vector<ViewNode> nodes;
  int root = -1;
  VarSet vars = 0;
  std::vector<VarId> var_order;     // preorder of the VO variables
  std::vector<int> var_view;        // VarId -> node of V_X (or -1)
  std::vector<VarId> var_parent;    // VarId -> parent variable (or -1)

  bool has_var(VarId v) const { return v >= 0 && has(vars, v); }
  bool is_leaf(int n) const {
    return nodes[n].kind == ViewKind::Atom || nodes[n].kind == ViewKind::Indicator;
  }
  // ancestors of a variable, root first
  std::vector<VarId> anc(VarId v) const {
    std::vector<VarId> out;
    for (VarId p = var_parent[v]; p >= 0; p = var_parent[p]) out.push_back(p);
    std::reverse(out.begin(), out.end());
    return out;
  }
};

namespace detail {

inline int build_view_rec(const Query& q, const VariableOrder& vo, int id, ViewTree& t,
                          std::vector<VarId>& path) {
  const VoNode& vn = vo.nodes[id];
  if (vn.kind != NodeKind::Var) {
    ViewNode leaf;
    leaf.atom = vn.atom;
    if (vn.kind == NodeKind::Atom) {
      leaf.kind = ViewKind::Atom;
      leaf.schema = q.atoms[vn.atom].vars;
      leaf.sig = vn.sig;
    } else {
      leaf.kind = ViewKind::Indicator;
      for (VarId v : path)
        if (has(vn.ind_vars, v)) leaf.schema.push_back(v);
    }
    t.nodes.push_back(std::move(leaf));
    return static_cast<int>(t.nodes.size()) - 1;
  }
  VarId x = vn.var;
  path.push_back(x);
  std::vector<int> kids;
  for (int c : vn.children) kids.push_back(build_view_rec(q, vo, c, t, path));
  path.pop_back();

  VarSet dep = vo.dep(q, id);
  ViewNode v;
  v.kind = ViewKind::View;
  v.var = x;
  for (VarId a : path)
    if (has(dep, a)) v.schema.push_back(a);
  v.schema.push_back(x);
  v.children = kids;
  if (kids.size() == 1 && t.nodes[kids[0]].kind == ViewKind::Atom) {
    v.alias = true;
    v.schema = t.nodes[kids[0]].schema;
  }
  t.nodes.push_back(std::move(v));
  int vid = static_cast<int>(t.nodes.size()) - 1;
  for (int c : kids) t.nodes[c].parent = vid;
  t.var_view[x] = vid;
  t.var_parent[x] = path.empty() ? -1 : path.back();

  bool sibling = vn.parent >= 0 && vo.nodes[vn.parent].children.size() > 1;
  if (!sibling) return vid;
  ViewNode aux;
  aux.kind = ViewKind::Aux;
  aux.var = x;
  for (VarId a : path)
    if (has(dep, a)) aux.schema.push_back(a);
  aux.children = {vid};
  t.nodes.push_back(std::move(aux));
  int aid = static_cast<int>(t.nodes.size()) - 1;
  t.nodes[vid].parent = aid;
  return aid;
}

}  // namespace detail

// One view tree per root of the VO.
inline std::vector<ViewTree> build_view_trees(const Query& q, const VariableOrder& vo) {
  std::vector<ViewTree> out;
  for (int r : vo.roots) {
    ViewTree t;
    t.var_view.assign(q.num_vars(), -1);
    t.var_parent.assign(q.num_vars(), -1);
    std::vector<VarId> path;
    t.root = detail::build_view_rec(q, vo, r, t, path);
    vo.visit_subtree(r, [&](int n) {
      if (vo.is_var(n)) {
        t.var_order.push_back(vo.nodes[n].var);
        t.vars |= bit(vo.nodes[n].var);
      }
    });
    out.push_back(std::move(t));
  }
  return out;
}

inline std::string node_label(const Query& q, const ViewNode& n) {
  auto sch = [&] {
    std::string s;
    for (std::size_t i = 0; i < n.schema.size(); ++i) s += (i ? "," : "") + q.var_names[n.schema[i]];
    return s;
  };
  switch (n.kind) {
    case ViewKind::View: return "V_" + q.var_names[n.var] + "(" + sch() + ")";
    case ViewKind::Aux: return "V'_" + q.var_names[n.var] + "(" + sch() + ")";
    case ViewKind::Indicator:
      return "I_{" + sch() + "}" + q.atoms[n.atom].relation + "(" + sch() + ")";
    case ViewKind::Atom: {
      std::string s = q.atoms[n.atom].relation;
      for (const auto& hl : n.sig) s += "^{" + q.names(hl.key) + (hl.heavy ? "->H}" : "->L}");
      return s + "(" + sch() + ")";
    }
  }
  return {};
}

inline std::string to_dot(const Query& q, const VariableOrder& vo,
                          const std::vector<ViewTree>& trees) {
  std::ostringstream os;
  os << "digraph plan {\n  node [shape=box];\n";
  os << "  subgraph cluster_vo {\n    label=\"variable order\";\n";
  for (int id = 0; id < static_cast<int>(vo.nodes.size()); ++id) {
    const VoNode& n = vo.nodes[id];
    std::string label;
    if (n.kind == NodeKind::Var) label = q.var_names[n.var];
    else if (n.kind == NodeKind::Atom) label = q.atoms[n.atom].relation;
    else label = "I_{" + q.names(n.ind_vars) + "}" + q.atoms[n.atom].relation;
    os << "    vo" << id << " [label=\"" << label << "\"";
    if (n.kind == NodeKind::Var) os << ", shape=ellipse";
    os << "];\n";
    if (n.parent >= 0) os << "    vo" << n.parent << " -> vo" << id << ";\n";
  }
  os << "  }\n";
  for (std::size_t t = 0; t < trees.size(); ++t) {
    os << "  subgraph cluster_tree" << t << " {\n    label=\"view tree " << t << "\";\n";
    for (int i = 0; i < static_cast<int>(trees[t].nodes.size()); ++i) {
      const ViewNode& n = trees[t].nodes[i];
      os << "    t" << t << "n" << i << " [label=\"" << node_label(q, n)
         << (n.alias ? " (alias)" : "") << "\"];\n";
      if (n.parent >= 0) os << "    t" << t << "n" << n.parent << " -> t" << t << "n" << i << ";\n";
    }
    os << "  }\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace cqap
