#pragma once

#include <functional>
#include <set>
#include <vector>

#include "cqap/query.hpp"
#include "cqap/view_engine.hpp"

namespace cqap {

// Reference evaluation by backtracking over the atoms: π_O σ_{I=inputs} of the join of all
// entries with non-zero payload. Each fracture component is evaluated on its own and the
// results are combined as a product.
template <class P>
std::set<Tuple> naive_answer(const Query& q, const Database<P>& db, const Tuple& inputs) {
  FractureMap fm = fracture(q);
  std::vector<std::set<Tuple>> parts;
  std::vector<std::vector<int>> slots;
  for (int c = 0; c < fm.num_components; ++c) {
    std::vector<int> atoms = fm.component_atoms(c);
    VarSet vars = 0;
    for (int a : atoms) vars |= q.atom_vars(a);
    std::vector<int> sl;
    for (std::size_t i = 0; i < q.outputs.size(); ++i)
      if (has(vars, q.outputs[i])) sl.push_back(static_cast<int>(i));
    std::vector<Value> val(q.num_vars(), 0);
    VarSet bound = 0;
    for (std::size_t i = 0; i < q.inputs.size(); ++i) {
      val[q.inputs[i]] = inputs[i];
      bound |= bit(q.inputs[i]);
    }
    std::set<Tuple> res;
    std::function<void(std::size_t, VarSet)> rec = [&](std::size_t k, VarSet b) {
      if (k == atoms.size()) {
        Tuple t;
        for (int s : sl) t.push_back(val[q.outputs[s]]);
        res.insert(std::move(t));
        return;
      }
      const Atom& a = q.atoms[atoms[k]];
      const Relation<P>* r = db.find(a.relation);
      if (!r) return;
      r->for_each([&](const Tuple& tu, const P&) {
        std::vector<Value> saved = val;
        VarSet nb = b;
        for (std::size_t j = 0; j < a.vars.size(); ++j) {
          VarId v = a.vars[j];
          if (has(nb, v)) {
            if (val[v] != tu[j]) {
              val = saved;
              return;
            }
          } else {
            val[v] = tu[j];
            nb |= bit(v);
          }
        }
        rec(k + 1, nb);
        val = saved;
      });
    };
    rec(0, bound);
    parts.push_back(std::move(res));
    slots.push_back(std::move(sl));
  }
  std::set<Tuple> out;
  Tuple cur(q.outputs.size(), 0);
  std::function<void(std::size_t)> prod = [&](std::size_t i) {
    if (i == parts.size()) {
      out.insert(cur);
      return;
    }
    for (const Tuple& t : parts[i]) {
      for (std::size_t j = 0; j < t.size(); ++j) cur[slots[i][j]] = t[j];
      prod(i + 1);
    }
  };
  prod(0);
  return out;
}

}  // namespace cqap
