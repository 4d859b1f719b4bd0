#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqap/enumerate.hpp"
#include "cqap/planner.hpp"
#include "cqap/view_engine.hpp"
#include "cqap/view_tree.hpp"

namespace cqap {

// An access request translated onto the fracture: every copy of an input gets its value.
struct Binding {
  std::vector<Value> val;
  VarSet fixed = 0;
};

inline Binding bind_request(const Query& q, const FractureMap& fm, const Tuple& inputs) {
  if (inputs.size() != q.inputs.size())
    throw std::invalid_argument("request binds " + std::to_string(inputs.size()) +
                                " values but the query has " + std::to_string(q.inputs.size()) +
                                " input variables");
  Binding b;
  b.val.assign(fm.fracture.num_vars(), 0);
  for (std::size_t i = 0; i < inputs.size(); ++i)
    for (VarId f : fm.renaming.at(q.inputs[i])) {
      b.val[f] = inputs[i];
      b.fixed |= bit(f);
    }
  return b;
}

// Output variables of the fracture inside `vars`, with their positions in the head.
inline std::pair<std::vector<VarId>, std::vector<int>> outputs_within(const Query& qf,
                                                                      VarSet vars) {
  std::vector<VarId> out;
  std::vector<int> slots;
  for (std::size_t i = 0; i < qf.outputs.size(); ++i)
    if (has(vars, qf.outputs[i])) {
      out.push_back(qf.outputs[i]);
      slots.push_back(static_cast<int>(i));
    }
  return {out, slots};
}

// Evaluation over the optimal access-top plan of the fracture.
template <class P>
class Engine {
 public:
  Engine(const Query& q, Database<P> db) : q_(q), fm_(fracture(q)) {
    plan_ = best_access_top(fm_.fracture);
    auto trees = build_view_trees(fm_.fracture, plan_.vo);
    views_ = std::make_unique<ViewEngine<P>>(fm_.fracture, std::move(trees), std::move(db));
    views_->materialize();
  }

  const Query& query() const { return q_; }
  const FractureMap& fractured() const { return fm_; }
  const Plan& plan() const { return plan_; }
  const ViewEngine<P>& views() const { return *views_; }
  ViewEngine<P>& views() { return *views_; }
  const Database<P>& db() const { return views_->db(); }

  void update(const std::string& rel, const Tuple& t, const P& m) { views_->update(rel, t, m); }

  SourcePtr open(const Tuple& inputs) const {
    Binding b = bind_request(q_, fm_, inputs);
    std::vector<SourcePtr> parts;
    std::vector<std::vector<int>> slots;
    for (int t = 0; t < views_->num_trees(); ++t) {
      VarSet tv = views_->tree(t).vars;
      auto [out, sl] = outputs_within(fm_.fracture, tv);
      parts.push_back(std::make_unique<TreeIterator<P>>(*views_, t, out, b.fixed & tv, b.val));
      slots.push_back(sl);
    }
    return std::make_unique<ProductNest>(std::move(parts), std::move(slots), q_.outputs.size());
  }

 private:
  Query q_;
  FractureMap fm_;
  Plan plan_;
  std::unique_ptr<ViewEngine<P>> views_;
};

}  // namespace cqap
