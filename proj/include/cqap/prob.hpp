#pragma once

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cqap/engine.hpp"
#include "cqap/naive.hpp"

namespace cqap {

template <>
struct PayloadTraits<PProb> {
  static PProb zero() { return {}; }
  static bool is_zero(const PProb& a) { return a.is_zero(); }
  static PProb add(const PProb& a, const PProb& b) { return podot(a, b); }
  static PProb neg(const PProb& a) { return a.inverse(); }
  static PProb mul(const PProb& a, const PProb& b) {
    return PProb(a.magnitude() * b.magnitude(), a.negative() != b.negative());
  }
  static PProb marginal(const PProb& a) { return a; }
};

// A single update: uncertain (folded with podot) or certain (multiplicity change).
struct ProbUpdate {
  std::variant<PProb, std::int64_t> value;

  static ProbUpdate uncertain(PProb p) { return {p}; }
  static ProbUpdate certain(std::int64_t m) { return {m}; }
  bool is_certain() const { return std::holds_alternative<std::int64_t>(value); }
  ProbPayload payload() const {
    if (is_certain()) return {std::get<std::int64_t>(value), PProb()};
    return {0, std::get<PProb>(value)};
  }
};

// Per relation: uncertain tuples with signed probabilities next to certain multiplicities.
struct ProbDatabase {
  std::map<std::string, Relation<PProb>> uncertain;
  std::map<std::string, Relation<std::int64_t>> certain;

  void declare(const std::string& rel, std::size_t arity) {
    auto u = uncertain.try_emplace(rel, arity).first;
    auto c = certain.try_emplace(rel, arity).first;
    if (u->second.arity() != arity || c->second.arity() != arity)
      throw std::invalid_argument("relation " + rel + " used with two arities");
  }

  void upsert(const std::string& rel, const Tuple& t, const ProbUpdate& u) {
    declare(rel, t.size());
    if (u.is_certain()) certain.at(rel).upsert(t, std::get<std::int64_t>(u.value));
    else uncertain.at(rel).upsert(t, std::get<PProb>(u.value));
  }

  // both stores side by side, as leaf payloads for the engine
  Database<ProbPayload> combined() const {
    Database<ProbPayload> db;
    for (const auto& [name, r] : uncertain) {
      auto& out = db.relation(name, r.arity());
      r.for_each([&](const Tuple& t, const PProb& p) { out.upsert(t, ProbPayload{0, p}); });
    }
    for (const auto& [name, r] : certain) {
      auto& out = db.relation(name, r.arity());
      r.for_each([&](const Tuple& t, std::int64_t m) { out.upsert(t, ProbPayload{m, PProb()}); });
    }
    return db;
  }

  std::size_t uncertain_tuples() const {
    std::size_t n = 0;
    for (const auto& [k, r] : uncertain) n += r.size();
    return n;
  }

  friend bool operator==(const ProbDatabase& a, const ProbDatabase& b) {
    auto same = [](const auto& x, const auto& y) {
      for (const auto& [k, r] : x) {
        auto it = y.find(k);
        if (it == y.end() ? !r.empty() : !(r == it->second)) return false;
      }
      for (const auto& [k, r] : y)
        if (!x.count(k) && !r.empty()) return false;
      return true;
    };
    return same(a.uncertain, b.uncertain) && same(a.certain, b.certain);
  }
};

inline void check_prob_query(const Query& q) {
  std::set<std::string> seen;
  for (const auto& a : q.atoms)
    if (!seen.insert(a.relation).second)
      throw QueryError("probabilistic mode does not allow repeated relation symbol " + a.relation);
  if (classify(q) != QueryClass::CQAP0)
    throw QueryError("probabilistic mode needs a CQAP0 query");
}

// Maintains the access-top view trees of a CQAP0 query over a probabilistic database.
class ProbEngine {
 public:
  using PP = PayloadTraits<ProbPayload>;

  ProbEngine(const Query& q, const ProbDatabase& db) : db_(db) {
    check_prob_query(q);
    for (const auto& a : q.atoms) db_.declare(a.relation, a.vars.size());
    engine_ = std::make_unique<Engine<ProbPayload>>(q, db_.combined());
    auto& views = engine_->views();
    for (int t = 0; t < views.num_trees(); ++t) {
      const ViewTree& tr = views.tree(t);
      for (const auto& n : tr.nodes)
        if (n.kind == ViewKind::Indicator)
          throw std::logic_error("probabilistic plan contains an indicator projection");
      views.require_index(t, tr.root, 0);
    }
  }

  const Engine<ProbPayload>& engine() const { return *engine_; }
  const ProbDatabase& db() const { return db_; }

  void update(const std::string& rel, const Tuple& t, const ProbUpdate& u) {
    db_.upsert(rel, t, u);
    engine_->update(rel, t, u.payload());
  }

  SourcePtr open(const Tuple& inputs) const { return engine_->open(inputs); }

  // Probability of output tuple `out` for the request `inputs`, by descent over the views.
  ProbValue prob_of(const Tuple& inputs, const Tuple& out) const {
    const Query& q = engine_->query();
    const FractureMap& fm = engine_->fractured();
    const auto& views = engine_->views();
    Binding b = bind_request(q, fm, inputs);
    if (out.size() != q.outputs.size()) throw std::invalid_argument("output tuple arity");
    for (std::size_t i = 0; i < out.size(); ++i) {
      b.val[fm.fracture.outputs[i]] = out[i];
      b.fixed |= bit(fm.fracture.outputs[i]);
    }
    ProbPayload acc = PP::one();
    for (int t = 0; t < views.num_trees(); ++t) {
      acc = PP::mul(acc, node_value(t, views.tree(t).root, b));
      if (PP::is_zero(acc)) throw std::invalid_argument("tuple is not in the result");
    }
    return ProbValue::of(acc);
  }

 private:
  ProbPayload node_value(int t, int n, const Binding& b) const {
    const auto& views = engine_->views();
    const ViewTree& tr = views.tree(t);
    const ViewNode& vn = tr.nodes[n];
    const auto& rel = views.rel(t, n);
    VarSet vars = vn.vars();
    if (vn.kind == ViewKind::Atom || vn.alias) {
      if ((vars & ~b.fixed) == 0) return rel.get(views.key(t, n, vars, b.val));
    } else if (has(b.fixed, vn.var)) {
      // free variable: its children are independent given the bound values
      if (vn.kind == ViewKind::Aux) return node_value(t, vn.children[0], b);
      ProbPayload acc = PP::one();
      for (int c : vn.children) acc = PP::mul(acc, node_value(t, c, b));
      return acc;
    }
    // bound variable: marginal over what is not bound
    VarSet known = vars & b.fixed;
    if (known == vars) return rel.get(views.key(t, n, vars, b.val));
    const auto* bucket = rel.bucket(views.index(t, n, known), views.key(t, n, known, b.val));
    return bucket ? bucket->aggregate : PP::zero();
  }

  ProbDatabase db_;
  std::unique_ptr<Engine<ProbPayload>> engine_;
};

// Exhaustive possible-worlds evaluation for one request: output tuple -> probability.
// Needs positive polarities and non-negative certain multiplicities.
inline std::map<Tuple, Rational> possible_worlds(const Query& q, const ProbDatabase& db,
                                                 const Tuple& inputs,
                                                 std::size_t max_uncertain = 16) {
  struct U {
    std::string rel;
    Tuple t;
    Rational p;
  };
  std::vector<U> unc;
  Database<std::int64_t> base;
  for (const auto& a : q.atoms) base.relation(a.relation, a.vars.size());
  for (const auto& [name, r] : db.certain)
    r.for_each([&](const Tuple& t, std::int64_t m) {
      if (m < 0) throw std::domain_error("negative certain multiplicity");
      base.relation(name, r.arity()).upsert(t, 1);
    });
  for (const auto& [name, r] : db.uncertain)
    r.for_each([&](const Tuple& t, const PProb& p) {
      if (p.negative()) throw std::domain_error("negative polarity has no possible-world reading");
      const Relation<std::int64_t>* c = base.find(name);
      if (c && c->contains(t)) return;  // certain anyway
      unc.push_back({name, t, p.magnitude()});
    });
  if (unc.size() > max_uncertain)
    throw std::length_error("too many uncertain tuples for possible-world enumeration");
  std::map<Tuple, Rational> out;
  const std::size_t worlds = std::size_t{1} << unc.size();
  for (std::size_t w = 0; w < worlds; ++w) {
    Database<std::int64_t> world = base;
    Rational weight = 1;
    for (std::size_t i = 0; i < unc.size(); ++i) {
      if ((w >> i) & 1) {
        world.relation(unc[i].rel, unc[i].t.size()).upsert(unc[i].t, 1);
        weight *= unc[i].p;
      } else {
        weight *= 1 - unc[i].p;
      }
    }
    if (weight == 0) continue;
    for (const Tuple& t : naive_answer(q, world, inputs)) out[t] += weight;
  }
  return out;
}

}  // namespace cqap
