#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cqap/adaptive.hpp"
#include "cqap/engine.hpp"
#include "cqap/naive.hpp"

namespace cqap::fx {

using Rng = std::mt19937_64;

inline std::size_t pick(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Fixed tuples for exercising the enumeration combinators.
class VecSource : public OutputSource {
 public:
  explicit VecSource(std::vector<Tuple> v) : v_(std::move(v)) {}
  bool next(Tuple& out) override {
    if (i_ == v_.size()) return false;
    out = v_[i_++];
    return true;
  }
  bool contains(const Tuple& t) const override {
    return std::find(v_.begin(), v_.end(), t) != v_.end();
  }
  void rewind() override { i_ = 0; }

 private:
  std::vector<Tuple> v_;
  std::size_t i_ = 0;
};

inline SourcePtr vec(std::vector<Tuple> v) { return std::make_unique<VecSource>(std::move(v)); }

// Drained tuples as a set; `dups` reports whether anything was yielded twice.
inline std::set<Tuple> collect(OutputSource& s, bool* dups = nullptr) {
  auto all = drain(s);
  std::set<Tuple> out(all.begin(), all.end());
  if (dups) *dups = out.size() != all.size();
  return out;
}

inline Tuple random_tuple(Rng& rng, std::size_t arity, std::size_t dom) {
  Tuple t(arity);
  for (auto& v : t) v = static_cast<Value>(pick(rng, dom));
  return t;
}

inline Database<std::int64_t> random_db(const Query& q, Rng& rng, std::size_t dom,
                                        std::size_t max_tuples) {
  Database<std::int64_t> db;
  for (const auto& a : q.atoms) db.relation(a.relation, a.vars.size());
  for (auto& [name, r] : db.rels) {
    std::size_t n = pick(rng, max_tuples + 1);
    for (std::size_t i = 0; i < n; ++i) r.upsert(random_tuple(rng, r.arity(), dom), 1);
  }
  return db;
}

struct Update {
  std::string rel;
  Tuple t;
  std::int64_t m;
};

// Inserts, single deletes and deletes down to zero; multiplicities stay non-negative.
inline Update random_update(const Query& q, const Database<std::int64_t>& db, Rng& rng,
                            std::size_t dom) {
  const Atom& a = q.atoms[pick(rng, q.atoms.size())];
  const Relation<std::int64_t>& r = *db.find(a.relation);
  if (!r.empty() && pick(rng, 5) < 2) {
    std::vector<std::pair<Tuple, std::int64_t>> present;
    r.for_each([&](const Tuple& t, std::int64_t m) { present.emplace_back(t, m); });
    auto [t, m] = present[pick(rng, present.size())];
    return {a.relation, t, pick(rng, 2) ? -m : -1};
  }
  return {a.relation, random_tuple(rng, a.vars.size(), dom), static_cast<std::int64_t>(1 + pick(rng, 2))};
}

// Random query text with at most `max_atoms` atoms over variables A..F. Half of the bodies are
// built from root-to-node paths of a random forest, so they are hierarchical.
inline std::string random_query_text(Rng& rng, std::size_t max_atoms = 5) {
  const std::size_t nvars = 2 + pick(rng, 5);
  const std::size_t natoms = 1 + pick(rng, max_atoms);
  std::vector<std::vector<int>> bodies;
  if (pick(rng, 2)) {
    std::vector<int> parent(nvars, -1);
    for (std::size_t v = 1; v < nvars; ++v) parent[v] = pick(rng, 3) ? static_cast<int>(pick(rng, v)) : -1;
    for (std::size_t i = 0; i < natoms; ++i) {
      std::vector<int> path;
      for (int v = static_cast<int>(pick(rng, nvars)); v >= 0; v = parent[v]) path.push_back(v);
      std::shuffle(path.begin(), path.end(), rng);
      if (path.size() > 3) path.resize(3);
      bodies.push_back(path);
    }
  } else {
    for (std::size_t i = 0; i < natoms; ++i) {
      std::vector<int> vs(nvars);
      for (std::size_t v = 0; v < nvars; ++v) vs[v] = static_cast<int>(v);
      std::shuffle(vs.begin(), vs.end(), rng);
      vs.resize(1 + pick(rng, std::min<std::size_t>(3, nvars)));
      bodies.push_back(vs);
    }
  }
  std::set<int> used;
  std::string body;
  std::vector<std::pair<std::string, std::size_t>> symbols;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    std::string name = "R" + std::to_string(i);
    for (const auto& [s, ar] : symbols)
      if (ar == bodies[i].size() && pick(rng, 5) == 0) name = s;
    symbols.emplace_back(name, bodies[i].size());
    body += (i ? ", " : "") + name + "(";
    for (std::size_t j = 0; j < bodies[i].size(); ++j) {
      body += (j ? "," : "") + std::string(1, static_cast<char>('A' + bodies[i][j]));
      used.insert(bodies[i][j]);
    }
    body += ")";
  }
  std::string outs, ins;
  for (int v : used) {
    std::string n(1, static_cast<char>('A' + v));
    switch (pick(rng, 3)) {
      case 0: outs += (outs.empty() ? "" : ",") + n; break;
      case 1: ins += (ins.empty() ? "" : ",") + n; break;
      default: break;
    }
  }
  return "Q(" + (outs.empty() ? "." : outs) + "|" + (ins.empty() ? "." : ins) + ") = " + body + ".";
}

// Replays `updates` random updates with `requests` checks after each group against the naive
// oracle. Returns the number of mismatching requests.
template <class E, class Make>
std::size_t check_scenario(const Query& q, Rng& rng, std::size_t dom, std::size_t max_tuples,
                           std::size_t updates, std::size_t requests, Make make,
                           std::size_t* checked = nullptr) {
  E e = make(random_db(q, rng, dom, max_tuples));
  std::size_t bad = 0;
  auto ask = [&] {
    Tuple in = random_tuple(rng, q.inputs.size(), dom);
    auto src = e->open(in);
    bool dups = false;
    auto got = collect(*src, &dups);
    if (dups || got != naive_answer(q, e->db(), in)) ++bad;
    if (checked) ++*checked;
  };
  std::size_t per = std::max<std::size_t>(1, updates / std::max<std::size_t>(1, requests));
  for (std::size_t i = 0; i < updates; ++i) {
    Update u = random_update(q, e->db(), rng, dom);
    e->update(u.rel, u.t, u.m);
    if ((i + 1) % per == 0) ask();
  }
  ask();
  return bad;
}

// Optimal fractional edge cover by enumerating LP vertices: every basic solution of
// {sum_{e ∋ v} x_e >= 1 (v in f), x >= 0} picks |E| tight constraints.
inline Rational lp_vertex_cover(const std::vector<VarSet>& edges_in, VarSet f) {
  if (f == 0) return 0;
  std::vector<VarSet> edges;
  for (VarSet e : edges_in)
    if (e & f) edges.push_back(e & f);
  const std::vector<int> vs = members(f);
  const std::size_t m = edges.size(), rows = vs.size() + m;
  // row r < |vs|: cover constraint of vs[r]; otherwise x_{r-|vs|} >= 0
  auto coeff = [&](std::size_t r, std::size_t e) -> Rational {
    if (r < vs.size()) return has(edges[e], vs[r]) ? 1 : 0;
    return r - vs.size() == e ? 1 : 0;
  };
  auto rhs = [&](std::size_t r) -> Rational { return r < vs.size() ? 1 : 0; };
  Rational best = -1;
  std::vector<int> sel(rows, 0);
  std::fill(sel.begin(), sel.begin() + static_cast<std::ptrdiff_t>(m), 1);
  std::sort(sel.begin(), sel.end());
  do {
    std::vector<std::vector<Rational>> a;
    for (std::size_t r = 0; r < rows; ++r)
      if (sel[r]) {
        std::vector<Rational> row(m + 1);
        for (std::size_t e = 0; e < m; ++e) row[e] = coeff(r, e);
        row[m] = rhs(r);
        a.push_back(row);
      }
    bool singular = false;
    for (std::size_t c = 0; c < m && !singular; ++c) {
      std::size_t p = c;
      while (p < m && a[p][c] == 0) ++p;
      if (p == m) {
        singular = true;
        break;
      }
      std::swap(a[p], a[c]);
      for (std::size_t r = 0; r < m; ++r) {
        if (r == c || a[r][c] == 0) continue;
        Rational k = a[r][c] / a[c][c];
        for (std::size_t j = c; j <= m; ++j) a[r][j] -= k * a[c][j];
      }
    }
    if (singular) continue;
    std::vector<Rational> x(m);
    for (std::size_t e = 0; e < m; ++e) x[e] = a[e][m] / a[e][e];
    bool feasible = true;
    for (std::size_t r = 0; r < rows && feasible; ++r) {
      Rational s = 0;
      for (std::size_t e = 0; e < m; ++e) s += coeff(r, e) * x[e];
      if (s < rhs(r)) feasible = false;
    }
    if (!feasible) continue;
    Rational obj = 0;
    for (const auto& v : x) obj += v;
    if (best < 0 || obj < best) best = obj;
  } while (std::next_permutation(sel.begin(), sel.end()));
  return best;
}

}  // namespace cqap::fx
