#pragma once

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cqap/query.hpp"
#include "cqap/rational.hpp"

namespace cqap {

namespace lp {

// Dense two-phase simplex with Bland's rule over exact rationals.
// minimize c.x  subject to  A x >= b,  x >= 0,  b >= 0.
class CoveringSimplex {
 public:
  CoveringSimplex(const std::vector<std::vector<Rational>>& a, const std::vector<Rational>& b,
                  std::vector<Rational> c)
      : m_(static_cast<int>(a.size())),
        n_(static_cast<int>(c.size())),
        cols_(n_ + 2 * m_),
        cost_(std::move(c)) {
    t_.assign(m_, std::vector<Rational>(cols_ + 1));
    basis_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) t_[i][j] = a[i][j];
      t_[i][n_ + i] = -1;      // surplus
      t_[i][n_ + m_ + i] = 1;  // artificial
      t_[i][cols_] = b[i];
      basis_[i] = n_ + m_ + i;
    }
  }

  // Returns the optimum; throws when the system is infeasible.
  Rational solve() {
    std::vector<Rational> phase1(cols_);
    for (int i = 0; i < m_; ++i) phase1[n_ + m_ + i] = 1;
    std::vector<bool> all(cols_, true);
    optimize(phase1, all);
    if (objective(phase1) != 0) throw std::domain_error("cover LP infeasible");

    for (int i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[i])) continue;
      for (int j = 0; j < n_ + m_; ++j)
        if (t_[i][j] != 0) {
          pivot(i, j);
          break;
        }
    }
    std::vector<Rational> phase2(cols_);
    for (int j = 0; j < n_; ++j) phase2[j] = cost_[j];
    std::vector<bool> allowed(cols_, true);
    for (int i = 0; i < m_; ++i) allowed[n_ + m_ + i] = false;
    optimize(phase2, allowed);
    return objective(phase2);
  }

  std::vector<Rational> solution() const {
    std::vector<Rational> x(n_);
    for (int i = 0; i < m_; ++i)
      if (basis_[i] < n_) x[basis_[i]] = t_[i][cols_];
    return x;
  }

 private:
  bool is_artificial(int j) const { return j >= n_ + m_; }

  Rational objective(const std::vector<Rational>& c) const {
    Rational z = 0;
    for (int i = 0; i < m_; ++i) z += c[basis_[i]] * t_[i][cols_];
    return z;
  }

  void optimize(const std::vector<Rational>& c, const std::vector<bool>& allowed) {
    for (;;) {
      std::vector<bool> basic(cols_, false);
      for (int b : basis_) basic[b] = true;
      int enter = -1;
      for (int j = 0; j < cols_ && enter < 0; ++j) {
        if (!allowed[j] || basic[j]) continue;
        Rational r = c[j];
        for (int i = 0; i < m_; ++i) r -= c[basis_[i]] * t_[i][j];
        if (r < 0) enter = j;
      }
      if (enter < 0) return;
      int leave = -1;
      Rational best;
      for (int i = 0; i < m_; ++i) {
        if (t_[i][enter] <= 0) continue;
        Rational ratio = t_[i][cols_] / t_[i][enter];
        if (leave < 0 || ratio < best || (ratio == best && basis_[i] < basis_[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) throw std::domain_error("cover LP unbounded");
      pivot(leave, enter);
    }
  }

  void pivot(int r, int col) {
    Rational p = t_[r][col];
    for (auto& x : t_[r]) x /= p;
    for (int i = 0; i < m_; ++i) {
      if (i == r || t_[i][col] == 0) continue;
      Rational f = t_[i][col];
      for (int j = 0; j <= cols_; ++j) t_[i][j] -= f * t_[r][j];
    }
    basis_[r] = col;
  }

  int m_, n_, cols_;
  std::vector<Rational> cost_;
  std::vector<std::vector<Rational>> t_;
  std::vector<int> basis_;
};

// Edges restricted to f, deduplicated and with dominated edges dropped.
inline std::vector<VarSet> reduce_edges(const std::vector<VarSet>& edges, VarSet f) {
  std::vector<VarSet> r;
  for (VarSet e : edges)
    if (e & f) r.push_back(e & f);
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  std::vector<VarSet> out;
  for (VarSet e : r) {
    bool dominated = false;
    for (VarSet g : r)
      if (g != e && (e & g) == e) dominated = true;
    if (!dominated) out.push_back(e);
  }
  return out;
}

}  // namespace lp

// rho*: optimal fractional edge cover of f by the given hyperedges.
inline Rational fractional_cover(const std::vector<VarSet>& edges, VarSet f) {
  if (f == 0) return 0;
  std::vector<VarSet> e = lp::reduce_edges(edges, f);
  VarSet covered = 0;
  for (VarSet x : e) covered |= x;
  if ((covered & f) != f) throw std::domain_error("variable set not coverable by the atoms");

  static std::mutex mu;
  static std::map<std::pair<std::vector<VarSet>, VarSet>, Rational> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({e, f});
    if (it != cache.end()) return it->second;
  }
  std::vector<int> vs = members(f);
  std::vector<std::vector<Rational>> a(vs.size(), std::vector<Rational>(e.size()));
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = 0; j < e.size(); ++j) a[i][j] = has(e[j], vs[i]) ? 1 : 0;
  lp::CoveringSimplex s(a, std::vector<Rational>(vs.size(), Rational(1)),
                        std::vector<Rational>(e.size(), Rational(1)));
  Rational v = s.solve();
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(std::make_pair(e, f), v);
  return v;
}

// rho: optimal integral edge cover by exhaustive subset search.
inline int integral_cover(const std::vector<VarSet>& edges, VarSet f) {
  if (f == 0) return 0;
  std::vector<VarSet> e = lp::reduce_edges(edges, f);
  const int n = static_cast<int>(e.size());
  if (n > 24) throw std::length_error("too many hyperedges for subset search");
  int best = -1;
  for (std::uint32_t s = 1; s < (std::uint32_t{1} << n); ++s) {
    int k = std::popcount(s);
    if (best >= 0 && k >= best) continue;
    VarSet u = 0;
    for (int j = 0; j < n; ++j)
      if ((s >> j) & 1U) u |= e[j];
    if ((u & f) == f) best = k;
  }
  if (best < 0) throw std::domain_error("variable set not coverable by the atoms");
  return best;
}

inline Rational fractional_edge_cover(const Query& q, VarSet f) {
  return fractional_cover(hypergraph(q).edges, f);
}

inline int integral_edge_cover(const Query& q, VarSet f) {
  return integral_cover(hypergraph(q).edges, f);
}

}  // namespace cqap
