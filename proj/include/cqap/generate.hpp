#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqap/query.hpp"
#include "cqap/view_engine.hpp"

namespace cqap {

// Synthetic value distributions for benchmarks.
struct Generator {
  enum Kind { Uniform, Zipf, OneHot };
  Kind kind = Uniform;
  double s = 1.0;        // zipf exponent
  std::size_t domain = 0;

  static Kind parse_kind(const std::string& k) {
    if (k == "uniform") return Uniform;
    if (k == "zipf") return Zipf;
    if (k == "onehot") return OneHot;
    throw std::invalid_argument("unknown generator '" + k + "' (uniform, zipf, onehot)");
  }

  void prepare() {
    if (domain == 0) throw std::invalid_argument("generator domain must be positive");
    if (kind == Zipf) {
      std::vector<double> w(domain);
      for (std::size_t r = 0; r < domain; ++r) w[r] = 1.0 / std::pow(static_cast<double>(r + 1), s);
      zipf_ = std::discrete_distribution<std::size_t>(w.begin(), w.end());
    }
  }

  template <class Rng>
  Value draw(Rng& rng) {
    switch (kind) {
      case Zipf: return static_cast<Value>(zipf_(rng));
      case OneHot:
        // half of all values hit the single heavy value 0
        if (std::bernoulli_distribution(0.5)(rng)) return 0;
        [[fallthrough]];
      default: return static_cast<Value>(std::uniform_int_distribution<std::size_t>(0, domain - 1)(rng));
    }
  }

  template <class Rng>
  Tuple tuple(std::size_t arity, Rng& rng) {
    Tuple t(arity);
    for (auto& v : t) v = draw(rng);
    return t;
  }

 private:
  std::discrete_distribution<std::size_t> zipf_;
};

// About n distinct tuples spread evenly over the relation symbols of q.
template <class Rng>
Database<std::int64_t> generate_database(const Query& q, std::size_t n, Generator& g, Rng& rng) {
  Database<std::int64_t> db;
  for (const auto& a : q.atoms) db.relation(a.relation, a.vars.size());
  std::size_t per = std::max<std::size_t>(1, n / db.rels.size());
  for (auto& [name, r] : db.rels) {
    std::size_t tries = 0;
    while (r.size() < per && tries++ < 20 * per) {
      Tuple t = g.tuple(r.arity(), rng);
      if (!r.contains(t)) r.upsert(t, 1);
    }
  }
  return db;
}

}  // namespace cqap
