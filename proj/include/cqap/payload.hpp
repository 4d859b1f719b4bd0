#pragma once

#include <cstdint>
#include <ostream>
#include <string>

#include "cqap/pprob.hpp"

namespace cqap {

// Group operations (zero, add, neg) plus the two operations views need:
// mul combines payloads of joined children, marginal maps a payload to its
// contribution when a variable is projected away.
template <class P>
struct PayloadTraits;

template <>
struct PayloadTraits<std::int64_t> {
  static std::int64_t zero() { return 0; }
  static std::int64_t one() { return 1; }
  static bool is_zero(std::int64_t a) { return a == 0; }
  static std::int64_t add(std::int64_t a, std::int64_t b) { return a + b; }
  static std::int64_t neg(std::int64_t a) { return -a; }
  static std::int64_t mul(std::int64_t a, std::int64_t b) { return a * b; }
  static std::int64_t marginal(std::int64_t a) { return a; }
};

// Certain multiplicity next to an uncertain signed probability.
struct ProbPayload {
  std::int64_t certain = 0;
  PProb uncertain;

  friend bool operator==(const ProbPayload& a, const ProbPayload& b) {
    return a.certain == b.certain && a.uncertain == b.uncertain;
  }
  friend std::ostream& operator<<(std::ostream& os, const ProbPayload& p) {
    return os << "(" << p.certain << "," << p.uncertain << ")";
  }
};

template <>
struct PayloadTraits<ProbPayload> {
  static ProbPayload zero() { return {}; }
  static ProbPayload one() { return {1, PProb()}; }
  static bool is_zero(const ProbPayload& a) { return a.certain == 0 && a.uncertain.is_zero(); }
  static ProbPayload add(const ProbPayload& a, const ProbPayload& b) {
    return {a.certain + b.certain, podot(a.uncertain, b.uncertain)};
  }
  static ProbPayload neg(const ProbPayload& a) { return {-a.certain, a.uncertain.inverse()}; }

  // independent join; a certain child counts as probability 1 with the sign of its mass
  static ProbPayload mul(const ProbPayload& a, const ProbPayload& b) {
    if (is_zero(a) || is_zero(b)) return zero();
    bool ca = a.certain != 0, cb = b.certain != 0;
    bool na = ca ? a.certain < 0 : a.uncertain.negative();
    bool nb = cb ? b.certain < 0 : b.uncertain.negative();
    if (ca && cb) return {(na != nb) ? -1 : 1, PProb()};
    Rational m = (ca ? Rational(1) : a.uncertain.magnitude()) *
                 (cb ? Rational(1) : b.uncertain.magnitude());
    return {0, PProb(m, na != nb)};
  }

  // independent projection: certain entries count once, uncertain ones fold with podot
  static ProbPayload marginal(const ProbPayload& a) {
    if (a.certain != 0) return {a.certain > 0 ? 1 : -1, PProb()};
    return {0, a.uncertain};
  }
};

// Probability of an output tuple after merging certain mass.
struct ProbValue {
  bool certain = false;
  PProb p;           // when !certain
  bool negative = false;  // when certain: 1- instead of 1+

  static ProbValue of(const ProbPayload& x) {
    ProbValue v;
    if (x.certain != 0) {
      v.certain = true;
      v.negative = x.certain < 0;
    } else {
      v.p = x.uncertain;
    }
    return v;
  }
  Rational magnitude() const { return certain ? Rational(1) : p.magnitude(); }
  bool is_negative() const { return certain ? negative : p.negative(); }

  std::string to_string() const {
    if (certain) return negative ? "1-" : "1+";
    return p.to_string();
  }
  friend bool operator==(const ProbValue& a, const ProbValue& b) {
    return a.certain == b.certain && (a.certain ? a.negative == b.negative : a.p == b.p);
  }
};

}  // namespace cqap
