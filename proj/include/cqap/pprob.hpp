#pragma once

#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cqap/rational.hpp"

namespace cqap {

// Signed probability p^s with p in [0,1); 0+ and 0- are the same value.
class PProb {
 public:
  PProb() = default;
  PProb(Rational magnitude, bool negative) : mag_(std::move(magnitude)), neg_(negative) {
    mag_.canonicalize();
    if (mag_ < 0 || mag_ >= 1) throw std::domain_error("probability magnitude must lie in [0,1)");
    if (mag_ == 0) neg_ = false;
  }
  static PProb plus(const Rational& p) { return PProb(p, false); }
  static PProb minus(const Rational& p) { return PProb(p, true); }

  const Rational& magnitude() const { return mag_; }
  bool negative() const { return neg_; }
  bool is_zero() const { return mag_ == 0; }

  PProb inverse() const { return is_zero() ? *this : PProb(mag_, !neg_); }

  friend bool operator==(const PProb& a, const PProb& b) {
    return a.neg_ == b.neg_ && a.mag_ == b.mag_;
  }

  std::string to_string() const { return cqap::to_string(mag_) + (neg_ ? "-" : "+"); }

  friend std::ostream& operator<<(std::ostream& os, const PProb& p) { return os << p.to_string(); }

 private:
  Rational mag_ = 0;
  bool neg_ = false;
};

inline PProb podot(const PProb& a, const PProb& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  const Rational& p1 = a.magnitude();
  const Rational& p2 = b.magnitude();
  if (a.negative() == b.negative()) {
    Rational r = 1 - (1 - p1) * (1 - p2);
    return PProb(r, a.negative());
  }
  if (p1 == p2) return PProb();
  if (p1 > p2) return PProb((p1 - p2) / (1 - p2), a.negative());
  return PProb((p2 - p1) / (1 - p1), b.negative());
}

// "0.4+", "2/5-", "0.4" (positive by default)
inline PProb parse_pprob(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty probability");
  bool neg = false;
  char last = text.back();
  if (last == '+' || last == '-') {
    neg = last == '-';
    text.remove_suffix(1);
  }
  Rational r = parse_rational(text);
  if (r < 0 || r >= 1)
    throw std::invalid_argument("probability '" + std::string(text) + "' outside [0,1)");
  return PProb(r, neg);
}

}  // namespace cqap
