#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cqap/payload.hpp"

namespace cqap {

using Value = std::uint32_t;
using Tuple = std::vector<Value>;

struct TupleHash {
  std::size_t operator()(const Tuple& t) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ t.size();
    for (Value v : t) {
      std::uint64_t x = h + v + 0x9e3779b97f4a7c15ULL;
      x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
      x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
      h = x ^ (x >> 31);
    }
    return static_cast<std::size_t>(h);
  }
};

// Instrumentation: probes are reads of stored entries or buckets, touches are writes.
struct Counters {
  std::uint64_t probes = 0;
  std::uint64_t touches = 0;
  void reset() { probes = touches = 0; }
};

inline Counters& counters() {
  static thread_local Counters c;
  return c;
}

inline Tuple project(const Tuple& t, const std::vector<int>& cols) {
  Tuple k;
  k.reserve(cols.size());
  for (int c : cols) k.push_back(t[c]);
  return k;
}

// Group-valued hash relation. Entries live in a slot array, chained in a global list and in
// one doubly linked list per registered index; every index bucket keeps its entry count and
// the aggregate of marginal(payload) over its entries.
template <class P>
class Relation {
 public:
  using Traits = PayloadTraits<P>;
  static constexpr std::uint32_t npos = std::numeric_limits<std::uint32_t>::max();

  struct Bucket {
    std::uint32_t head = npos;
    std::uint32_t tail = npos;
    std::size_t count = 0;
    P aggregate = Traits::zero();
  };

  explicit Relation(std::size_t arity = 0) : arity_(arity) {}

  Relation(const Relation& o) : arity_(o.arity_) {
    for (const auto& ix : o.indexes_) add_index(ix.cols);
    for (auto s = o.first(); s != npos; s = o.next(s)) insert_new(o.tuple(s), o.payload(s));
  }
  Relation& operator=(const Relation& o) {
    if (this != &o) {
      Relation tmp(o);
      *this = std::move(tmp);
    }
    return *this;
  }
  Relation(Relation&&) noexcept = default;
  Relation& operator=(Relation&&) noexcept = default;

  std::size_t arity() const { return arity_; }
  std::size_t size() const { return primary_.size(); }
  bool empty() const { return primary_.empty(); }

  // Registers an index on the given columns (order of `cols` defines the key layout).
  int add_index(std::vector<int> cols) {
    for (int c : cols)
      if (c < 0 || static_cast<std::size_t>(c) >= arity_)
        throw std::out_of_range("index column out of range");
    if (int id = find_index(cols); id >= 0) return id;
    indexes_.push_back(Index{cols, {}});
    int id = static_cast<int>(indexes_.size()) - 1;
    for (auto s = first(); s != npos; s = next(s)) {
      slots_[s].links.push_back(Link{});
      link(id, s);
    }
    return id;
  }
  int find_index(const std::vector<int>& cols) const {
    for (std::size_t i = 0; i < indexes_.size(); ++i)
      if (indexes_[i].cols == cols) return static_cast<int>(i);
    return -1;
  }
  const std::vector<int>& index_cols(int id) const { return indexes_[id].cols; }
  int num_indexes() const { return static_cast<int>(indexes_.size()); }

  const P* find(const Tuple& t) const {
    ++counters().probes;
    auto it = primary_.find(t);
    return it == primary_.end() ? nullptr : &slots_[it->second].payload;
  }
  P get(const Tuple& t) const {
    const P* p = find(t);
    return p ? *p : Traits::zero();
  }
  bool contains(const Tuple& t) const { return find(t) != nullptr; }

  // payload <- payload + delta; returns (old, new)
  std::pair<P, P> upsert(const Tuple& t, const P& delta) {
    check_arity(t);
    ++counters().touches;
    auto it = primary_.find(t);
    if (it == primary_.end()) {
      if (!Traits::is_zero(delta)) insert_new(t, delta);
      return {Traits::zero(), delta};
    }
    std::uint32_t s = it->second;
    P old = slots_[s].payload;
    P now = Traits::add(old, delta);
    write(s, old, now);
    return {old, now};
  }

  // payload <- value; returns old
  P assign(const Tuple& t, const P& value) {
    check_arity(t);
    ++counters().touches;
    auto it = primary_.find(t);
    if (it == primary_.end()) {
      if (!Traits::is_zero(value)) insert_new(t, value);
      return Traits::zero();
    }
    std::uint32_t s = it->second;
    P old = slots_[s].payload;
    write(s, old, value);
    return old;
  }

  void clear() {
    slots_.clear();
    free_.clear();
    primary_.clear();
    for (auto& ix : indexes_) ix.buckets.clear();
    head_ = tail_ = npos;
  }

  // global iteration
  std::uint32_t first() const { return head_; }
  std::uint32_t next(std::uint32_t s) const { return slots_[s].next; }
  const Tuple& tuple(std::uint32_t s) const { return slots_[s].tuple; }
  const P& payload(std::uint32_t s) const { return slots_[s].payload; }

  // index access
  const Bucket* bucket(int index, const Tuple& key) const {
    ++counters().probes;
    const auto& b = indexes_[index].buckets;
    auto it = b.find(key);
    return it == b.end() ? nullptr : &it->second;
  }
  std::size_t count(int index, const Tuple& key) const {
    const Bucket* b = bucket(index, key);
    return b ? b->count : 0;
  }
  std::uint32_t next_in(int index, std::uint32_t s) const { return slots_[s].links[index].next; }

  template <class F>
  void for_each_bucket(int index, F&& f) const {
    for (const auto& [k, b] : indexes_[index].buckets) {
      ++counters().probes;
      f(k, b);
    }
  }
  std::size_t num_buckets(int index) const { return indexes_[index].buckets.size(); }

  template <class F>
  void for_each(F&& f) const {
    for (auto s = first(); s != npos; s = next(s)) f(slots_[s].tuple, slots_[s].payload);
  }

  friend bool operator==(const Relation& a, const Relation& b) {
    if (a.size() != b.size()) return false;
    for (auto s = a.first(); s != npos; s = a.next(s)) {
      auto it = b.primary_.find(a.tuple(s));
      if (it == b.primary_.end() || !(b.slots_[it->second].payload == a.payload(s))) return false;
    }
    return true;
  }

 private:
  struct Link {
    std::uint32_t prev = npos;
    std::uint32_t next = npos;
    Bucket* bucket = nullptr;
  };
  struct Entry {
    Tuple tuple;
    P payload = Traits::zero();
    std::uint32_t prev = npos;
    std::uint32_t next = npos;
    std::vector<Link> links;
  };
  struct Index {
    std::vector<int> cols;
    std::unordered_map<Tuple, Bucket, TupleHash> buckets;
  };

  void check_arity(const Tuple& t) const {
    if (t.size() != arity_)
      throw std::invalid_argument("arity mismatch: expected " + std::to_string(arity_) +
                                  " values, got " + std::to_string(t.size()));
  }

  void insert_new(const Tuple& t, const P& value) {
    std::uint32_t s;
    if (!free_.empty()) {
      s = free_.back();
      free_.pop_back();
    } else {
      s = static_cast<std::uint32_t>(slots_.size());
      slots_.emplace_back();
    }
    Entry& e = slots_[s];
    e.tuple = t;
    e.payload = value;
    e.links.assign(indexes_.size(), Link{});
    e.prev = tail_;
    e.next = npos;
    if (tail_ != npos) slots_[tail_].next = s;
    else head_ = s;
    tail_ = s;
    primary_.emplace(t, s);
    for (std::size_t i = 0; i < indexes_.size(); ++i) link(static_cast<int>(i), s);
  }

  void link(int index, std::uint32_t s) {
    Entry& e = slots_[s];
    Bucket& b = indexes_[index].buckets[project(e.tuple, indexes_[index].cols)];
    Link& l = e.links[index];
    l.bucket = &b;
    l.prev = b.tail;
    l.next = npos;
    if (b.tail != npos) slots_[b.tail].links[index].next = s;
    else b.head = s;
    b.tail = s;
    ++b.count;
    b.aggregate = Traits::add(b.aggregate, Traits::marginal(e.payload));
  }

  void unlink(int index, std::uint32_t s) {
    Entry& e = slots_[s];
    Link& l = e.links[index];
    Bucket& b = *l.bucket;
    if (l.prev != npos) slots_[l.prev].links[index].next = l.next;
    else b.head = l.next;
    if (l.next != npos) slots_[l.next].links[index].prev = l.prev;
    else b.tail = l.prev;
    --b.count;
    if (b.count == 0) indexes_[index].buckets.erase(project(e.tuple, indexes_[index].cols));
    else b.aggregate = Traits::add(b.aggregate, Traits::neg(Traits::marginal(e.payload)));
  }

  void write(std::uint32_t s, const P& old, const P& now) {
    Entry& e = slots_[s];
    if (Traits::is_zero(now)) {
      for (std::size_t i = 0; i < indexes_.size(); ++i) unlink(static_cast<int>(i), s);
      if (e.prev != npos) slots_[e.prev].next = e.next;
      else head_ = e.next;
      if (e.next != npos) slots_[e.next].prev = e.prev;
      else tail_ = e.prev;
      primary_.erase(e.tuple);
      e.tuple.clear();
      e.links.clear();
      free_.push_back(s);
      return;
    }
    e.payload = now;
    for (auto& l : e.links)
      l.bucket->aggregate = Traits::add(
          l.bucket->aggregate,
          Traits::add(Traits::marginal(now), Traits::neg(Traits::marginal(old))));
  }

  std::size_t arity_;
  std::vector<Entry> slots_;
  std::vector<std::uint32_t> free_;
  std::unordered_map<Tuple, std::uint32_t, TupleHash> primary_;
  std::vector<Index> indexes_;
  std::uint32_t head_ = npos;
  std::uint32_t tail_ = npos;
};

}  // namespace cqap
