#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "cqap/view_engine.hpp"

namespace cqap {

// A restartable stream of distinct tuples over a fixed schema, with a membership probe.
class OutputSource {
 public:
  virtual ~OutputSource() = default;
  virtual bool next(Tuple& out) = 0;
  virtual bool contains(const Tuple& t) const = 0;
  virtual void rewind() = 0;
};

using SourcePtr = std::unique_ptr<OutputSource>;

// Enumerates one view tree: `fixed` variables are checked against their views, the variables
// in `out` are iterated in preorder as an odometer over index buckets. A check below an
// iterated variable rejects the current prefix and moves the odometer on.
template <class P>
class TreeIterator : public OutputSource {
 public:
  TreeIterator(const ViewEngine<P>& eng, int t, std::vector<VarId> out, VarSet fixed,
               std::vector<Value> val)
      : eng_(eng), t_(t), out_(std::move(out)), fixed_(fixed), val_(std::move(val)),
        epoch_(eng.epoch()) {
    const ViewTree& tr = eng_.tree(t_);
    VarSet outs = Query::to_set(out_);
    if ((outs & ~tr.vars) != 0) throw std::logic_error("output variable outside the tree");
    for (VarId x : tr.var_order) {
      bool check = has(fixed, x);
      if (!check && !has(outs, x)) continue;
      int n = tr.var_view[x];
      VarSet dep = tr.nodes[n].vars() & ~bit(x);
      if ((dep & ~(fixed | outs)) != 0)
        throw std::logic_error("free variable below a bound one");
      levels_.push_back(Level{x, n, check ? -1 : eng_.index(t_, n, dep), dep, check,
                              Relation<P>::npos});
    }
    boolean_ = levels_.empty();
    rewind();
  }

  void rewind() override {
    started_ = false;
    done_ = false;
  }

  bool next(Tuple& out) override {
    if (eng_.epoch() != epoch_) throw StaleIterator();
    if (done_) return false;
    bool ok;
    if (!started_) {
      started_ = true;
      ok = boolean_ ? !eng_.rel(t_, eng_.tree(t_).root).empty() : seek(0);
    } else {
      ok = !boolean_ && seek(backtrack(levels_.size()));
    }
    if (!ok) {
      done_ = true;
      return false;
    }
    out.clear();
    for (VarId v : out_) out.push_back(val_[v]);
    return true;
  }

  bool contains(const Tuple& t) const override {
    if (boolean_) return !eng_.rel(t_, eng_.tree(t_).root).empty();
    std::vector<Value> v = val_;
    for (std::size_t i = 0; i < out_.size(); ++i) {
      if (has(fixed_, out_[i]) && t[i] != val_[out_[i]]) return false;
      v[out_[i]] = t[i];
    }
    for (const auto& l : levels_) {
      const ViewNode& n = eng_.tree(t_).nodes[l.node];
      if (!eng_.rel(t_, l.node).contains(eng_.key(t_, l.node, n.vars(), v))) return false;
    }
    return true;
  }

 private:
  static constexpr std::size_t kExhausted = static_cast<std::size_t>(-1);

  struct Level {
    VarId var;
    int node;
    int index;
    VarSet dep;
    bool check;
    std::uint32_t cur;
  };

  void load(Level& l) {
    const ViewNode& n = eng_.tree(t_).nodes[l.node];
    val_[l.var] = eng_.rel(t_, l.node).tuple(l.cur)[n.col(l.var)];
  }

  // advances the deepest iterated level above `pos`; returns the level to continue from
  std::size_t backtrack(std::size_t pos) {
    while (pos-- > 0) {
      Level& l = levels_[pos];
      if (l.check) continue;
      ++counters().probes;
      l.cur = eng_.rel(t_, l.node).next_in(l.index, l.cur);
      if (l.cur != Relation<P>::npos) {
        load(l);
        return pos + 1;
      }
    }
    return kExhausted;
  }

  // positions levels pos.. at their first consistent entries
  bool seek(std::size_t pos) {
    while (pos != kExhausted && pos < levels_.size()) {
      Level& l = levels_[pos];
      const auto& r = eng_.rel(t_, l.node);
      const ViewNode& n = eng_.tree(t_).nodes[l.node];
      if (l.check) {
        if (r.contains(eng_.key(t_, l.node, n.vars(), val_))) ++pos;
        else pos = backtrack(pos);
        continue;
      }
      const auto* b = r.bucket(l.index, eng_.key(t_, l.node, l.dep, val_));
      if (!b) {
        pos = backtrack(pos);
        continue;
      }
      l.cur = b->head;
      load(l);
      ++pos;
    }
    return pos != kExhausted;
  }

  const ViewEngine<P>& eng_;
  int t_;
  std::vector<VarId> out_;
  VarSet fixed_;
  std::vector<Value> val_;
  std::uint64_t epoch_;
  std::vector<Level> levels_;
  bool boolean_ = false;
  bool started_ = false;
  bool done_ = false;
};

// Cartesian product in odometer order; `slots[i][j]` is the output column of the j-th
// value produced by source i.
class ProductNest : public OutputSource {
 public:
  ProductNest(std::vector<SourcePtr> parts, std::vector<std::vector<int>> slots, std::size_t arity)
      : parts_(std::move(parts)), slots_(std::move(slots)), arity_(arity) {
    cur_.resize(parts_.size());
    rewind();
  }

  void rewind() override {
    for (auto& p : parts_) p->rewind();
    started_ = false;
    done_ = false;
  }

  bool next(Tuple& out) override {
    if (done_) return false;
    if (!started_) {
      started_ = true;
      for (std::size_t i = 0; i < parts_.size(); ++i)
        if (!parts_[i]->next(cur_[i])) {
          done_ = true;
          return false;
        }
    } else {
      std::size_t i = parts_.size();
      for (;;) {
        if (i == 0) {
          done_ = true;
          return false;
        }
        --i;
        if (parts_[i]->next(cur_[i])) break;
        parts_[i]->rewind();
        parts_[i]->next(cur_[i]);
      }
    }
    out.assign(arity_, 0);
    for (std::size_t i = 0; i < parts_.size(); ++i)
      for (std::size_t j = 0; j < slots_[i].size(); ++j) out[slots_[i][j]] = cur_[i][j];
    return true;
  }

  bool contains(const Tuple& t) const override {
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      Tuple sub;
      for (int s : slots_[i]) sub.push_back(t[s]);
      if (!parts_[i]->contains(sub)) return false;
    }
    return true;
  }

 private:
  std::vector<SourcePtr> parts_;
  std::vector<std::vector<int>> slots_;
  std::size_t arity_;
  std::vector<Tuple> cur_;
  bool started_ = false;
  bool done_ = false;
};

// Distinct union of two sources where `first` wins ties: every tuple of `second` that
// `first` also produces is swapped for the next tuple of `first`, then `first` is drained.
class Union2 : public OutputSource {
 public:
  Union2(SourcePtr first, SourcePtr second) : a_(std::move(first)), b_(std::move(second)) {}

  void rewind() override {
    a_->rewind();
    b_->rewind();
    b_done_ = false;
  }

  bool next(Tuple& out) override {
    if (!b_done_) {
      if (b_->next(out)) {
        if (!a_->contains(out)) return true;
        if (a_->next(out)) return true;
        throw std::logic_error("union source yielded a duplicate");
      }
      b_done_ = true;
    }
    return a_->next(out);
  }

  bool contains(const Tuple& t) const override { return a_->contains(t) || b_->contains(t); }

 private:
  SourcePtr a_, b_;
  bool b_done_ = false;
};

class EmptySource : public OutputSource {
 public:
  bool next(Tuple&) override { return false; }
  bool contains(const Tuple&) const override { return false; }
  void rewind() override {}
};

// Nested binary unions; the lowest-index source emits each shared tuple.
inline SourcePtr union_distinct(std::vector<SourcePtr> sources) {
  if (sources.empty()) return std::make_unique<EmptySource>();
  SourcePtr acc = std::move(sources.back());
  for (std::size_t i = sources.size() - 1; i-- > 0;)
    acc = std::make_unique<Union2>(std::move(sources[i]), std::move(acc));
  return acc;
}

inline std::vector<Tuple> drain(OutputSource& s, std::size_t limit = SIZE_MAX) {
  std::vector<Tuple> out;
  Tuple t;
  while (out.size() < limit && s.next(t)) out.push_back(t);
  return out;
}

}  // namespace cqap
