#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "cqap/adaptive.hpp"
#include "cqap/engine.hpp"
#include "cqap/generate.hpp"
#include "cqap/io.hpp"
#include "cqap/naive.hpp"
#include "cqap/planner.hpp"
#include "cqap/prob.hpp"
#include "cqap/view_tree.hpp"

using namespace cqap;

namespace {

enum Exit { kOk = 0, kMismatch = 1, kInput = 2, kGuard = 3 };

std::string read_query_text(const std::string& arg) {
  if (std::filesystem::is_regular_file(arg)) {
    std::ifstream in(arg);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  if (arg.find('(') != std::string::npos) return arg;
  throw std::invalid_argument("no such query file: " + arg);
}

Query load_query(const std::string& arg) { return parse_query(read_query_text(arg)); }

void print_tree(std::ostream& os, const Query& q, const ViewTree& t, int n, int depth) {
  const ViewNode& v = t.nodes[n];
  os << std::string(2 * depth + 2, ' ') << node_label(q, v) << (v.alias ? "  [alias]" : "") << "\n";
  if (v.alias) return;
  for (int c : v.children) print_tree(os, q, t, c, depth + 1);
}

int cmd_classify(const std::string& path) {
  Query q = load_query(path);
  FractureMap fm = fracture(q);
  const Query& f = fm.fracture;
  std::cout << "query:      " << q.to_string() << "\n";
  std::cout << "fracture:   " << f.to_string() << "\n";
  std::cout << "components: " << fm.num_components << "\n";
  for (int c = 0; c < fm.num_components; ++c) {
    std::cout << "  " << c + 1 << ":";
    for (int a : fm.component_atoms(c)) {
      std::cout << " " << f.atoms[a].relation << "(";
      for (std::size_t j = 0; j < f.atoms[a].vars.size(); ++j)
        std::cout << (j ? "," : "") << f.var_names[f.atoms[a].vars[j]];
      std::cout << ")";
    }
    std::cout << "\n";
  }
  StructuralFlags s = structural_tests(f);
  auto yn = [](bool b) { return b ? "yes" : "no"; };
  std::cout << "hierarchical:          " << yn(s.hierarchical) << "\n"
            << "free-dominant:         " << yn(s.free_dominant) << "\n"
            << "input-dominant:        " << yn(s.input_dominant) << "\n"
            << "almost free-dominant:  " << yn(s.almost_free_dominant) << "\n"
            << "almost input-dominant: " << yn(s.almost_input_dominant) << "\n";
  std::cout << "class: " << to_string(classify_fractured(f)) << "\n";
  return kOk;
}

int cmd_widths(const std::string& path) {
  Query q = load_query(path);
  Plan p = query_plan(q);
  std::cout << "delta=" << to_string(p.widths.dynamic) << " w=" << to_string(p.widths.static_) << "\n";
  std::cout << "vo: " << p.vo.to_string(fracture(q).fracture) << "\n";
  return kOk;
}

int cmd_plan(const std::string& path, const std::string& mode, bool dot) {
  Query q = load_query(path);
  FractureMap fm = fracture(q);
  const Query& f = fm.fracture;
  VariableOrder vo;
  if (mode == "adaptive") {
    for (const auto& group : omega_strategies(f))
      for (const auto& s : group) {
        int base = static_cast<int>(vo.nodes.size());
        for (auto n : s.nodes) {
          if (n.parent >= 0) n.parent += base;
          for (int& c : n.children) c += base;
          vo.nodes.push_back(n);
        }
        for (int r : s.roots) vo.roots.push_back(r + base);
      }
  } else {
    vo = query_plan(q).vo;
  }
  auto trees = build_view_trees(f, vo);
  if (dot) {
    std::cout << to_dot(f, vo, trees);
    return kOk;
  }
  std::cout << "fracture: " << f.to_string() << "\n";
  if (mode != "adaptive") {
    Widths w = vo_widths(f, vo);
    std::cout << "delta=" << to_string(w.dynamic) << " w=" << to_string(w.static_) << "\n";
  }
  for (std::size_t i = 0; i < vo.roots.size(); ++i) {
    VariableOrder one;
    std::function<void(int, int)> copy = [&](int id, int parent) {
      int nid = one.add(vo.nodes[id], parent);
      for (int c : vo.nodes[id].children) copy(c, nid);
    };
    copy(vo.roots[i], -1);
    std::cout << "vo " << i + 1 << ": " << one.to_string(f) << "\n";
    print_tree(std::cout, f, trees[i], trees[i].root, 0);
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// run

class Session {
 public:
  Session(Query q, const std::string& mode, double eps, const std::vector<DataRow>& rows)
      : q_(std::move(q)), mode_(mode) {
    if (mode == "plain") {
      plain_ = std::make_unique<Engine<std::int64_t>>(q_, to_database(q_, rows));
    } else if (mode == "adaptive") {
      adaptive_ = std::make_unique<AdaptiveEngine<std::int64_t>>(q_, to_database(q_, rows), eps);
    } else if (mode == "prob") {
      prob_ = std::make_unique<ProbEngine>(q_, to_prob_database(q_, rows));
    } else {
      throw std::invalid_argument("unknown mode '" + mode + "'");
    }
  }

  bool prob() const { return prob_ != nullptr; }

  void update(const std::string& rel, const Tuple& t, const std::variant<std::int64_t, PProb>& c) {
    if (prob_) {
      if (std::holds_alternative<PProb>(c)) {
        prob_->update(rel, t, ProbUpdate::uncertain(std::get<PProb>(c)));
      } else {
        std::int64_t m = std::get<std::int64_t>(c);
        if (prob_->db().certain.at(rel).get(t) + m < 0)
          throw std::invalid_argument("certain multiplicity would become negative");
        prob_->update(rel, t, ProbUpdate::certain(m));
      }
      return;
    }
    if (!std::holds_alternative<std::int64_t>(c))
      throw std::invalid_argument("probability updates need --mode prob");
    std::int64_t m = std::get<std::int64_t>(c);
    if (db().find(rel)->get(t) + m < 0)
      throw std::invalid_argument("multiplicity would become negative");
    if (plain_) plain_->update(rel, t, m);
    else adaptive_->update(rel, t, m);
  }

  SourcePtr open(const Tuple& in) {
    if (plain_) return plain_->open(in);
    if (adaptive_) return adaptive_->open(in);
    return prob_->open(in);
  }

  ProbValue prob_of(const Tuple& in, const Tuple& out) const { return prob_->prob_of(in, out); }
  const ProbDatabase& prob_db() const { return prob_->db(); }

  const Database<std::int64_t>& db() const {
    return plain_ ? plain_->db() : adaptive_->db();
  }

 private:
  Query q_;
  std::string mode_;
  std::unique_ptr<Engine<std::int64_t>> plain_;
  std::unique_ptr<AdaptiveEngine<std::int64_t>> adaptive_;
  std::unique_ptr<ProbEngine> prob_;
};

int cmd_run(const std::string& qpath, const std::string& data, const std::vector<std::string>& scripts,
            const std::string& mode, double eps, bool oracle) {
  Query q = load_query(qpath);
  std::map<std::string, std::size_t> arity;
  for (const auto& a : q.atoms) arity[a.relation] = a.vars.size();
  Dictionary dict;
  std::vector<DataRow> rows;
  if (!data.empty()) {
    if (!std::filesystem::is_directory(data)) throw InputError(data, 0, "not a directory");
    rows = load_data_dir(data, q, dict);
  }
  Session s(q, mode, eps, rows);

  std::vector<ScriptLine> lines;
  std::vector<std::string> where;
  auto take = [&](std::istream& in, const std::string& name) {
    for (auto& l : parse_script(in, name)) {
      lines.push_back(std::move(l));
      where.push_back(name);
    }
  };
  if (scripts.empty()) take(std::cin, "<stdin>");
  for (const auto& p : scripts) {
    if (p == "-") {
      take(std::cin, "<stdin>");
      continue;
    }
    std::ifstream in(p);
    if (!in) throw InputError(p, 0, "cannot open");
    take(in, p);
  }

  int mismatches = 0, reqid = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const ScriptLine& sl = lines[i];
    if (const auto* u = std::get_if<UpdateLine>(&sl.item)) {
      auto it = arity.find(u->relation);
      if (it == arity.end()) throw InputError(where[i], sl.line, "unknown relation " + u->relation);
      if (u->values.size() != it->second)
        throw InputError(where[i], sl.line, "arity mismatch for " + u->relation);
      Tuple t;
      for (const auto& v : u->values) t.push_back(dict.intern(v));
      try {
        s.update(u->relation, t, u->change);
      } catch (const std::invalid_argument& e) {
        throw InputError(where[i], sl.line, e.what());
      }
      continue;
    }
    const auto& r = std::get<RequestLine>(sl.item);
    ++reqid;
    Tuple in(q.inputs.size());
    std::vector<bool> seen(q.inputs.size(), false);
    for (const auto& [var, val] : r.bindings) {
      std::size_t k = 0;
      while (k < q.inputs.size() && q.var_names[q.inputs[k]] != var) ++k;
      if (k == q.inputs.size()) throw InputError(where[i], sl.line, var + " is not an input variable");
      if (seen[k]) throw InputError(where[i], sl.line, var + " bound twice");
      seen[k] = true;
      in[k] = dict.intern(val);
    }
    for (std::size_t k = 0; k < seen.size(); ++k)
      if (!seen[k]) throw InputError(where[i], sl.line, "missing binding for " + q.var_names[q.inputs[k]]);

    auto src = s.open(in);
    auto got = drain(*src, r.limit.value_or(SIZE_MAX));
    std::map<Tuple, std::string> probs;
    for (const auto& t : got) {
      std::cout << reqid;
      for (Value v : t) std::cout << "\t" << dict.name(v);
      if (s.prob()) {
        std::string p = s.prob_of(in, t).to_string();
        probs[t] = p;
        std::cout << "\t@" << p;
      }
      std::cout << "\n";
    }
    if (!oracle) continue;
    std::set<Tuple> gs(got.begin(), got.end());
    bool ok = gs.size() == got.size();
    if (s.prob()) {
      std::map<Tuple, Rational> want;
      try {
        want = possible_worlds(q, s.prob_db(), in);
      } catch (const std::exception& e) {
        std::cerr << "request " << reqid << ": oracle skipped (" << e.what() << ")\n";
        continue;
      }
      if (r.limit) ok = ok && gs.size() == std::min(*r.limit, want.size());
      else ok = ok && gs.size() == want.size();
      for (const auto& t : got) {
        auto w = want.find(t);
        ProbValue v = s.prob_of(in, t);
        if (w == want.end() || v.is_negative() || v.magnitude() != w->second) ok = false;
      }
    } else {
      std::set<Tuple> want = naive_answer(q, s.db(), in);
      if (r.limit) {
        ok = ok && gs.size() == std::min(*r.limit, want.size());
        for (const auto& t : gs) ok = ok && want.count(t);
      } else {
        ok = ok && gs == want;
      }
    }
    if (!ok) {
      ++mismatches;
      std::cerr << where[i] << ":" << sl.line << ": request " << reqid << " differs from the oracle\n";
    }
  }
  if (mismatches) {
    std::cerr << mismatches << " request(s) differ from the oracle\n";
    return kMismatch;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchRow {
  std::string mode;
  std::size_t n;
  std::string eps;
  double preprocess_ms, update_us, delay_us, probes_per_op;
};

using Clock = std::chrono::steady_clock;
double us_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

template <class Build, class Update, class Open>
BenchRow measure(const std::string& mode, const std::string& eps, std::size_t n, Build build,
                 Update update, Open open, const std::vector<std::pair<std::string, Tuple>>& ups,
                 const std::vector<std::int64_t>& mults, const std::vector<Tuple>& reqs) {
  BenchRow row{mode, n, eps, 0, 0, 0, 0};
  auto t0 = Clock::now();
  build();
  row.preprocess_ms = us_since(t0) / 1000.0;
  counters().reset();
  t0 = Clock::now();
  for (std::size_t i = 0; i < ups.size(); ++i) update(ups[i].first, ups[i].second, mults[i]);
  double upd = us_since(t0);
  std::uint64_t probes = counters().probes;
  std::size_t yields = 0;
  t0 = Clock::now();
  for (const auto& r : reqs) {
    auto src = open(r);
    Tuple t;
    while (src->next(t)) ++yields;
  }
  double enm = us_since(t0);
  probes = counters().probes;
  if (!ups.empty() && upd <= 0) std::cerr << "warning: update timings below clock resolution\n";
  row.update_us = ups.empty() ? 0 : upd / static_cast<double>(ups.size());
  row.delay_us = yields ? enm / static_cast<double>(yields) : 0;
  row.probes_per_op = static_cast<double>(probes) / static_cast<double>(std::max<std::size_t>(1, ups.size() + yields));
  return row;
}

class SetSource : public OutputSource {
 public:
  explicit SetSource(std::set<Tuple> s) : s_(std::move(s)), it_(s_.begin()) {}
  bool next(Tuple& out) override {
    if (it_ == s_.end()) return false;
    out = *it_++;
    return true;
  }
  bool contains(const Tuple& t) const override { return s_.count(t) > 0; }
  void rewind() override { it_ = s_.begin(); }

 private:
  std::set<Tuple> s_;
  std::set<Tuple>::iterator it_;
};

int cmd_bench(const std::string& qpath, const std::string& gen, double zipf_s,
              const std::vector<std::size_t>& sizes, const std::vector<std::string>& eps_list,
              std::size_t n_updates, std::size_t n_requests, std::uint64_t seed, bool lazy) {
  Query q = load_query(qpath);
  bool hier = is_hierarchical(fracture(q).fracture);
  std::cout << "mode,N,eps,preprocess_ms,avg_update_us,avg_delay_us,probes_per_op\n";
  for (std::size_t n : sizes) {
    std::mt19937_64 rng(seed ^ n);
    Generator g;
    g.kind = Generator::parse_kind(gen);
    g.s = zipf_s;
    g.domain = std::max<std::size_t>(2, static_cast<std::size_t>(std::sqrt(static_cast<double>(n))));
    g.prepare();
    Database<std::int64_t> db = generate_database(q, n, g, rng);
    // inserts of fresh tuples alternating with deletes of earlier inserts
    std::vector<std::pair<std::string, Tuple>> ups;
    std::vector<std::int64_t> mults;
    std::vector<std::pair<std::string, Tuple>> live;
    Database<std::int64_t> shadow = db;
    for (std::size_t i = 0; i < n_updates; ++i) {
      if (i % 2 == 1 && !live.empty()) {
        std::size_t k = std::uniform_int_distribution<std::size_t>(0, live.size() - 1)(rng);
        ups.push_back(live[k]);
        mults.push_back(-1);
        shadow.rels.at(live[k].first).upsert(live[k].second, -1);
        live.erase(live.begin() + static_cast<std::ptrdiff_t>(k));
        continue;
      }
      const Atom& a = q.atoms[std::uniform_int_distribution<std::size_t>(0, q.atoms.size() - 1)(rng)];
      Tuple t = g.tuple(a.vars.size(), rng);
      ups.emplace_back(a.relation, t);
      mults.push_back(1);
      shadow.rels.at(a.relation).upsert(t, 1);
      live.emplace_back(a.relation, t);
    }
    std::vector<Tuple> reqs;
    for (std::size_t i = 0; i < n_requests; ++i) reqs.push_back(g.tuple(q.inputs.size(), rng));

    std::vector<BenchRow> rows;
    {
      std::unique_ptr<Engine<std::int64_t>> e;
      rows.push_back(measure(
          "plain", "-", n, [&] { e = std::make_unique<Engine<std::int64_t>>(q, db); },
          [&](const std::string& r, const Tuple& t, std::int64_t m) { e->update(r, t, m); },
          [&](const Tuple& in) { return e->open(in); }, ups, mults, reqs));
    }
    if (hier)
      for (const auto& es : eps_list) {
        double eps = to_double(parse_rational(es));
        std::unique_ptr<AdaptiveEngine<std::int64_t>> e;
        rows.push_back(measure(
            "adaptive", es, n,
            [&] { e = std::make_unique<AdaptiveEngine<std::int64_t>>(q, db, eps); },
            [&](const std::string& r, const Tuple& t, std::int64_t m) { e->update(r, t, m); },
            [&](const Tuple& in) { return e->open(in); }, ups, mults, reqs));
      }
    if (lazy) {
      Database<std::int64_t> cur;
      rows.push_back(measure(
          "lazy", "-", n, [&] { cur = db; },
          [&](const std::string& r, const Tuple& t, std::int64_t m) { cur.rels.at(r).upsert(t, m); },
          [&](const Tuple& in) -> SourcePtr { return std::make_unique<SetSource>(naive_answer(q, cur, in)); },
          ups, mults, reqs));
    }
    for (const auto& r : rows)
      std::cout << r.mode << "," << r.n << "," << r.eps << "," << r.preprocess_ms << "," << r.update_us
                << "," << r.delay_us << "," << r.probes_per_op << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic evaluation of conjunctive queries with free access patterns"};
  app.require_subcommand(1);

  std::string query, data, mode = "plain", eps_text = "1/2", gen = "uniform";
  std::vector<std::string> scripts;
  bool oracle = false, dot = false, lazy = false;
  double zipf_s = 1.0;
  std::vector<std::size_t> sizes{1000, 10000};
  std::vector<std::string> eps_list{"0", "1/2", "1"};
  std::size_t n_updates = 1000, n_requests = 100;
  std::uint64_t seed = 1;

  auto* classify_cmd = app.add_subcommand("classify", "Fracture, structural flags and class of a query");
  classify_cmd->add_option("query", query, "Query file (or inline query text)")->required();

  auto* widths_cmd = app.add_subcommand("widths", "Dynamic and static width with a witness VO");
  widths_cmd->add_option("query", query, "Query file (or inline query text)")->required();

  auto* plan_cmd = app.add_subcommand("plan", "Variable orders and view trees");
  plan_cmd->add_option("query", query, "Query file (or inline query text)")->required();
  plan_cmd->add_option("--mode", mode, "plain or adaptive")->check(CLI::IsMember({"plain", "adaptive"}));
  plan_cmd->add_flag("--dot", dot, "Emit Graphviz DOT");

  auto* run_cmd = app.add_subcommand("run", "Replay updates and access requests");
  run_cmd->add_option("query", query, "Query file (or inline query text)")->required();
  run_cmd->add_option("data", data, "Directory with <R>.csv files");
  run_cmd->add_option("scripts", scripts, "Update/request scripts ('-' or none: stdin)");
  run_cmd->add_option("--mode", mode, "plain, adaptive or prob")
      ->check(CLI::IsMember({"plain", "adaptive", "prob"}));
  run_cmd->add_option("--epsilon", eps_text, "Trade-off parameter in [0,1] for adaptive mode");
  run_cmd->add_flag("--oracle", oracle, "Check every request against naive recomputation");
  run_cmd->add_option("--seed", seed, "Unused by run; accepted for uniform invocation");

  auto* bench_cmd = app.add_subcommand("bench", "Synthetic benchmark, CSV on stdout");
  bench_cmd->add_option("query", query, "Query file (or inline query text)")->required();
  bench_cmd->add_option("--gen", gen, "uniform, zipf or onehot")
      ->check(CLI::IsMember({"uniform", "zipf", "onehot"}));
  bench_cmd->add_option("--zipf-s", zipf_s, "Zipf exponent");
  bench_cmd->add_option("--sizes", sizes, "Database sizes")->delimiter(',');
  bench_cmd->add_option("--eps", eps_list, "Epsilon values for adaptive mode")->delimiter(',');
  bench_cmd->add_option("--updates", n_updates, "Updates per size");
  bench_cmd->add_option("--requests", n_requests, "Access requests per size");
  bench_cmd->add_option("--seed", seed, "Random seed");
  bench_cmd->add_flag("--lazy", lazy, "Include the recompute-per-request baseline");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*classify_cmd) return cmd_classify(query);
    if (*widths_cmd) return cmd_widths(query);
    if (*plan_cmd) return cmd_plan(query, mode, dot);
    if (*run_cmd) {
      double eps = to_double(parse_rational(eps_text));
      return cmd_run(query, data, scripts, mode, eps, oracle);
    }
    if (*bench_cmd) return cmd_bench(query, gen, zipf_s, sizes, eps_list, n_updates, n_requests, seed, lazy);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kInput;
  } catch (const SearchLimitError& e) {
    std::cerr << "search guard: " << e.what() << " (raise CQAP_VO_LIMIT to override)\n";
    return kGuard;
  } catch (const std::length_error& e) {
    std::cerr << "resource guard: " << e.what() << "\n";
    return kGuard;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  }
  return kOk;
}
