#pragma once

// Bounded falsification of necessity specifications: enumerate adversary
// programs over a fixed action alphabet, drive the external-states semantics,
// and search for violations of the OnlyIfNext / OnlyIf / OnlyThrough
// operators, with delta-debugging minimization of counterexamples.

#include <algorithm>
#include <functional>
#include <unordered_set>

#include "confine.hpp"
#include "external.hpp"

namespace nec {

struct ExplorationBound {
  int max_main_len = 4;
  int max_objects = 4;
  std::vector<std::int64_t> int_pool = {0, 1, 42};
  int max_internal = kDefaultMaxInternal;
  int max_external_classes = 1;
};

// The one synthesized adversary class: two untyped fields, no methods. It
// gives external code heap storage without granting any internal capability.
inline Module default_adversary_classes() {
  Module m;
  m.name = "Adv";
  ClassDef c;
  c.name = "Adv";
  c.fields.push_back({"f1", "Object"});
  c.fields.push_back({"f2", "Object"});
  m.classes.push_back(c);
  return m;
}

struct Counterexample {
  AdversaryProgram adversary;
  int i = 0, j = 0;  // violating external-state indices (base, endpoint)
  std::map<std::string, Value> valuation;
  std::string description;
};

struct CheckResult {
  enum class Verdict { Falsified, NoCounterexampleWithinBound };
  Verdict verdict = Verdict::NoCounterexampleWithinBound;
  std::optional<Counterexample> counterexample;
  bool divergence_pruned = false;  // BoundTooTight: some branch hit max_internal
  long programs_explored = 0;
  bool falsified() const { return verdict == Verdict::Falsified; }
};

// ---------------------------------------------------------------- canonical states

// Canonical serialization of a state up to heap-address renaming: addresses
// are numbered in discovery order over frames (bottom-up, locals sorted by
// name) and reachable fields (sorted by name).
inline std::string canonical_key(const ProgramState& st) {
  std::map<std::uint32_t, int> canon;
  std::vector<std::uint32_t> queue;
  auto visit = [&](const Value& v) {
    if (v.is_addr() && !canon.count(v.a)) {
      canon[v.a] = static_cast<int>(canon.size());
      queue.push_back(v.a);
    }
  };
  for (const auto& fr : st.stack)
    for (const auto& [x, v] : fr.locals) visit(v);
  for (size_t q = 0; q < queue.size(); ++q) {
    auto it = st.heap.find(queue[q]);
    if (it == st.heap.end()) continue;
    for (const auto& [f, v] : it->second.flds) visit(v);
  }
  auto pv = [&](const Value& v) {
    if (v.is_addr()) return "#" + std::to_string(canon.count(v.a) ? canon.at(v.a) : -1);
    return to_string(v);
  };
  std::ostringstream os;
  for (const auto& fr : st.stack) {
    os << "F[";
    if (fr.hole) os << "hole=" << *fr.hole << ";";
    for (const auto& [x, v] : fr.locals) os << x << "=" << pv(v) << ",";
    os << "|";
    for (const auto& s : fr.code) os << to_string(s);
    os << "]";
  }
  for (std::uint32_t a : queue) {
    auto it = st.heap.find(a);
    if (it == st.heap.end()) continue;
    os << "O" << canon.at(a) << ":" << it->second.cls << "{";
    for (const auto& [f, v] : it->second.flds) os << f << "=" << pv(v) << ",";
    os << "}";
  }
  return os.str();
}

// ---------------------------------------------------------------- leaf checking

// One external-state snapshot along a run, tagged with how many main
// statements had been consumed when it was taken (so the rest of the main can
// be re-attached when the snapshot is checked).
struct ChainEntry {
  ProgramState state;
  size_t stmts_consumed = 0;
  // lazily computed cache of A₁-passing metavariable valuations (valid only
  // when A₁ is continuation-insensitive; see violates_spec)
  mutable std::optional<std::vector<std::map<std::string, Value>>> a1_vals;
};

// Does the assertion's truth depend on the frame continuations? (calls
// directly; access/inside via the stack clause)
inline bool contn_sensitive(const AssnP& a) {
  if (!a) return false;
  switch (a->k) {
    case Assertion::K::Calls:
    case Assertion::K::Access:
    case Assertion::K::Inside: return true;
    default: return contn_sensitive(a->a) || contn_sensitive(a->b);
  }
}

// Snapshot σ_i with the unexecuted suffix of the main restored into the bottom
// (adversary) frame's continuation.
inline ProgramState materialize(const ChainEntry& e, const std::vector<StmtP>& main) {
  ProgramState st = e.state;
  for (size_t t = e.stmts_consumed; t < main.size(); ++t) st.stack.front().code.push_back(main[t]);
  return st;
}

// Candidate values for spec metavariables at a base state: heap addresses,
// integers present in the state or the pool, and null — to be filtered by A₁.
inline std::vector<Value> metavar_candidates(const ProgramState& st,
                                             const std::vector<std::int64_t>& pool) {
  std::vector<Value> out;
  for (const auto& [a, o] : st.heap) { (void)o; out.push_back(Value::addr(a)); }
  std::set<std::int64_t> ints(pool.begin(), pool.end());
  for (const auto& [a, o] : st.heap) {
    (void)a;
    for (const auto& [f, v] : o.flds)
      if (v.is_int()) ints.insert(v.i);
  }
  for (const auto& fr : st.stack)
    for (const auto& [x, v] : fr.locals)
      if (v.is_int()) ints.insert(v.i);
  for (auto i : ints) out.push_back(Value::integer(i));
  out.push_back(Value::null());
  return out;
}

inline void bind_valuation(ProgramState& st, const std::map<std::string, Value>& val) {
  for (const auto& [x, v] : val) st.top().locals[x] = v;
}

// Check one concrete adversary program against a spec; fills `ce` on
// violation. The chain holds every external state of the run. When
// `new_pairs_only` is set, only pairs whose endpoint j lies in the final
// statement's segment are examined — pairs wholly inside a proper prefix were
// already covered when that prefix was enumerated at a shorter length (the
// iterative-deepening invariant).
inline bool violates_spec(const SatContext& cx, const NecessitySpec& spec,
                          const std::vector<ChainEntry>& chain, const std::vector<StmtP>& main,
                          const ExplorationBound& bound, Counterexample* ce,
                          bool new_pairs_only = false) {
  const size_t n = chain.size();
  std::set<std::string> mvset = free_vars(spec.a3);
  if (spec.k != NecessitySpec::K::Plain) {
    auto f1 = free_vars(spec.a1);
    auto f2 = free_vars(spec.a2);
    mvset.insert(f1.begin(), f1.end());
    mvset.insert(f2.begin(), f2.end());
  }
  std::vector<std::string> metavars(mvset.begin(), mvset.end());

  size_t seg_lo = 0;  // first index eligible as an endpoint j
  if (new_pairs_only)
    while (seg_lo < n && chain[seg_lo].stmts_consumed < main.size()) ++seg_lo;

  if (spec.k == NecessitySpec::K::Plain) {
    // closed invariant: must hold at every arising state
    for (size_t i = seg_lo; i < n; ++i) {
      ProgramState si = materialize(chain[i], main);
      if (!satisfies(cx, si, spec.a3)) {
        if (ce) {
          ce->i = ce->j = static_cast<int>(i);
          ce->description = "assertion fails at arising state " + std::to_string(i);
        }
        return true;
      }
    }
    return false;
  }

  const bool a1_cacheable = !contn_sensitive(spec.a1);

  for (size_t i = 0; i < n; ++i) {
    // valuations of the metavariables with σ_i ⊨ A₁; cached on the chain entry
    // across leaves sharing the prefix when A₁ ignores continuations
    const std::vector<std::map<std::string, Value>>* vals = nullptr;
    std::vector<std::map<std::string, Value>> local_vals;
    auto compute_vals = [&](const ProgramState& si) {
      std::vector<std::map<std::string, Value>> out;
      std::vector<Value> cands = metavar_candidates(si, bound.int_pool);
      std::map<std::string, Value> cur;
      ProgramState scratch = si;
      std::function<void(size_t)> rec = [&](size_t idx) {
        if (idx == metavars.size()) {
          bind_valuation(scratch, cur);
          if (satisfies(cx, scratch, spec.a1)) out.push_back(cur);
          return;
        }
        for (const Value& v : cands) {
          cur[metavars[idx]] = v;
          rec(idx + 1);
        }
      };
      rec(0);
      return out;
    };
    if (a1_cacheable) {
      if (!chain[i].a1_vals) chain[i].a1_vals = compute_vals(chain[i].state);
      vals = &*chain[i].a1_vals;
    } else {
      local_vals = compute_vals(materialize(chain[i], main));
      vals = &local_vals;
    }
    if (vals->empty()) continue;

    size_t j_lo = std::max(i, seg_lo), j_hi = n - 1;
    if (spec.k == NecessitySpec::K::OnlyIfNext) {
      if (i + 1 >= n || i + 1 < seg_lo) continue;
      j_lo = j_hi = i + 1;
    }
    if (j_lo > j_hi) continue;

    // materialized σ_i and adapted views σ_k ◁ σ_i, built on demand
    std::optional<ProgramState> si_mat;
    auto base = [&]() -> ProgramState& {
      if (!si_mat) si_mat = materialize(chain[i], main);
      return *si_mat;
    };
    std::vector<std::optional<ProgramState>> adapted(n);
    auto view = [&](size_t k) -> ProgramState& {
      if (!adapted[k]) adapted[k] = adapt(materialize(chain[k], main), base()).state;
      return *adapted[k];
    };
    // base condition σ_i ⊨ ¬A per valuation, on demand (OnlyIf / OnlyIfNext)
    std::vector<char> base_not_a(vals->size(), -1);
    auto base_ok = [&](size_t vi) {
      if (base_not_a[vi] < 0) {
        ProgramState s2 = base();
        bind_valuation(s2, (*vals)[vi]);
        base_not_a[vi] = satisfies(cx, s2, spec.a3) ? 0 : 1;
      }
      return base_not_a[vi] == 1;
    };

    for (size_t j = j_lo; j <= j_hi; ++j) {
      for (size_t vi = 0; vi < vals->size(); ++vi) {
        const auto& val = (*vals)[vi];
        ProgramState& sj = view(j);
        bind_valuation(sj, val);
        if (!satisfies(cx, sj, spec.a2)) continue;
        if (spec.k == NecessitySpec::K::OnlyThrough) {
          bool some_through = false;
          for (size_t k = i; k <= j && !some_through; ++k) {
            ProgramState& sk = view(k);
            bind_valuation(sk, val);
            if (satisfies(cx, sk, spec.a3)) some_through = true;
          }
          if (some_through) continue;
        } else if (!base_ok(vi)) {
          continue;
        }
        if (ce) {
          ce->i = static_cast<int>(i);
          ce->j = static_cast<int>(j);
          ce->valuation = val;
          ce->description = spec.k == NecessitySpec::K::OnlyThrough
                                ? "A1 at i, adapted A2 at j, no adapted state in [i..j] satisfies A"
                                : "A1 and not A at i, adapted A2 at j";
        }
        return true;
      }
    }
  }
  return false;
}

// Run one adversary main, collecting every external state. Returns false when
// the run gets stuck before finishing (chain still holds the states reached).
struct RunChain {
  std::vector<ChainEntry> chain;
  bool diverged = false;
  bool stuck = false;
};

inline RunChain run_adversary(const SatContext& cx, const AdversaryProgram& adv,
                              const ExplorationBound& bound) {
  RunChain rc;
  ProgramState st = initial_state({});
  rc.chain.push_back({st, 0});
  for (size_t t = 0; t < adv.main.size(); ++t) {
    st.stack.front().code.push_back(adv.main[t]);
    // run until this statement is fully consumed (bottom frame, empty code)
    while (!(st.stack.size() == 1 && st.top().code.empty())) {
      ExtStepResult r = external_step(cx, st, bound.max_internal);
      if (r.k == ExtStepResult::K::Stuck) { rc.stuck = true; return rc; }
      if (r.k == ExtStepResult::K::Diverged) { rc.diverged = true; return rc; }
      if (r.k == ExtStepResult::K::Done) { rc.stuck = true; return rc; }  // cannot happen
      st = std::move(r.step.to);
      rc.chain.push_back({st, t + 1});
    }
    rc.chain.back().stmts_consumed = t + 1;
  }
  return rc;
}

// ---------------------------------------------------------------- adversary enumeration

// Candidate next statements at a concrete external state, per the action
// alphabet: new (internal or adversary class), calls on internal/adversary
// methods, and field reads/writes on adversary objects. Arguments come from
// the int pool, null, and previously bound variables.
inline std::vector<StmtP> candidate_statements(const SatContext& cx, const ProgramState& st,
                                               const ExplorationBound& bound,
                                               const std::string& target_var) {
  std::vector<StmtP> out;
  const Frame& fr = st.stack.front();

  std::vector<ExprP> atoms;
  for (auto i : bound.int_pool) atoms.push_back(Expr::val_(Value::integer(i)));
  atoms.push_back(Expr::val_(Value::null()));
  std::vector<std::string> vars;
  for (const auto& [x, v] : fr.locals) {
    (void)v;
    if (x != "this") vars.push_back(x);
  }
  for (const auto& x : vars) atoms.push_back(Expr::var_(x));

  std::function<void(std::vector<ExprP>&, size_t, size_t,
                     const std::function<void(std::vector<ExprP>)>&)>
      tuples = [&](std::vector<ExprP>& acc, size_t k, size_t arity,
                   const std::function<void(std::vector<ExprP>)>& emit) {
        if (k == arity) { emit(acc); return; }
        for (const auto& a : atoms) {
          acc.push_back(a);
          tuples(acc, k + 1, arity, emit);
          acc.pop_back();
        }
      };

  // x := new C(args)
  if (static_cast<int>(st.heap.size()) < bound.max_objects) {
    std::vector<const ClassDef*> classes;
    for (const auto& c : cx.linked->classes) classes.push_back(&c);
    for (const ClassDef* c : classes) {
      size_t arity = c->ctor ? c->ctor->params.size() : 0;
      std::vector<ExprP> acc;
      tuples(acc, 0, arity, [&](std::vector<ExprP> as) {
        out.push_back(Stmt::new_(target_var, c->name, std::move(as)));
      });
    }
  }
  // x := y.m(args)
  for (const auto& y : vars) {
    auto cls = class_of(st, y);
    if (!cls) continue;
    const ClassDef* c = cx.linked->cls(*cls);
    if (!c) continue;
    for (const auto& md : c->methods) {
      std::vector<ExprP> acc;
      tuples(acc, 0, md.params.size(), [&](std::vector<ExprP> as) {
        out.push_back(Stmt::call(target_var, y, md.name, std::move(as)));
      });
    }
    // field reads/writes only on adversary-class (external) objects
    if (!cx.is_internal_class(*cls)) {
      for (const auto& f : c->fields) {
        out.push_back(Stmt::read(target_var, y, f.name));
        for (const auto& a : atoms)
          if (a->k == Expr::K::Var) out.push_back(Stmt::write(y, f.name, a));
      }
    }
  }
  return out;
}

// Depth-first enumeration of adversary mains of exactly `len` statements, with
// canonical-state deduplication per depth. The visitor gets each complete
// program with its external-state chain; returning true stops the search.
inline bool enumerate_mains(const SatContext& cx, const ExplorationBound& bound, int len,
                            bool* diverged, long* explored,
                            const std::function<bool(const std::vector<StmtP>&,
                                                     const std::vector<ChainEntry>&)>& visit) {
  std::vector<StmtP> main;
  std::vector<ChainEntry> chain;
  std::vector<std::unordered_set<std::string>> seen(static_cast<size_t>(len) + 1);

  std::function<bool(ProgramState, int)> dfs = [&](ProgramState st, int depth) -> bool {
    if (depth == len) {
      ++*explored;
      return visit(main, chain);
    }
    std::string key = canonical_key(st);
    if (!seen[static_cast<size_t>(depth)].insert(key).second) return false;
    std::string tv = "v" + std::to_string(depth + 1);
    for (const StmtP& s : candidate_statements(cx, st, bound, tv)) {
      ProgramState next = st;
      next.stack.front().code.push_back(s);
      size_t chain_mark = chain.size();
      bool bad = false;
      while (!(next.stack.size() == 1 && next.top().code.empty())) {
        ExtStepResult r = external_step(cx, next, bound.max_internal);
        if (r.k == ExtStepResult::K::Diverged) { *diverged = true; bad = true; break; }
        if (r.k != ExtStepResult::K::Ok) { bad = true; break; }  // stuck branch: prune
        next = std::move(r.step.to);
        chain.push_back({next, static_cast<size_t>(depth) + 1});
      }
      if (!bad) {
        chain.back().stmts_consumed = static_cast<size_t>(depth) + 1;
        main.push_back(s);
        if (dfs(next, depth + 1)) return true;
        main.pop_back();
      }
      chain.resize(chain_mark);
    }
    return false;
  };

  ProgramState init = initial_state({});
  chain.push_back({init, 0});
  return dfs(init, 0);
}

// Check a single concrete adversary program (used for replay and minimization).
inline bool check_single(const Module& internal, const NecessitySpec& spec,
                         const AdversaryProgram& adv, const ExplorationBound& bound,
                         Counterexample* ce = nullptr) {
  Module linked = link(internal, adv.classes);
  SatContext cx = make_sat_context(linked, internal);
  RunChain rc = run_adversary(cx, adv, bound);
  if (!violates_spec(cx, spec, rc.chain, adv.main, bound, ce)) return false;
  if (ce) ce->adversary = adv;
  return true;
}

inline Counterexample minimize(const Module& internal, const NecessitySpec& spec,
                               const Counterexample& in, const ExplorationBound& bound) {
  Counterexample best = in;
  bool changed = true;
  while (changed) {
    changed = false;
    // statement removal
    for (size_t t = 0; t < best.adversary.main.size(); ++t) {
      AdversaryProgram cand = best.adversary;
      cand.main.erase(cand.main.begin() + static_cast<long>(t));
      Counterexample ce;
      if (check_single(internal, spec, cand, bound, &ce)) {
        ce.adversary = cand;
        best = ce;
        changed = true;
        break;
      }
    }
    if (changed) continue;
    // int-literal shrink toward the front of the pool
    for (size_t t = 0; t < best.adversary.main.size() && !changed; ++t) {
      const StmtP& s = best.adversary.main[t];
      for (size_t ai = 0; ai < s->args.size() && !changed; ++ai) {
        if (s->args[ai]->k != Expr::K::Val || !s->args[ai]->val.is_int()) continue;
        for (auto smaller : bound.int_pool) {
          if (smaller >= s->args[ai]->val.i) break;
          AdversaryProgram cand = best.adversary;
          auto ns = std::make_shared<Stmt>(*s);
          ns->args[ai] = Expr::val_(Value::integer(smaller));
          cand.main[t] = ns;
          Counterexample ce;
          if (check_single(internal, spec, cand, bound, &ce)) {
            ce.adversary = cand;
            best = ce;
            changed = true;
            break;
          }
        }
      }
    }
  }
  return best;
}

inline CheckResult check(const Module& internal, const NecessitySpec& spec,
                         const ExplorationBound& bound = {}) {
  CheckResult res;
  AdversaryProgram adv;
  adv.classes = bound.max_external_classes > 0 ? default_adversary_classes() : Module{{"Adv"}, {}};
  Module linked = link(internal, adv.classes);
  SatContext cx = make_sat_context(linked, internal);

  bool diverged = false;
  for (int len = 0; len <= bound.max_main_len; ++len) {
    bool found = enumerate_mains(
        cx, bound, len, &diverged, &res.programs_explored,
        [&](const std::vector<StmtP>& main, const std::vector<ChainEntry>& chain) {
          Counterexample ce;
          if (!violates_spec(cx, spec, chain, main, bound, &ce, /*new_pairs_only=*/true)) return false;
          ce.adversary = adv;
          ce.adversary.main = main;
          res.verdict = CheckResult::Verdict::Falsified;
          res.counterexample = minimize(internal, spec, ce, bound);
          return true;
        });
    if (found) break;
  }
  res.divergence_pruned = diverged;
  return res;
}

inline std::vector<std::vector<CheckResult>> check_table(
    const std::vector<const Module*>& modules, const std::vector<NecessitySpec>& specs,
    const ExplorationBound& bound = {}) {
  std::vector<std::vector<CheckResult>> out;
  for (const Module* m : modules) {
    std::vector<CheckResult> row;
    for (const auto& s : specs) row.push_back(check(*m, s, bound));
    out.push_back(std::move(row));
  }
  return out;
}

// Bounded check of a closed assertion over all arising states (Plain spec).
inline CheckResult module_satisfies_assertion(const Module& internal, const AssnP& a,
                                              const ExplorationBound& bound = {}) {
  NecessitySpec s;
  s.k = NecessitySpec::K::Plain;
  s.a3 = a;
  return check(internal, s, bound);
}

// Empirical falsifier for assertion encapsulation: look for an arising state
// satisfying guard ∧ subject whose next external step is NOT a call into
// internal code yet invalidates the subject in the adapted view.
inline CheckResult test_encapsulation_semantics(const Module& internal, const AssnP& guard,
                                                const AssnP& subject,
                                                const ExplorationBound& bound = {}) {
  CheckResult res;
  AdversaryProgram adv;
  adv.classes = default_adversary_classes();
  Module linked = link(internal, adv.classes);
  SatContext cx = make_sat_context(linked, internal);

  std::set<std::string> mv = free_vars(guard);
  {
    auto mv2 = free_vars(subject);
    mv.insert(mv2.begin(), mv2.end());
  }
  std::vector<std::string> metavars(mv.begin(), mv.end());

  bool diverged = false;
  for (int len = 0; len <= bound.max_main_len; ++len) {
    bool found = enumerate_mains(
        cx, bound, len, &diverged, &res.programs_explored,
        [&](const std::vector<StmtP>& main, const std::vector<ChainEntry>& chain) {
          for (size_t i = 0; i + 1 < chain.size(); ++i) {
            ProgramState si = materialize(chain[i], main);
            // skip states whose next statement is an internal call — those are
            // exactly the steps encapsulation licenses to change the subject
            if (!si.top().code.empty()) {
              const StmtP& s0 = si.top().code.front();
              if (s0->k == Stmt::K::Call) {
                auto c = class_of(si, s0->y);
                if (c && cx.is_internal_class(*c)) continue;
              }
              if (s0->k == Stmt::K::New && cx.is_internal_class(s0->cls)) continue;
            }
            std::vector<Value> cands = metavar_candidates(si, bound.int_pool);
            std::map<std::string, Value> cur;
            ProgramState adapted = adapt(materialize(chain[i + 1], main), si).state;
            std::function<bool(size_t)> enumerate = [&](size_t idx) -> bool {
              if (idx == metavars.size()) {
                ProgramState s2 = si;
                bind_valuation(s2, cur);
                if (!satisfies(cx, s2, guard) || !satisfies(cx, s2, subject)) return false;
                ProgramState a2 = adapted;
                bind_valuation(a2, cur);
                if (satisfies(cx, a2, subject)) return false;
                Counterexample ce;
                ce.adversary = adv;
                ce.adversary.main = main;
                ce.i = static_cast<int>(i);
                ce.j = static_cast<int>(i) + 1;
                ce.valuation = cur;
                ce.description = "subject invalidated by a non-internal-call external step";
                res.verdict = CheckResult::Verdict::Falsified;
                res.counterexample = ce;
                return true;
              }
              for (const Value& v : cands) {
                cur[metavars[idx]] = v;
                if (enumerate(idx + 1)) return true;
              }
              return false;
            };
            if (enumerate(0)) return true;
          }
          return false;
        });
    if (found) break;
  }
  res.divergence_pruned = diverged;
  return res;
}

}  // namespace nec
