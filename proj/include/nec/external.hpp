#pragma once

// External-states reduction (collapsing runs through internal code), arising
// states, and the adaptation operator σ′◁σ that views a future state under an
// earlier state's variable bindings.

#include "assertions.hpp"

namespace nec {

constexpr int kDefaultMaxInternal = 10000;

inline bool has_external_this(const SatContext& cx, const ProgramState& st) {
  auto c = class_of(st, std::string("this"));
  return c && !cx.is_internal_class(*c);
}

struct ExternalStep {
  ProgramState from;
  ProgramState to;
  std::vector<ProgramState> internal_trace;  // states with internal `this`, if any
};

struct ExtStepResult {
  enum class K { Ok, Done, Stuck, Diverged };
  K k = K::Ok;
  ExternalStep step;        // Ok
  Value result;             // Done
  std::string stuck_reason; // Stuck
};

// One step of the external-states semantics: a single small step, except that
// a step entering internal code runs until control returns to an external
// `this` (bounded by max_internal small steps).
inline ExtStepResult external_step(const SatContext& cx, const ProgramState& state,
                                   int max_internal = kDefaultMaxInternal) {
  if (!has_external_this(cx, state))
    throw std::logic_error("external_step: `this` is not external");
  ExtStepResult out;
  out.step.from = state;
  ProgramState cur = state;
  for (int i = 0; i <= max_internal; ++i) {
    StepResult r = step(*cx.linked, cur);
    if (r.k == StepResult::K::Done) {
      out.k = ExtStepResult::K::Done;
      out.result = r.result;
      return out;
    }
    if (r.k == StepResult::K::Stuck) {
      out.k = ExtStepResult::K::Stuck;
      out.stuck_reason = r.reason;
      return out;
    }
    if (has_external_this(cx, r.state)) {
      out.k = ExtStepResult::K::Ok;
      out.step.to = std::move(r.state);
      return out;
    }
    out.step.internal_trace.push_back(r.state);
    cur = std::move(r.state);
  }
  out.k = ExtStepResult::K::Diverged;
  return out;
}

struct AdversaryProgram {
  Module classes;            // external classes (may be empty)
  std::vector<StmtP> main;   // installed as the initial continuation
};

// The chain of external states arising from running the adversary's main.
// Deterministic language: each arising state has exactly one successor.
struct ArisingRun {
  std::vector<ProgramState> states;  // all have external `this`; [0] is initial
  bool done = false;                 // main ran to completion
  bool stuck = false;
  bool diverged = false;             // max_internal exhausted (bound incompleteness)
  std::string stuck_reason;
};

inline ArisingRun arising_states(const Module& internal, const AdversaryProgram& adv,
                                 int max_internal = kDefaultMaxInternal,
                                 int max_external_steps = 10000) {
  Module linked = link(internal, adv.classes);
  SatContext cx = make_sat_context(linked, internal);
  ArisingRun run;
  run.states.push_back(initial_state(adv.main));
  for (int i = 0; i < max_external_steps; ++i) {
    ExtStepResult r = external_step(cx, run.states.back(), max_internal);
    switch (r.k) {
      case ExtStepResult::K::Done: run.done = true; return run;
      case ExtStepResult::K::Stuck:
        run.stuck = true;
        run.stuck_reason = r.stuck_reason;
        return run;
      case ExtStepResult::K::Diverged: run.diverged = true; return run;
      case ExtStepResult::K::Ok: run.states.push_back(std::move(r.step.to)); break;
    }
  }
  run.diverged = true;
  return run;
}

// ---------------------------------------------------------------- adaptation

inline ExprP rename_expr(const ExprP& e, const std::map<std::string, std::string>& rn) {
  if (!e) return e;
  switch (e->k) {
    case Expr::K::Val: return e;
    case Expr::K::Var: {
      auto it = rn.find(e->name);
      return it == rn.end() ? e : Expr::var_(it->second);
    }
    case Expr::K::If:
      return Expr::if_(rename_expr(e->a, rn), rename_expr(e->b, rn), rename_expr(e->c, rn));
    case Expr::K::Field:
      return Expr::field(rename_expr(e->a, rn), e->name);
    case Expr::K::Ghost:
      return Expr::ghost(rename_expr(e->a, rn), e->name, rename_expr(e->b, rn));
    default:
      return Expr::bin(e->k, rename_expr(e->a, rn), rename_expr(e->b, rn));
  }
}

inline StmtP rename_stmt(const StmtP& s, const std::map<std::string, std::string>& rn) {
  auto r = [&](const std::string& x) {
    auto it = rn.find(x);
    return it == rn.end() ? x : it->second;
  };
  switch (s->k) {
    case Stmt::K::Read: return Stmt::read(r(s->x), r(s->y), s->f);
    case Stmt::K::Write: return Stmt::write(r(s->x), s->f, rename_expr(s->e, rn));
    case Stmt::K::Call: {
      std::vector<ExprP> as;
      for (const auto& a : s->args) as.push_back(rename_expr(a, rn));
      return Stmt::call(r(s->x), r(s->y), s->m, std::move(as));
    }
    case Stmt::K::New: {
      std::vector<ExprP> as;
      for (const auto& a : s->args) as.push_back(rename_expr(a, rn));
      return Stmt::new_(r(s->x), s->cls, std::move(as));
    }
    case Stmt::K::Return: return Stmt::ret(rename_expr(s->e, rn));
    case Stmt::K::If: {
      std::vector<StmtP> t, e2;
      for (const auto& b : s->thn) t.push_back(rename_stmt(b, rn));
      for (const auto& b : s->els) e2.push_back(rename_stmt(b, rn));
      return Stmt::if_(rename_expr(s->e, rn), std::move(t), std::move(e2));
    }
  }
  return s;
}

struct AdaptedState {
  ProgramState state;                           // σ′ ◁ σ
  std::map<std::string, std::string> renaming;  // future var → fresh name
};

// σ′ ◁ σ: heap and lower frames of the future state; top-frame locals are the
// base state's locals extended with fresh `$k` names bound to the future
// locals' values; the future continuation is rewritten with those fresh names.
// Base bindings always win.
inline AdaptedState adapt(const ProgramState& future, const ProgramState& base) {
  AdaptedState out;
  out.state = future;
  const Frame& bf = base.top();
  const Frame& ff = future.top();

  std::set<std::string> taken;
  for (const auto& [x, v] : bf.locals) { (void)v; taken.insert(x); }
  for (const auto& [x, v] : ff.locals) { (void)v; taken.insert(x); }

  int k = 1;
  for (const auto& [x, v] : ff.locals) {
    (void)v;
    std::string fresh;
    do {
      fresh = x + "$" + std::to_string(k++);
    } while (taken.count(fresh));
    taken.insert(fresh);
    out.renaming[x] = fresh;
  }

  Frame merged;
  merged.locals = bf.locals;
  for (const auto& [x, v] : ff.locals) merged.locals[out.renaming.at(x)] = v;
  if (ff.hole) {
    auto it = out.renaming.find(*ff.hole);
    merged.hole = it == out.renaming.end() ? *ff.hole : it->second;
  }
  for (const auto& s : ff.code) merged.code.push_back(rename_stmt(s, out.renaming));
  merged.is_ctor = ff.is_ctor;
  out.state.stack.back() = std::move(merged);
  return out;
}

}  // namespace nec
