#pragma once

// Satisfaction of specification assertions by a module and a program state,
// including the access/internal/external/calls predicates and the `inside`
// shorthand.

#include <set>

#include "interp.hpp"

namespace nec {

// Satisfaction context: the linked module (for evaluation) together with the
// set of internal class names (for internal/external verdicts). Object and
// every class not declared by the internal module count as external.
struct SatContext {
  const Module* linked = nullptr;    // internal + adversary classes
  const Module* internal = nullptr;  // the module under specification
  int fuel = kDefaultGhostFuel;

  bool is_internal_class(const std::string& c) const {
    return internal && internal->has(c);
  }
};

inline SatContext make_sat_context(const Module& linked, const Module& internal,
                                   int fuel = kDefaultGhostFuel) {
  SatContext c;
  c.linked = &linked;
  c.internal = &internal;
  c.fuel = fuel;
  return c;
}

// The variables and literal values syntactically occurring in a frame's
// continuation (used by the stack clause of `access`).
inline void collect_expr_occurrences(const ExprP& e, std::set<std::string>& vars,
                                     std::set<Value>& lits) {
  if (!e) return;
  switch (e->k) {
    case Expr::K::Val: lits.insert(e->val); return;
    case Expr::K::Var: vars.insert(e->name); return;
    default:
      collect_expr_occurrences(e->a, vars, lits);
      collect_expr_occurrences(e->b, vars, lits);
      collect_expr_occurrences(e->c, vars, lits);
      return;
  }
}

inline void collect_stmt_occurrences(const StmtP& s, std::set<std::string>& vars,
                                     std::set<Value>& lits) {
  if (!s) return;
  switch (s->k) {
    case Stmt::K::Read: vars.insert(s->x); vars.insert(s->y); return;
    case Stmt::K::Write:
      vars.insert(s->x);
      collect_expr_occurrences(s->e, vars, lits);
      return;
    case Stmt::K::Call:
      vars.insert(s->x);
      vars.insert(s->y);
      for (const auto& a : s->args) collect_expr_occurrences(a, vars, lits);
      return;
    case Stmt::K::New:
      vars.insert(s->x);
      for (const auto& a : s->args) collect_expr_occurrences(a, vars, lits);
      return;
    case Stmt::K::Return: collect_expr_occurrences(s->e, vars, lits); return;
    case Stmt::K::If:
      collect_expr_occurrences(s->e, vars, lits);
      for (const auto& t : s->thn) collect_stmt_occurrences(t, vars, lits);
      for (const auto& t : s->els) collect_stmt_occurrences(t, vars, lits);
      return;
  }
}

inline void collect_frame_occurrences(const Frame& f, std::set<std::string>& vars,
                                      std::set<Value>& lits) {
  if (f.hole) vars.insert(*f.hole);
  for (const auto& s : f.code) collect_stmt_occurrences(s, vars, lits);
}

// access clause, value level: x (an object) has access to the value y if some
// field of x holds y, or x is the receiver of some frame whose continuation
// mentions y (through a variable bound to y, or as a literal).
inline bool access_value(const SatContext& cx, const ProgramState& st, const Value& xv,
                         const Value& yv) {
  const HeapObject* o = st.obj(xv);
  if (!o) return false;
  for (const auto& [f, v] : o->flds)
    if (v == yv) return true;
  for (const auto& fr : st.stack) {
    auto it = fr.locals.find("this");
    if (it == fr.locals.end() || !(it->second == xv)) continue;
    std::set<std::string> vars;
    std::set<Value> lits;
    collect_frame_occurrences(fr, vars, lits);
    if (lits.count(yv)) return true;
    for (const auto& z : vars) {
      auto lit = fr.locals.find(z);
      if (lit != fr.locals.end() && lit->second == yv) return true;
    }
  }
  return false;
}

inline bool internal_value(const SatContext& cx, const ProgramState& st, const Value& v) {
  auto c = class_of(st, v);
  return c && cx.is_internal_class(*c);
}
inline bool external_value(const SatContext& cx, const ProgramState& st, const Value& v) {
  auto c = class_of(st, v);
  return c && !cx.is_internal_class(*c);
}

// inside⟨o⟩ ≜ ∀x.[access(x,o) ⟶ internal(x)], implemented directly over the
// heap (tested against the expanded formula).
inline bool inside_value(const SatContext& cx, const ProgramState& st, const Value& ov) {
  for (const auto& [a, obj] : st.heap) {
    Value xv = Value::addr(a);
    if (access_value(cx, st, xv, ov) && !cx.is_internal_class(obj.cls)) return false;
  }
  return true;
}

inline bool satisfies(const SatContext& cx, const ProgramState& st, const AssnP& a);

// Evaluation wrapper used by assertion atoms: failure folds into falsity.
inline std::optional<Value> sat_eval(const SatContext& cx, const ProgramState& st,
                                     const ExprP& e) {
  EvalResult r = eval_expr(*cx.linked, st, e, cx.fuel);
  if (!r.is_ok()) return std::nullopt;
  return r.v;
}

inline bool satisfies(const SatContext& cx, const ProgramState& st, const AssnP& a) {
  using K = Assertion::K;
  switch (a->k) {
    case K::Expr: {
      auto v = sat_eval(cx, st, a->e);
      return v && v->is_bool() && v->b;
    }
    case K::HasClass: {
      auto v = sat_eval(cx, st, a->e);
      if (!v) return false;
      auto c = class_of(st, *v);
      return c && *c == a->cls;
    }
    case K::Not:
      return !satisfies(cx, st, a->a);
    case K::And:
      return satisfies(cx, st, a->a) && satisfies(cx, st, a->b);
    case K::Or:
      return satisfies(cx, st, a->a) || satisfies(cx, st, a->b);
    case K::Implies:
      return !satisfies(cx, st, a->a) || satisfies(cx, st, a->b);
    case K::Forall:
    case K::Exists: {
      bool forall = a->k == K::Forall;
      for (const auto& [addr, obj] : st.heap) {
        (void)obj;
        ProgramState st2 = st;
        st2.top().locals[a->var] = Value::addr(addr);
        bool body = satisfies(cx, st2, a->a);
        if (forall && !body) return false;
        if (!forall && body) return true;
      }
      return forall;
    }
    case K::Access: {
      auto xv = sat_eval(cx, st, a->e);
      auto yv = sat_eval(cx, st, a->e2);
      return xv && yv && access_value(cx, st, *xv, *yv);
    }
    case K::Internal: {
      auto v = sat_eval(cx, st, a->e);
      return v && internal_value(cx, st, *v);
    }
    case K::External: {
      auto v = sat_eval(cx, st, a->e);
      return v && external_value(cx, st, *v);
    }
    case K::Inside: {
      auto v = sat_eval(cx, st, a->e);
      return v && inside_value(cx, st, *v);
    }
    case K::Calls: {
      const Frame& fr = st.top();
      if (fr.code.empty()) return false;
      const StmtP& s = fr.code.front();
      if (s->k != Stmt::K::Call || s->m != a->meth) return false;
      auto recv_actual = interpret_var(st, s->y);
      auto recv_spec = sat_eval(cx, st, a->e);
      if (!recv_actual || !recv_spec || !(*recv_actual == *recv_spec)) return false;
      if (!a->caller->is_wildcard()) {
        auto who = sat_eval(cx, st, a->caller);
        auto self = interpret_var(st, "this");
        if (!who || !self || !(*who == *self)) return false;
      }
      if (a->args.size() != s->args.size()) return false;
      for (size_t i = 0; i < a->args.size(); ++i) {
        if (a->args[i]->is_wildcard()) continue;
        auto want = sat_eval(cx, st, a->args[i]);
        auto got = atom_value(st, s->args[i]);
        if (!want || !got || !(*want == *got)) return false;
      }
      return true;
    }
  }
  return false;
}

// inside on a target expression; false when the target is not an object.
inline bool satisfies_inside(const SatContext& cx, const ProgramState& st, const ExprP& target) {
  auto v = sat_eval(cx, st, target);
  if (!v || !v->is_addr()) return false;
  return inside_value(cx, st, *v);
}

// Free variables of an assertion not bound by its own quantifiers (metavariables
// to be valued by the checker). `this`, wildcards and literals excluded.
inline void free_vars_expr(const ExprP& e, const std::set<std::string>& bound,
                           std::set<std::string>& out) {
  if (!e) return;
  if (e->k == Expr::K::Var) {
    if (e->name != "this" && e->name != "_" && !bound.count(e->name)) out.insert(e->name);
    return;
  }
  free_vars_expr(e->a, bound, out);
  free_vars_expr(e->b, bound, out);
  free_vars_expr(e->c, bound, out);
}

inline void free_vars_assertion(const AssnP& a, std::set<std::string> bound,
                                std::set<std::string>& out) {
  if (!a) return;
  using K = Assertion::K;
  switch (a->k) {
    case K::Forall:
    case K::Exists:
      bound.insert(a->var);
      free_vars_assertion(a->a, bound, out);
      return;
    default:
      free_vars_expr(a->e, bound, out);
      free_vars_expr(a->e2, bound, out);
      free_vars_expr(a->caller, bound, out);
      for (const auto& x : a->args) free_vars_expr(x, bound, out);
      free_vars_assertion(a->a, bound, out);
      free_vars_assertion(a->b, bound, out);
      return;
  }
}

inline std::set<std::string> free_vars(const AssnP& a) {
  std::set<std::string> out;
  free_vars_assertion(a, {}, out);
  return out;
}

}  // namespace nec
