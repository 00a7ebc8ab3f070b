#pragma once

// Small-step operational semantics over explicit heap/stack states, and
// big-step expression evaluation (specification-level, fuel-bounded ghosts).

#include <deque>

#include "syntax.hpp"

namespace nec {

struct HeapObject {
  std::string cls;
  std::map<std::string, Value> flds;
};

struct Frame {
  std::map<std::string, Value> locals;
  std::optional<std::string> hole;  // `x := • ; s` — filled on return from above
  std::deque<StmtP> code;
  bool is_ctor = false;
};

struct ProgramState {
  std::map<std::uint32_t, HeapObject> heap;
  std::vector<Frame> stack;  // back() is the top frame
  std::uint32_t next_addr = 1;

  Frame& top() { return stack.back(); }
  const Frame& top() const { return stack.back(); }
  const HeapObject* obj(const Value& v) const {
    if (!v.is_addr()) return nullptr;
    auto it = heap.find(v.a);
    return it == heap.end() ? nullptr : &it->second;
  }
  std::uint32_t alloc(HeapObject o) {
    std::uint32_t a = next_addr++;
    heap.emplace(a, std::move(o));
    return a;
  }
};

// ⌊x⌋σ — top-frame variable interpretation
inline std::optional<Value> interpret_var(const ProgramState& st, const std::string& x) {
  const auto& l = st.top().locals;
  auto it = l.find(x);
  if (it == l.end()) return std::nullopt;
  return it->second;
}

// classOf(σ, value/var)
inline std::optional<std::string> class_of(const ProgramState& st, const Value& v) {
  const HeapObject* o = st.obj(v);
  if (!o) return std::nullopt;
  return o->cls;
}
inline std::optional<std::string> class_of(const ProgramState& st, const std::string& x) {
  auto v = interpret_var(st, x);
  if (!v) return std::nullopt;
  return class_of(st, *v);
}

// The canonical initial state: one Object instance, `this` bound to it, the
// given statements as the continuation.
inline ProgramState initial_state(std::vector<StmtP> main) {
  ProgramState st;
  std::uint32_t a = st.alloc(HeapObject{"Object", {}});
  Frame f;
  f.locals["this"] = Value::addr(a);
  f.code.assign(main.begin(), main.end());
  st.stack.push_back(std::move(f));
  return st;
}

// ---------------------------------------------------------------- expression evaluation

struct EvalResult {
  enum class K { Ok, FuelExhausted, TypeError, NoSuchField, NoSuchGhost, Unbound, Privacy, Overflow };
  K k = K::Ok;
  Value v;
  static EvalResult ok(Value v) { EvalResult r; r.v = v; return r; }
  static EvalResult err(K k) { EvalResult r; r.k = k; return r; }
  bool is_ok() const { return k == K::Ok; }
};

inline const char* eval_error_name(EvalResult::K k) {
  switch (k) {
    case EvalResult::K::Ok: return "ok";
    case EvalResult::K::FuelExhausted: return "fuel-exhausted";
    case EvalResult::K::TypeError: return "type-error";
    case EvalResult::K::NoSuchField: return "no-such-field";
    case EvalResult::K::NoSuchGhost: return "no-such-ghost";
    case EvalResult::K::Unbound: return "unbound-variable";
    case EvalResult::K::Privacy: return "field-privacy";
    case EvalResult::K::Overflow: return "overflow";
  }
  return "?";
}

constexpr int kDefaultGhostFuel = 1000;

// Evaluate e under an explicit variable environment. When `privacy_class` is
// set (statement-context evaluation), field reads are restricted to objects of
// exactly that class (the (Read)/(Write) side condition) and ghost calls are
// rejected (ghost fields are specification-only).
inline EvalResult eval_expr_env(const Module& m, const ProgramState& st,
                                const std::map<std::string, Value>& env, const ExprP& e,
                                int& fuel, const std::string* privacy_class) {
  using K = Expr::K;
  switch (e->k) {
    case K::Val:
      return EvalResult::ok(e->val);
    case K::Var: {
      auto it = env.find(e->name);
      if (it == env.end()) return EvalResult::err(EvalResult::K::Unbound);
      return EvalResult::ok(it->second);
    }
    case K::Add:
    case K::Sub: {
      EvalResult l = eval_expr_env(m, st, env, e->a, fuel, privacy_class);
      if (!l.is_ok()) return l;
      EvalResult r = eval_expr_env(m, st, env, e->b, fuel, privacy_class);
      if (!r.is_ok()) return r;
      if (!l.v.is_int() || !r.v.is_int()) return EvalResult::err(EvalResult::K::TypeError);
      std::int64_t out;
      bool ovf = e->k == K::Add ? __builtin_add_overflow(l.v.i, r.v.i, &out)
                                : __builtin_sub_overflow(l.v.i, r.v.i, &out);
      if (ovf) return EvalResult::err(EvalResult::K::Overflow);
      return EvalResult::ok(Value::integer(out));
    }
    case K::Eq: {
      EvalResult l = eval_expr_env(m, st, env, e->a, fuel, privacy_class);
      if (!l.is_ok()) return l;
      EvalResult r = eval_expr_env(m, st, env, e->b, fuel, privacy_class);
      if (!r.is_ok()) return r;
      return EvalResult::ok(Value::boolean(l.v == r.v));
    }
    case K::Lt: {
      EvalResult l = eval_expr_env(m, st, env, e->a, fuel, privacy_class);
      if (!l.is_ok()) return l;
      EvalResult r = eval_expr_env(m, st, env, e->b, fuel, privacy_class);
      if (!r.is_ok()) return r;
      if (!l.v.is_int() || !r.v.is_int()) return EvalResult::err(EvalResult::K::TypeError);
      return EvalResult::ok(Value::boolean(l.v.i < r.v.i));
    }
    case K::If: {
      EvalResult c = eval_expr_env(m, st, env, e->a, fuel, privacy_class);
      if (!c.is_ok()) return c;
      if (!c.v.is_bool()) return EvalResult::err(EvalResult::K::TypeError);
      return eval_expr_env(m, st, env, c.v.b ? e->b : e->c, fuel, privacy_class);
    }
    case K::Field: {
      EvalResult b = eval_expr_env(m, st, env, e->a, fuel, privacy_class);
      if (!b.is_ok()) return b;
      const HeapObject* o = st.obj(b.v);
      if (!o) return EvalResult::err(EvalResult::K::TypeError);
      if (privacy_class && o->cls != *privacy_class)
        return EvalResult::err(EvalResult::K::Privacy);
      auto it = o->flds.find(e->name);
      if (it == o->flds.end()) return EvalResult::err(EvalResult::K::NoSuchField);
      return EvalResult::ok(it->second);
    }
    case K::Ghost: {
      if (privacy_class) return EvalResult::err(EvalResult::K::TypeError);
      if (fuel <= 0) return EvalResult::err(EvalResult::K::FuelExhausted);
      --fuel;
      EvalResult b = eval_expr_env(m, st, env, e->a, fuel, privacy_class);
      if (!b.is_ok()) return b;
      const HeapObject* o = st.obj(b.v);
      if (!o) return EvalResult::err(EvalResult::K::TypeError);
      const ClassDef* cd = m.cls(o->cls);
      if (!cd) return EvalResult::err(EvalResult::K::NoSuchGhost);
      const GhostDef* g = cd->ghost(e->name);
      if (!g) return EvalResult::err(EvalResult::K::NoSuchGhost);
      EvalResult arg = eval_expr_env(m, st, env, e->b, fuel, privacy_class);
      if (!arg.is_ok()) return arg;
      std::map<std::string, Value> genv;
      genv["this"] = b.v;
      genv[g->param.name] = arg.v;
      return eval_expr_env(m, st, genv, g->body, fuel, nullptr);
    }
  }
  return EvalResult::err(EvalResult::K::TypeError);
}

// Specification-level evaluation: top-frame environment, no privacy restriction.
inline EvalResult eval_expr(const Module& m, const ProgramState& st, const ExprP& e,
                            int fuel = kDefaultGhostFuel) {
  return eval_expr_env(m, st, st.top().locals, e, fuel, nullptr);
}

// ---------------------------------------------------------------- small-step semantics

struct StepResult {
  enum class K { Ok, Stuck, Done };
  K k = K::Ok;
  ProgramState state;     // Ok: the successor
  std::string rule;       // Ok: Call/Read/Write/New/Return/If/CtorReturn/ImplicitReturn
  std::string reason;     // Stuck: one of the reason strings below
  Value result;           // Done: value of the final return (or null)
};

inline StepResult stuck(const std::string& why) {
  StepResult r;
  r.k = StepResult::K::Stuck;
  r.reason = why;
  return r;
}

inline const ClassDef* lookup_class(const Module& m, const std::string& c) { return m.cls(c); }

// Resolve a call/new argument atom (variable or literal) in the top frame.
inline std::optional<Value> atom_value(const ProgramState& st, const ExprP& a) {
  if (a->k == Expr::K::Val) return a->val;
  if (a->k == Expr::K::Var) return interpret_var(st, a->name);
  return std::nullopt;
}

inline StepResult step(const Module& m, const ProgramState& st0) {
  ProgramState st = st0;
  Frame& fr = st.top();

  if (fr.code.empty()) {
    // constructor frames pop binding the fresh address; method frames behave
    // as `return null`; an empty bottom frame is termination
    if (st.stack.size() == 1) {
      StepResult r;
      r.k = StepResult::K::Done;
      r.result = Value::null();
      return r;
    }
    Value v = fr.is_ctor ? fr.locals.at("this") : Value::null();
    bool ctor = fr.is_ctor;
    st.stack.pop_back();
    Frame& below = st.top();
    if (!below.hole) return stuck("return-without-hole");
    below.locals[*below.hole] = v;
    below.hole.reset();
    StepResult r;
    r.k = StepResult::K::Ok;
    r.rule = ctor ? "CtorReturn" : "ImplicitReturn";
    r.state = std::move(st);
    return r;
  }

  StmtP s = fr.code.front();
  fr.code.pop_front();

  auto this_class = class_of(st, std::string("this"));
  if (!this_class) return stuck("this-not-an-object");

  switch (s->k) {
    case Stmt::K::Read: {  // x := y.f
      auto yv = interpret_var(st, s->y);
      if (!yv) return stuck("unbound-variable");
      const HeapObject* o = st.obj(*yv);
      if (!o) return stuck("not-an-object");
      if (o->cls != *this_class) return stuck("field-privacy");
      auto it = o->flds.find(s->f);
      if (it == o->flds.end()) return stuck("no-such-field");
      fr.locals[s->x] = it->second;
      StepResult r;
      r.k = StepResult::K::Ok;
      r.rule = "Read";
      r.state = std::move(st);
      return r;
    }
    case Stmt::K::Write: {  // x.f := e
      auto xv = interpret_var(st, s->x);
      if (!xv) return stuck("unbound-variable");
      const HeapObject* o = st.obj(*xv);
      if (!o) return stuck("not-an-object");
      if (o->cls != *this_class) return stuck("field-privacy");
      if (!o->flds.count(s->f)) return stuck("no-such-field");
      int fuel = kDefaultGhostFuel;
      EvalResult ev = eval_expr_env(m, st, fr.locals, s->e, fuel, &*this_class);
      if (!ev.is_ok()) {
        return stuck(ev.k == EvalResult::K::Privacy ? "field-privacy"
                                                    : std::string("eval:") + eval_error_name(ev.k));
      }
      st.heap.at(xv->a).flds[s->f] = ev.v;
      StepResult r;
      r.k = StepResult::K::Ok;
      r.rule = "Write";
      r.state = std::move(st);
      return r;
    }
    case Stmt::K::Call: {  // x := y.m(args)
      auto yv = interpret_var(st, s->y);
      if (!yv) return stuck("unbound-variable");
      auto cls = class_of(st, *yv);
      if (!cls) return stuck("not-an-object");
      const ClassDef* cd = lookup_class(m, *cls);
      const MethodDef* md = cd ? cd->method(s->m) : nullptr;
      if (!md) return stuck("no-such-method");
      if (md->params.size() != s->args.size()) return stuck("arity-mismatch");
      Frame callee;
      callee.locals["this"] = *yv;
      for (size_t i = 0; i < md->params.size(); ++i) {
        auto av = atom_value(st, s->args[i]);
        if (!av) return stuck("unbound-variable");
        callee.locals[md->params[i].name] = *av;
      }
      callee.code.assign(md->body.begin(), md->body.end());
      fr.hole = s->x;
      st.stack.push_back(std::move(callee));
      StepResult r;
      r.k = StepResult::K::Ok;
      r.rule = "Call";
      r.state = std::move(st);
      return r;
    }
    case Stmt::K::New: {  // x := new C(args)
      const ClassDef* cd = lookup_class(m, s->cls);
      if (!cd && s->cls != "Object") return stuck("no-such-class");
      HeapObject o;
      o.cls = s->cls;
      if (cd)
        for (const auto& f : cd->fields) o.flds[f.name] = Value::null();
      std::vector<Param> params;
      std::vector<StmtP> body;
      if (cd && cd->ctor) {
        params = cd->ctor->params;
        body = cd->ctor->body;
      }
      if (params.size() != s->args.size()) return stuck("arity-mismatch");
      Frame ctor;
      ctor.is_ctor = true;
      for (size_t i = 0; i < params.size(); ++i) {
        auto av = atom_value(st, s->args[i]);
        if (!av) return stuck("unbound-variable");
        ctor.locals[params[i].name] = *av;
      }
      std::uint32_t a = st.alloc(std::move(o));
      ctor.locals["this"] = Value::addr(a);
      ctor.code.assign(body.begin(), body.end());
      fr.hole = s->x;
      st.stack.push_back(std::move(ctor));
      StepResult r;
      r.k = StepResult::K::Ok;
      r.rule = "New";
      r.state = std::move(st);
      return r;
    }
    case Stmt::K::Return: {  // return e
      int fuel = kDefaultGhostFuel;
      EvalResult ev = eval_expr_env(m, st, fr.locals, s->e, fuel, &*this_class);
      if (!ev.is_ok()) {
        return stuck(ev.k == EvalResult::K::Privacy ? "field-privacy"
                                                    : std::string("eval:") + eval_error_name(ev.k));
      }
      if (st.stack.size() == 1) {
        StepResult r;
        r.k = StepResult::K::Done;
        r.result = ev.v;
        return r;
      }
      bool ctor = fr.is_ctor;
      Value self = fr.locals.at("this");
      st.stack.pop_back();
      Frame& below = st.top();
      if (!below.hole) return stuck("return-without-hole");
      below.locals[*below.hole] = ctor ? self : ev.v;
      below.hole.reset();
      StepResult r;
      r.k = StepResult::K::Ok;
      r.rule = "Return";
      r.state = std::move(st);
      return r;
    }
    case Stmt::K::If: {  // documented statement extension
      int fuel = kDefaultGhostFuel;
      EvalResult ev = eval_expr_env(m, st, fr.locals, s->e, fuel, &*this_class);
      if (!ev.is_ok()) {
        return stuck(ev.k == EvalResult::K::Privacy ? "field-privacy"
                                                    : std::string("eval:") + eval_error_name(ev.k));
      }
      if (!ev.v.is_bool()) return stuck("eval:type-error");
      const auto& branch = ev.v.b ? s->thn : s->els;
      for (auto it = branch.rbegin(); it != branch.rend(); ++it) fr.code.push_front(*it);
      StepResult r;
      r.k = StepResult::K::Ok;
      r.rule = "If";
      r.state = std::move(st);
      return r;
    }
  }
  return stuck("bad-statement");
}

struct RunResult {
  std::vector<ProgramState> trace;  // includes the start state
  bool done = false;
  bool stuck = false;
  bool out_of_steps = false;
  std::string stuck_reason;
  Value result;
};

inline RunResult run_to_completion(const Module& m, ProgramState st, int max_steps = 100000) {
  RunResult rr;
  rr.trace.push_back(st);
  for (int i = 0; i < max_steps; ++i) {
    StepResult r = step(m, rr.trace.back());
    if (r.k == StepResult::K::Done) {
      rr.done = true;
      rr.result = r.result;
      return rr;
    }
    if (r.k == StepResult::K::Stuck) {
      rr.stuck = true;
      rr.stuck_reason = r.reason;
      return rr;
    }
    rr.trace.push_back(std::move(r.state));
  }
  rr.out_of_steps = true;
  return rr;
}

}  // namespace nec
