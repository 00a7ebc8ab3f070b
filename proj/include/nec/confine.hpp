#pragma once

// Confinement checking (confined classes, intrnl ghost fields, no-callback
// discipline) and syntax-directed derivation of the assertion-encapsulation
// judgment used as a proof-kernel premise source.

#include <functional>
#include <set>

#include "syntax.hpp"

namespace nec {

// ---------------------------------------------------------------- static types

// Nominal, module-local typing. A type is a class name, "int", "bool",
// "Object", or "?" (unknown). Classes not declared by the module (including
// Object) are external-typed.
inline bool is_primitive_type(const std::string& t) { return t == "int" || t == "bool"; }

inline bool is_internal_type(const Module& m, const std::string& t) { return m.has(t); }

inline bool is_confined_type(const Module& m, const std::string& t) {
  const ClassDef* c = m.cls(t);
  return c && c->confined;
}

// Flow-insensitive local typing of a method/constructor body: parameters carry
// declared types, assignments propagate declared field/method/ghost types.
inline std::map<std::string, std::string> local_types(const Module& m, const ClassDef& cls,
                                                      const MethodDef& md) {
  std::map<std::string, std::string> env;
  env["this"] = cls.name;
  for (const auto& p : md.params) env[p.name] = p.type;
  std::function<void(const std::vector<StmtP>&)> walk = [&](const std::vector<StmtP>& body) {
    for (const auto& s : body) {
      switch (s->k) {
        case Stmt::K::Read: {
          auto yi = env.find(s->y);
          const ClassDef* yc = yi == env.end() ? nullptr : m.cls(yi->second);
          const Param* f = yc ? yc->field(s->f) : nullptr;
          env[s->x] = f ? f->type : "?";
          break;
        }
        case Stmt::K::Call: {
          auto yi = env.find(s->y);
          const ClassDef* yc = yi == env.end() ? nullptr : m.cls(yi->second);
          const MethodDef* cm = yc ? yc->method(s->m) : nullptr;
          env[s->x] = cm && !cm->rtype.empty() ? cm->rtype : "?";
          break;
        }
        case Stmt::K::New: env[s->x] = s->cls; break;
        case Stmt::K::If:
          walk(s->thn);
          walk(s->els);
          break;
        default: break;
      }
    }
  };
  walk(md.body);
  return env;
}

// Static type of an expression under a type environment ("?" if unknown).
inline std::string static_type(const Module& m, const std::map<std::string, std::string>& env,
                               const ExprP& e) {
  if (!e) return "?";
  switch (e->k) {
    case Expr::K::Val:
      switch (e->val.k) {
        case Value::K::Int: return "int";
        case Value::K::Bool: return "bool";
        default: return "?";
      }
    case Expr::K::Var: {
      auto it = env.find(e->name);
      return it == env.end() ? "?" : it->second;
    }
    case Expr::K::Add:
    case Expr::K::Sub: return "int";
    case Expr::K::Eq:
    case Expr::K::Lt: return "bool";
    case Expr::K::If: {
      std::string t = static_type(m, env, e->b);
      return t == static_type(m, env, e->c) ? t : "?";
    }
    case Expr::K::Field: {
      const ClassDef* c = m.cls(static_type(m, env, e->a));
      const Param* f = c ? c->field(e->name) : nullptr;
      return f ? f->type : "?";
    }
    case Expr::K::Ghost: {
      const ClassDef* c = m.cls(static_type(m, env, e->a));
      const GhostDef* g = c ? c->ghost(e->name) : nullptr;
      return g ? g->rtype : "?";
    }
  }
  return "?";
}

// ---------------------------------------------------------------- confinement

struct ConfinementViolation {
  std::string cls;
  std::string member;  // method, "constr", or ghost name
  std::string reason;
};

struct ConfinementReport {
  bool ok = true;
  std::vector<ConfinementViolation> violations;
  void add(std::string c, std::string mem, std::string why) {
    ok = false;
    violations.push_back({std::move(c), std::move(mem), std::move(why)});
  }
};

// Does evaluating e dereference only internal-class objects? (Field reads and
// ghost calls must be on internal-typed bases; variables and literals are
// heap-free.)
inline bool reads_only_internal(const Module& m, const std::map<std::string, std::string>& env,
                                const ExprP& e, std::string* offender = nullptr) {
  if (!e) return true;
  switch (e->k) {
    case Expr::K::Val:
    case Expr::K::Var: return true;
    case Expr::K::Field:
    case Expr::K::Ghost: {
      std::string bt = static_type(m, env, e->a);
      if (!is_internal_type(m, bt)) {
        if (offender) *offender = to_string(e->a) + " : " + bt;
        return false;
      }
      if (!reads_only_internal(m, env, e->a, offender)) return false;
      if (e->k == Expr::K::Ghost) return reads_only_internal(m, env, e->b, offender);
      return true;
    }
    default:
      return reads_only_internal(m, env, e->a, offender) &&
             reads_only_internal(m, env, e->b, offender) &&
             reads_only_internal(m, env, e->c, offender);
  }
}

inline ConfinementReport check_confinement(const Module& m) {
  ConfinementReport rep;
  for (const auto& cls : m.classes) {
    std::vector<const MethodDef*> mds;
    if (cls.ctor) mds.push_back(&*cls.ctor);
    for (const auto& md : cls.methods) mds.push_back(&md);
    for (const MethodDef* mdp : mds) {
      const MethodDef& md = *mdp;
      std::string member = md.name.empty() ? "constr" : md.name;
      auto env = local_types(m, cls, md);
      if (is_confined_type(m, md.rtype))
        rep.add(cls.name, member, "declares confined return type " + md.rtype);
      std::function<void(const std::vector<StmtP>&)> walk = [&](const std::vector<StmtP>& body) {
        for (const auto& s : body) {
          switch (s->k) {
            case Stmt::K::Return: {
              std::string t = static_type(m, env, s->e);
              if (is_confined_type(m, t))
                rep.add(cls.name, member, "returns value of confined class " + t);
              break;
            }
            case Stmt::K::Call: {
              std::string rt = env.count(s->y) ? env.at(s->y) : "?";
              // (d) no-callback: internal code may not invoke methods on
              // external-typed receivers
              if (!is_internal_type(m, rt))
                rep.add(cls.name, member,
                        "calls method on external-typed receiver " + s->y + " : " + rt);
              const ClassDef* rc = m.cls(rt);
              const MethodDef* callee = rc ? rc->method(s->m) : nullptr;
              for (size_t i = 0; i < s->args.size(); ++i) {
                std::string at = static_type(m, env, s->args[i]);
                if (!is_confined_type(m, at)) continue;
                std::string pt = callee && i < callee->params.size() ? callee->params[i].type : "?";
                if (!is_internal_type(m, pt))
                  rep.add(cls.name, member,
                          "passes confined value " + to_string(s->args[i]) +
                              " to non-internal position");
              }
              break;
            }
            case Stmt::K::Write: {
              std::string vt = static_type(m, env, s->e);
              if (!is_confined_type(m, vt)) break;
              std::string ot = env.count(s->x) ? env.at(s->x) : "?";
              const ClassDef* oc = m.cls(ot);
              const Param* f = oc ? oc->field(s->f) : nullptr;
              if (!f || !is_internal_type(m, f->type))
                rep.add(cls.name, member,
                        "stores confined value into non-internal field " + s->f);
              break;
            }
            case Stmt::K::If:
              walk(s->thn);
              walk(s->els);
              break;
            default: break;
          }
        }
      };
      walk(md.body);
    }
    for (const auto& g : cls.ghosts) {
      if (!g.intrnl) continue;
      std::map<std::string, std::string> env;
      env["this"] = cls.name;
      env[g.param.name] = g.param.type;
      std::string offender;
      if (!reads_only_internal(m, env, g.body, &offender)) {
        rep.add(cls.name, g.name, "intrnl ghost body references external-typed " + offender);
        continue;
      }
      // every dereference must also *yield* an internal or primitive value:
      // an intrnl ghost may not expose an external-typed expression
      std::function<bool(const ExprP&)> internal_valued = [&](const ExprP& e) -> bool {
        if (!e) return true;
        if (e->k == Expr::K::Field || e->k == Expr::K::Ghost) {
          std::string t = static_type(m, env, e);
          if (t != "int" && t != "bool" && !is_internal_type(m, t)) {
            offender = to_string(e) + " : " + t;
            return false;
          }
        }
        return internal_valued(e->a) && internal_valued(e->b) && internal_valued(e->c);
      };
      if (!internal_valued(g.body))
        rep.add(cls.name, g.name, "intrnl ghost body references external-typed " + offender);
    }
  }
  return rep;
}

// ---------------------------------------------------------------- encapsulation

// Derivation tree over the encapsulation rule set. Rule names follow the
// rudimentary set the proofs cite: Enc_e-Obj, Enc_e-Int, Enc_e-Ghost,
// Enc-Field, Enc-Eq, Enc-=, Enc-Exp, Enc-Inside (plus structural And/Or/Not).
struct EncNode {
  std::string rule;
  std::string subject;
  std::vector<EncNode> children;
};

struct EncJudgment {
  bool ok = false;
  AssnP guard, subject;
  EncNode derivation;
  std::string failure;  // first failing subgoal when !ok
};

// Class facts declared by the guard: conjuncts of the form `x : C`.
inline std::map<std::string, std::string> guard_types(const AssnP& guard) {
  std::map<std::string, std::string> env;
  std::function<void(const AssnP&)> walk = [&](const AssnP& a) {
    if (!a) return;
    if (a->k == Assertion::K::And) {
      walk(a->a);
      walk(a->b);
    } else if (a->k == Assertion::K::HasClass && a->e->k == Expr::K::Var) {
      env[a->e->name] = a->cls;
    }
  };
  walk(guard);
  return env;
}

inline bool enc_expr(const Module& m, const std::map<std::string, std::string>& env,
                     const ExprP& e, EncNode& node, std::string& fail);

// An expression is encapsulated when its evaluation dereferences only internal
// objects: then only internal code can change its value.
inline bool enc_expr(const Module& m, const std::map<std::string, std::string>& env,
                     const ExprP& e, EncNode& node, std::string& fail) {
  node.subject = to_string(e);
  switch (e->k) {
    case Expr::K::Val:
      node.rule = "Enc_e-Obj";  // constants/objects: rigid values
      return true;
    case Expr::K::Var:
      node.rule = "Enc_e-Obj";  // variable bindings are untouched by reduction
      return true;
    case Expr::K::Field: {
      std::string bt = static_type(m, env, e->a);
      if (!is_internal_type(m, bt)) {
        fail = "field read on non-internal-typed base " + to_string(e->a) + " : " + bt;
        return false;
      }
      node.rule = "Enc-Field";
      EncNode sub;
      if (!enc_expr(m, env, e->a, sub, fail)) return false;
      node.children.push_back(std::move(sub));
      return true;
    }
    case Expr::K::Ghost: {
      std::string bt = static_type(m, env, e->a);
      const ClassDef* c = m.cls(bt);
      const GhostDef* g = c ? c->ghost(e->name) : nullptr;
      if (!g) {
        fail = "ghost call on non-internal-typed base " + to_string(e->a) + " : " + bt;
        return false;
      }
      std::string offender;
      std::map<std::string, std::string> genv{{"this", bt}, {g->param.name, g->param.type}};
      if (!g->intrnl && !reads_only_internal(m, genv, g->body, &offender)) {
        fail = "ghost " + e->name + " body reads external-typed " + offender;
        return false;
      }
      node.rule = g->intrnl ? "Enc_e-Ghost" : "Enc_e-Int";
      EncNode base, arg;
      if (!enc_expr(m, env, e->a, base, fail)) return false;
      if (!enc_expr(m, env, e->b, arg, fail)) return false;
      node.children.push_back(std::move(base));
      node.children.push_back(std::move(arg));
      return true;
    }
    case Expr::K::Add:
    case Expr::K::Sub:
    case Expr::K::Lt:
    case Expr::K::Eq: {
      node.rule = e->k == Expr::K::Eq ? "Enc-Eq" : "Enc_e-Int";
      for (const ExprP& sub : {e->a, e->b}) {
        EncNode c;
        if (!enc_expr(m, env, sub, c, fail)) return false;
        node.children.push_back(std::move(c));
      }
      return true;
    }
    case Expr::K::If: {
      node.rule = "Enc-Exp";
      for (const ExprP& sub : {e->a, e->b, e->c}) {
        EncNode c;
        if (!enc_expr(m, env, sub, c, fail)) return false;
        node.children.push_back(std::move(c));
      }
      return true;
    }
  }
  fail = "no rule applies to " + to_string(e);
  return false;
}

inline bool enc_assertion(const Module& m, const std::map<std::string, std::string>& env,
                          const AssnP& a, EncNode& node, std::string& fail) {
  node.subject = to_string(a);
  using K = Assertion::K;
  switch (a->k) {
    case K::Expr: {
      node.rule = "Enc-Exp";
      EncNode c;
      if (!enc_expr(m, env, a->e, c, fail)) return false;
      node.children.push_back(std::move(c));
      return true;
    }
    case K::HasClass: {
      node.rule = "Enc-=";  // class membership is rigid; value must be internal-read
      EncNode c;
      if (!enc_expr(m, env, a->e, c, fail)) return false;
      node.children.push_back(std::move(c));
      return true;
    }
    case K::Inside: {
      // inside⟨e⟩ is encapsulated whenever e denotes an object the guard types
      // (any class, including Object).
      std::string t = static_type(m, env, a->e);
      if (t.empty() || t == "?" || is_primitive_type(t)) {
        fail = "inside target " + to_string(a->e) + " has no object type under the guard";
        return false;
      }
      node.rule = "Enc-Inside";
      return true;
    }
    case K::Not:
    case K::Forall:
    case K::Exists: {
      node.rule = "Enc-Exp";
      EncNode c;
      if (!enc_assertion(m, env, a->a, c, fail)) return false;
      node.children.push_back(std::move(c));
      return true;
    }
    case K::And:
    case K::Or:
    case K::Implies: {
      node.rule = "Enc-Exp";
      for (const AssnP& sub : {a->a, a->b}) {
        EncNode c;
        if (!enc_assertion(m, env, sub, c, fail)) return false;
        node.children.push_back(std::move(c));
      }
      return true;
    }
    default:
      fail = "no encapsulation rule applies to " + to_string(a);
      return false;
  }
}

inline EncJudgment derive_encapsulation(const Module& m, const AssnP& guard,
                                        const AssnP& subject) {
  EncJudgment j;
  j.guard = guard;
  j.subject = subject;
  auto env = guard_types(guard);
  j.ok = enc_assertion(m, env, subject, j.derivation, j.failure);
  return j;
}

}  // namespace nec
