#pragma once

// LCF-style proof-script checker for the necessity logic: Hoare-triple axioms,
// per-method rules, per-step rules, emergent rules, the assertion-logic rule
// set, and a small built-in propositional engine that discharges validity side
// conditions (M ⊢ A).

#include <functional>

#include "assertions.hpp"
#include "confine.hpp"
#include "parse.hpp"

namespace nec {

// ---------------------------------------------------------------- judgments

struct HoareAxiom {
  std::string cls;                  // receiver class (internal)
  std::string meth;
  std::string recv;                 // receiver name bound in pre/post
  std::vector<std::string> params;  // argument names bound in pre/post
  AssnP pre, post;                  // post may mention `res`
};

struct Judgment {
  enum class K { Valid, Enc, Hoare, OnlyIfNext, OnlyThrough, OnlyIf };
  K k = K::Valid;
  AssnP a1, a2, a3;  // Valid: a3; Enc: a1 = guard, a3 = subject
  HoareAxiom hr;     // Hoare

  static Judgment valid(AssnP a) {
    Judgment j; j.k = K::Valid; j.a3 = std::move(a); return j;
  }
  static Judgment enc(AssnP guard, AssnP subject) {
    Judgment j; j.k = K::Enc; j.a1 = std::move(guard); j.a3 = std::move(subject); return j;
  }
  static Judgment hoare(HoareAxiom h) {
    Judgment j; j.k = K::Hoare; j.hr = std::move(h); return j;
  }
  static Judgment nec(K kk, AssnP x1, AssnP x2, AssnP x3) {
    Judgment j; j.k = kk; j.a1 = std::move(x1); j.a2 = std::move(x2); j.a3 = std::move(x3);
    return j;
  }
};

inline std::string to_string(const Judgment& j) {
  std::ostringstream os;
  switch (j.k) {
    case Judgment::K::Valid: os << "VALID " << to_string(j.a3); break;
    case Judgment::K::Enc:
      os << "ENC { " << to_string(j.a1) << " } { " << to_string(j.a3) << " }";
      break;
    case Judgment::K::Hoare: {
      os << "HOARE " << j.hr.cls << "." << j.hr.meth << "(" << j.hr.recv;
      for (const auto& p : j.hr.params) os << ", " << p;
      os << ") { " << to_string(j.hr.pre) << " } { " << to_string(j.hr.post) << " }";
      break;
    }
    case Judgment::K::OnlyIfNext:
      os << "FROM { " << to_string(j.a1) << " } NEXT { " << to_string(j.a2) << " } ONLYIF { "
         << to_string(j.a3) << " }";
      break;
    case Judgment::K::OnlyIf:
      os << "FROM { " << to_string(j.a1) << " } TO { " << to_string(j.a2) << " } ONLYIF { "
         << to_string(j.a3) << " }";
      break;
    case Judgment::K::OnlyThrough:
      os << "FROM { " << to_string(j.a1) << " } TO { " << to_string(j.a2) << " } ONLYTHROUGH { "
         << to_string(j.a3) << " }";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------- NNF & conjuncts

inline AssnP nnf(const AssnP& a, bool neg = false) {
  using K = Assertion::K;
  switch (a->k) {
    case K::Not: return nnf(a->a, !neg);
    case K::And:
    case K::Or: {
      K kk = (a->k == K::And) == !neg ? K::And : K::Or;
      return Assertion::bin(kk, nnf(a->a, neg), nnf(a->b, neg));
    }
    case K::Implies:
      return neg ? Assertion::and_(nnf(a->a, false), nnf(a->b, true))
                 : Assertion::or_(nnf(a->a, true), nnf(a->b, false));
    case K::Forall:
    case K::Exists: {
      K kk = (a->k == K::Forall) == !neg ? K::Forall : K::Exists;
      return Assertion::quant(kk, a->var, nnf(a->a, neg));
    }
    default:
      return neg ? Assertion::not_(a) : a;
  }
}

inline void flatten_conj(const AssnP& a, std::vector<AssnP>& out) {
  if (a->k == Assertion::K::And) {
    flatten_conj(a->a, out);
    flatten_conj(a->b, out);
  } else {
    out.push_back(a);
  }
}

inline std::vector<AssnP> conjuncts(const AssnP& a) {
  std::vector<AssnP> out;
  flatten_conj(a, out);
  return out;
}

inline AssnP conj_of(const std::vector<AssnP>& cs) {
  if (cs.empty()) return Assertion::true_();
  AssnP a = cs[0];
  for (size_t i = 1; i < cs.size(); ++i) a = Assertion::and_(a, cs[i]);
  return a;
}

// Multiset equality of top-level conjuncts, by canonical NNF print.
inline bool same_conjunct_set(const AssnP& x, const AssnP& y) {
  auto key = [](const AssnP& a) {
    std::vector<std::string> ks;
    for (const auto& c : conjuncts(nnf(a))) ks.push_back(to_string(nnf(c)));
    std::sort(ks.begin(), ks.end());
    return ks;
  };
  return key(x) == key(y);
}

inline bool same_nnf(const AssnP& x, const AssnP& y) {
  return to_string(nnf(x)) == to_string(nnf(y));
}

// substitution of a variable by an expression, capture-naive (binders in our
// scripts never shadow substituted variables)
inline ExprP subst_expr(const ExprP& e, const std::string& x, const ExprP& t) {
  if (!e) return e;
  switch (e->k) {
    case Expr::K::Val: return e;
    case Expr::K::Var: return e->name == x ? t : e;
    case Expr::K::If:
      return Expr::if_(subst_expr(e->a, x, t), subst_expr(e->b, x, t), subst_expr(e->c, x, t));
    case Expr::K::Field: return Expr::field(subst_expr(e->a, x, t), e->name);
    case Expr::K::Ghost:
      return Expr::ghost(subst_expr(e->a, x, t), e->name, subst_expr(e->b, x, t));
    default: return Expr::bin(e->k, subst_expr(e->a, x, t), subst_expr(e->b, x, t));
  }
}

inline AssnP subst_assn(const AssnP& a, const std::string& x, const ExprP& t) {
  if (!a) return a;
  using K = Assertion::K;
  auto r = std::make_shared<Assertion>(*a);
  if ((a->k == K::Forall || a->k == K::Exists) && a->var == x) return a;  // shadowed
  r->e = subst_expr(a->e, x, t);
  r->e2 = subst_expr(a->e2, x, t);
  r->caller = subst_expr(a->caller, x, t);
  for (auto& z : r->args) z = subst_expr(z, x, t);
  r->a = subst_assn(a->a, x, t);
  r->b = subst_assn(a->b, x, t);
  return r;
}

// ---------------------------------------------------------------- validity engine

// Refutation-based prover for M ⊢ A over the assertion AST: normalizes to NNF,
// saturates a fact set under congruence closure and the appendix-rule axioms
// (caller properties, class internality, field classes, inside/access,
// arithmetic comparisons), skolemizes existential facts, instantiates
// universal facts over occurring terms, and case-splits on disjunctive facts.
class ValidityEngine {
 public:
  explicit ValidityEngine(const Module& m) : m_(&m) {}

  bool proves(const AssnP& goal) {
    std::vector<AssnP> facts;
    facts.push_back(nnf(goal, /*neg=*/true));
    sk_counter_ = 0;
    budget_ = kBudget;
    field_terms_.clear();
    std::map<std::string, ExprP> terms;
    collect_terms(facts[0], terms);
    for (const auto& [ts, t] : terms)
      if (t->k == Expr::K::Field) field_terms_.insert(ts);
    return refute(facts, kSplitDepth);
  }

  bool proves_implication(const AssnP& from, const AssnP& to) {
    return proves(Assertion::implies(from, to));
  }

 private:
  const Module* m_;
  int sk_counter_ = 0;
  int budget_ = 0;
  std::set<std::string> field_terms_;  // field terms of the original problem
  static constexpr int kSplitDepth = 7;
  static constexpr size_t kMaxFacts = 700;
  static constexpr int kMaxRounds = 10;
  static constexpr int kBudget = 4000;  // total refutation nodes per query

  // --- term canonicalization under an equality map (string → representative)
  struct Canon {
    std::map<std::string, ExprP> rew;
    ExprP reduce(const ExprP& e) const {
      if (!e) return e;
      ExprP cur = rebuild(e);
      for (int i = 0; i < 32; ++i) {
        auto it = rew.find(nec::to_string(cur));
        if (it == rew.end()) break;
        cur = rebuild(it->second);
      }
      return cur;
    }
    ExprP rebuild(const ExprP& e) const {
      switch (e->k) {
        case Expr::K::Val:
        case Expr::K::Var: return lookup(e);
        case Expr::K::If:
          return lookup(Expr::if_(reduce(e->a), reduce(e->b), reduce(e->c)));
        case Expr::K::Field: return lookup(Expr::field(reduce(e->a), e->name));
        case Expr::K::Ghost:
          return lookup(Expr::ghost(reduce(e->a), e->name, reduce(e->b)));
        default: return lookup(Expr::bin(e->k, reduce(e->a), reduce(e->b)));
      }
    }
    ExprP lookup(const ExprP& e) const {
      auto it = rew.find(nec::to_string(e));
      return it == rew.end() ? e : it->second;
    }
    // orient toward the (shorter, lexicographically smaller) representative so
    // rewriting terminates
    void unite(const ExprP& a, const ExprP& b) {
      ExprP ra = reduce(a), rb = reduce(b);
      std::string sa = nec::to_string(ra), sb = nec::to_string(rb);
      if (sa == sb) return;
      bool a_small = sa.size() != sb.size() ? sa.size() < sb.size() : sa < sb;
      if (a_small) rew[sb] = ra;
      else rew[sa] = rb;
    }
  };

  AssnP canon_assn(const Canon& c, const AssnP& a) const {
    if (!a) return a;
    auto r = std::make_shared<Assertion>(*a);
    r->e = a->e ? c.reduce(a->e) : nullptr;
    r->e2 = a->e2 ? c.reduce(a->e2) : nullptr;
    r->caller = a->caller ? (a->caller->is_wildcard() ? a->caller : c.reduce(a->caller)) : nullptr;
    for (auto& z : r->args)
      if (!z->is_wildcard()) z = c.reduce(z);
    r->a = canon_assn(c, a->a);
    r->b = canon_assn(c, a->b);
    return r;
  }

  static bool is_atom(const AssnP& a) {
    using K = Assertion::K;
    switch (a->k) {
      case K::And: case K::Or: case K::Implies:
      case K::Forall: case K::Exists: case K::Not: return false;
      default: return true;
    }
  }

  static void collect_terms_expr(const ExprP& e, std::map<std::string, ExprP>& out) {
    if (!e || e->is_wildcard()) return;
    if (e->k == Expr::K::Val && !e->val.is_addr()) {
      // literals are poor quantifier witnesses except null
      if (!e->val.is_null()) return;
    }
    out[nec::to_string(e)] = e;
    collect_terms_expr(e->a, out);
    collect_terms_expr(e->b, out);
    collect_terms_expr(e->c, out);
  }
  static void collect_terms(const AssnP& a, std::map<std::string, ExprP>& out) {
    if (!a) return;
    collect_terms_expr(a->e, out);
    collect_terms_expr(a->e2, out);
    collect_terms_expr(a->caller, out);
    for (const auto& z : a->args) collect_terms_expr(z, out);
    collect_terms(a->a, out);
    collect_terms(a->b, out);
  }

  // does c2 (possibly with wildcards) subsume the concrete calls fact c1?
  static bool calls_subsumes(const AssnP& c2, const AssnP& c1) {
    if (c1->meth != c2->meth) return false;
    if (nec::to_string(c1->e) != nec::to_string(c2->e)) return false;
    if (!c2->caller->is_wildcard() &&
        nec::to_string(c1->caller) != nec::to_string(c2->caller))
      return false;
    if (c1->args.size() != c2->args.size()) return false;
    for (size_t i = 0; i < c1->args.size(); ++i)
      if (!c2->args[i]->is_wildcard() &&
          nec::to_string(c1->args[i]) != nec::to_string(c2->args[i]))
        return false;
    return true;
  }

  bool atom_trivially_true(const AssnP& a) const {
    using K = Assertion::K;
    if (a->k == K::Expr) {
      if (a->e->k == Expr::K::Val && a->e->val.is_bool()) return a->e->val.b;
      if (a->e->k == Expr::K::Eq && nec::to_string(a->e->a) == nec::to_string(a->e->b))
        return true;
      return false;
    }
    if (a->k == K::Access)  // reflexive through the frame clause is not assumed
      return false;
    return false;
  }
  bool atom_trivially_false(const AssnP& a) const {
    using K = Assertion::K;
    if (a->k == K::Expr) {
      if (a->e->k == Expr::K::Val && a->e->val.is_bool()) return !a->e->val.b;
      if (a->e->k == Expr::K::Lt && nec::to_string(a->e->a) == nec::to_string(a->e->b))
        return true;
    }
    return false;
  }

  bool refute(std::vector<AssnP> facts, int depth) {
    std::map<std::string, ExprP> skolems;
    return refute(std::move(facts), depth, skolems);
  }

  ExprP skolem_for(std::map<std::string, ExprP>& memo, const std::string& key) {
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    ExprP sk = Expr::var_("$sk" + std::to_string(++sk_counter_));
    memo.emplace(key, sk);
    return sk;
  }

  bool refute(std::vector<AssnP> facts, int depth, std::map<std::string, ExprP>& skolems) {
    if (--budget_ <= 0) return false;
    // saturation rounds: canonicalize, dedup, close under axioms
    Canon canon;
    for (int round = 0; round < kMaxRounds; ++round) {
      // (re)build equality map from scratch each round
      canon.rew.clear();
      for (const auto& f : facts)
        if (f->k == Assertion::K::Expr && f->e->k == Expr::K::Eq)
          canon.unite(f->e->a, f->e->b);

      std::vector<AssnP> c_facts;
      std::set<std::string> keys;
      for (const auto& f : facts) {
        AssnP cf = canon_assn(canon, f);
        if (keys.insert(to_string(cf)).second) c_facts.push_back(cf);
      }

      // contradiction?
      std::map<std::string, const AssnP*> pos;  // canonical atom → fact
      std::vector<AssnP> neg_atoms, calls_facts, not_calls;
      for (const auto& f : c_facts) {
        if (atom_trivially_false(f)) return true;
        if (f->k == Assertion::K::Not && atom_trivially_true(f->a)) return true;
        if (is_atom(f)) {
          pos[to_string(f)] = &f;
          if (f->k == Assertion::K::Calls) calls_facts.push_back(f);
        } else if (f->k == Assertion::K::Not && is_atom(f->a)) {
          neg_atoms.push_back(f->a);
          if (f->a->k == Assertion::K::Calls) not_calls.push_back(f->a);
        }
      }
      for (const auto& na : neg_atoms)
        if (pos.count(to_string(na))) return true;
      for (const auto& nc : not_calls)
        for (const auto& cf : calls_facts)
          if (calls_subsumes(nc, cf)) return true;
      // internal vs external on the same term
      for (const auto& f : c_facts) {
        if (f->k != Assertion::K::Internal) continue;
        AssnP ext = Assertion::pred(Assertion::K::External, f->e);
        if (pos.count(to_string(ext))) return true;
      }
      // e < e' together with e == e'
      for (const auto& f : c_facts) {
        if (f->k == Assertion::K::Expr && f->e->k == Expr::K::Lt &&
            to_string(f->e->a) == to_string(f->e->b))
          return true;
      }

      std::map<std::string, ExprP> terms;
      for (const auto& f : c_facts) collect_terms(f, terms);

      // axiom closure
      std::vector<AssnP> fresh;
      auto add = [&](const AssnP& a) {
        AssnP ca = canon_assn(canon, nnf(a));
        if (!keys.count(to_string(ca))) fresh.push_back(ca);
      };
      for (const auto& f : c_facts) {
        switch (f->k) {
          case Assertion::K::And:
            add(f->a);
            add(f->b);
            break;
          case Assertion::K::Or: {
            // unit propagation
            AssnP na = canon_assn(canon, nnf(f->a, true));
            AssnP nb = canon_assn(canon, nnf(f->b, true));
            if (keys.count(to_string(na))) add(f->b);
            if (keys.count(to_string(nb))) add(f->a);
            break;
          }
          case Assertion::K::Exists: {
            ExprP sk = skolem_for(skolems, "E:" + to_string(f));
            add(subst_assn(f->a, f->var, sk));
            break;
          }
          case Assertion::K::Forall:
            for (const auto& [ts, t] : terms) {
              (void)ts;
              add(subst_assn(f->a, f->var, t));
            }
            break;
          case Assertion::K::Calls:
            if (!f->caller->is_wildcard()) {
              add(Assertion::pred(Assertion::K::External, f->caller));
              add(Assertion::access(f->caller, f->e));
              for (const auto& z : f->args)
                if (!z->is_wildcard()) add(Assertion::access(f->caller, z));
            } else {
              // in an arising state some (external) caller makes the call;
              // name it so the caller rules can fire
              ExprP who = skolem_for(skolems, "C:" + to_string(f));
              add(Assertion::calls(who, f->e, f->meth, f->args));
            }
            break;
          case Assertion::K::HasClass: {
            if (m_->has(f->cls)) {
              add(Assertion::pred(Assertion::K::Internal, f->e));
              const ClassDef* cd = m_->cls(f->cls);
              if (cd->confined) add(Assertion::pred(Assertion::K::Inside, f->e));
              // Fld-Class, for field terms that already occur
              for (const auto& fd : cd->fields) {
                if (is_primitive_type(fd.type)) continue;
                ExprP ft = Expr::field(f->e, fd.name);
                std::string fts = to_string(ft);
                if (terms.count(fts) || field_terms_.count(fts))
                  add(Assertion::has_class(ft, fd.type));
              }
            } else {
              add(Assertion::pred(Assertion::K::External, f->e));
            }
            break;
          }
          case Assertion::K::Inside:
            // inside⟨y⟩ ∧ access⟨o,y⟩ ⟶ internal⟨o⟩
            for (const auto& g : c_facts)
              if (g->k == Assertion::K::Access &&
                  to_string(g->e2) == to_string(f->e))
                add(Assertion::pred(Assertion::K::Internal, g->e));
            break;
          case Assertion::K::Not:
            if (f->a->k == Assertion::K::Inside) {
              // ¬inside⟨e⟩ ⟶ ∃o.[external⟨o⟩ ∧ access⟨o,e⟩]
              ExprP sk = skolem_for(skolems, "NI:" + to_string(f));
              add(Assertion::and_(Assertion::pred(Assertion::K::External, sk),
                                  Assertion::access(sk, f->a->e)));
            } else if (f->a->k == Assertion::K::Expr && f->a->e->k == Expr::K::Lt) {
              // ¬(e<e') with e==e' facts handled by canonicalization already
            }
            break;
          case Assertion::K::Expr:
            if (f->e->k == Expr::K::Eq) {
              // e==e' ⟶ ¬(e<e') ∧ ¬(e'<e)
              add(Assertion::not_(Assertion::expr(Expr::bin(Expr::K::Lt, f->e->a, f->e->b))));
              add(Assertion::not_(Assertion::expr(Expr::bin(Expr::K::Lt, f->e->b, f->e->a))));
            } else if (f->e->k == Expr::K::Lt) {
              add(Assertion::not_(Assertion::expr(Expr::bin(Expr::K::Eq, f->e->a, f->e->b))));
            }
            break;
          default:
            break;
        }
      }
      // inside + ¬internal is impossible for the inside-bearing object itself?
      // (not a rule of the system; omitted)

      if (fresh.empty() || c_facts.size() > kMaxFacts) {
        facts = c_facts;
        break;
      }
      facts = c_facts;
      for (auto& f : fresh) facts.push_back(std::move(f));
      if (round + 1 == kMaxRounds) {
        // fall through with what we have
      }
    }

    if (depth <= 0) return false;
    // case split on disjunctive facts; the chosen disjunction is consumed
    for (size_t fi = 0; fi < facts.size(); ++fi) {
      const AssnP& f = facts[fi];
      if (f->k != Assertion::K::Or) continue;
      std::vector<AssnP> left, right;
      for (size_t gi = 0; gi < facts.size(); ++gi) {
        if (gi == fi) continue;
        left.push_back(facts[gi]);
        right.push_back(facts[gi]);
      }
      left.push_back(f->a);
      right.push_back(f->b);
      std::map<std::string, ExprP> skl = skolems, skr = skolems;
      if (refute(std::move(left), depth - 1, skl) && refute(std::move(right), depth - 1, skr))
        return true;
      if (budget_ <= 0) return false;
    }
    return false;
  }
};

inline bool proves_valid(const Module& m, const AssnP& goal) {
  return ValidityEngine(m).proves(goal);
}

// ---------------------------------------------------------------- rule checking

// classical assertions: expressions, class membership, and logical structure
// only (no access/internal/external/inside/calls)
inline bool is_classical(const AssnP& a) {
  if (!a) return true;
  using K = Assertion::K;
  switch (a->k) {
    case K::Access: case K::Internal: case K::External:
    case K::Inside: case K::Calls: return false;
    default: return is_classical(a->a) && is_classical(a->b);
  }
}

namespace detail {

// decompose a per-method antecedent A1 ∧ x:C ∧ calls(_, x.m(z̄)); returns
// (class, method, receiver) and the leftover conjuncts
struct PerMethodShape {
  std::string cls, meth, recv;
  std::vector<ExprP> args;
  std::vector<AssnP> rest;
};

inline std::optional<PerMethodShape> split_per_method(const AssnP& a1) {
  PerMethodShape out;
  const Assertion* call = nullptr;
  std::vector<AssnP> cs = conjuncts(a1);
  for (const auto& c : cs)
    if (c->k == Assertion::K::Calls) {
      if (call) return std::nullopt;  // exactly one calls conjunct
      call = c.get();
    }
  if (!call || call->e->k != Expr::K::Var) return std::nullopt;
  if (!call->caller->is_wildcard()) return std::nullopt;
  out.recv = call->e->name;
  out.meth = call->meth;
  out.args = call->args;
  const Assertion* klass = nullptr;
  for (const auto& c : cs) {
    if (c->k == Assertion::K::HasClass && c->e->k == Expr::K::Var &&
        c->e->name == out.recv && !klass) {
      klass = c.get();
      continue;
    }
    if (c->k == Assertion::K::Calls) continue;
    out.rest.push_back(c);
  }
  if (!klass) return std::nullopt;
  out.cls = klass->cls;
  return out;
}

inline std::vector<std::string> sorted_keys(const std::vector<AssnP>& cs) {
  std::vector<std::string> ks;
  for (const auto& c : cs) ks.push_back(to_string(nnf(c)));
  std::sort(ks.begin(), ks.end());
  return ks;
}

}  // namespace detail

// Checks one inference. `rule` names the rule, `prems` are the already-checked
// premise judgments in FROM order, `concl` is the claimed conclusion.
// Returns an error message, or nullopt if the inference is valid.
inline std::optional<std::string> check_rule(const Module& m, const std::string& rule,
                                             const std::vector<Judgment>& prems,
                                             const Judgment& concl) {
  using K = Judgment::K;
  auto err = [](const std::string& s) { return std::optional<std::string>(s); };
  auto need = [&](size_t n) -> std::optional<std::string> {
    if (prems.size() != n)
      return "rule expects " + std::to_string(n) + " premises, got " +
             std::to_string(prems.size());
    return std::nullopt;
  };
  auto want_kind = [&](const Judgment& j, K k, const char* what) -> std::optional<std::string> {
    if (j.k != k) return std::string(what) + " has the wrong judgment form: " + to_string(j);
    return std::nullopt;
  };
  ValidityEngine eng(m);
  auto entails = [&](const AssnP& from, const AssnP& to, const char* what)
      -> std::optional<std::string> {
    if (!eng.proves_implication(from, to))
      return std::string("side condition not provable (") + what + "): " + to_string(from) +
             "  ==>  " + to_string(to);
    return std::nullopt;
  };

  // ---- axioms and validity
  if (rule == "Axiom") {
    if (auto e = need(0)) return e;
    if (auto e = want_kind(concl, K::Hoare, "conclusion")) return e;
    if (!m.has(concl.hr.cls)) return err("Hoare axiom on unknown class " + concl.hr.cls);
    const ClassDef* cd = m.cls(concl.hr.cls);
    if (!cd->method(concl.hr.meth))
      return err("Hoare axiom on unknown method " + concl.hr.cls + "." + concl.hr.meth);
    if (!is_classical(concl.hr.pre) || !is_classical(concl.hr.post))
      return err("Hoare pre/post conditions must be classical assertions");
    return std::nullopt;
  }
  if (rule == "HoareCons") {
    if (auto e = need(1)) return e;
    if (auto e = want_kind(prems[0], K::Hoare, "premise")) return e;
    if (auto e = want_kind(concl, K::Hoare, "conclusion")) return e;
    const HoareAxiom& p = prems[0].hr;
    const HoareAxiom& c = concl.hr;
    if (p.cls != c.cls || p.meth != c.meth || p.recv != c.recv || p.params != c.params)
      return err("HoareCons premise and conclusion describe different methods or bindings");
    if (!is_classical(c.pre) || !is_classical(c.post))
      return err("Hoare pre/post conditions must be classical assertions");
    if (auto e = entails(c.pre, p.pre, "precondition strengthening")) return e;
    if (auto e = entails(p.post, c.post, "postcondition weakening")) return e;
    return std::nullopt;
  }
  if (rule == "Taut") {
    if (auto e = need(0)) return e;
    if (auto e = want_kind(concl, K::Valid, "conclusion")) return e;
    if (!eng.proves(concl.a3))
      return err("assertion not provable by the validity engine: " + to_string(concl.a3));
    return std::nullopt;
  }
  if (rule == "EncAuto") {
    if (auto e = need(0)) return e;
    if (auto e = want_kind(concl, K::Enc, "conclusion")) return e;
    EncJudgment ej = derive_encapsulation(m, concl.a1, concl.a3);
    if (!ej.ok) return err("encapsulation not derivable: " + ej.failure);
    return std::nullopt;
  }

  // ---- assertion-logic rule schemas (conclusions are Valid judgments)
  auto schema = [&](const std::function<std::optional<std::string>(const AssnP&)>& f)
      -> std::optional<std::string> {
    if (auto e = need(0)) return e;
    if (auto e = want_kind(concl, K::Valid, "conclusion")) return e;
    return f(concl.a3);
  };
  if (rule == "CallerExt" || rule == "CallerRecv" || rule == "CallerArgs") {
    return schema([&](const AssnP& a) -> std::optional<std::string> {
      if (a->k != Assertion::K::Implies || a->a->k != Assertion::K::Calls)
        return err("expected calls(..) ==> .. schema");
      const AssnP& c = a->a;
      if (c->caller->is_wildcard()) return err("caller must not be a wildcard");
      const AssnP& rhs = a->b;
      if (rule == "CallerExt") {
        if (rhs->k == Assertion::K::External && same_expr(rhs->e, c->caller)) return std::nullopt;
        return err("conclusion must be external of the caller");
      }
      if (rule == "CallerRecv") {
        if (rhs->k == Assertion::K::Access && same_expr(rhs->e, c->caller) &&
            same_expr(rhs->e2, c->e))
          return std::nullopt;
        return err("conclusion must be access of caller to receiver");
      }
      if (rhs->k == Assertion::K::Access && same_expr(rhs->e, c->caller))
        for (const auto& z : c->args)
          if (!z->is_wildcard() && same_expr(rhs->e2, z)) return std::nullopt;
      return err("conclusion must be access of caller to one argument");
    });
  }
  if (rule == "ClassInt" || rule == "InsideInt") {
    return schema([&](const AssnP& a) -> std::optional<std::string> {
      if (a->k != Assertion::K::Implies || a->a->k != Assertion::K::HasClass)
        return err("expected e : C ==> .. schema");
      if (!m.has(a->a->cls)) return err("class " + a->a->cls + " is not in the module");
      if (rule == "InsideInt" && !m.cls(a->a->cls)->confined)
        return err("class " + a->a->cls + " is not confined");
      Assertion::K want = rule == "ClassInt" ? Assertion::K::Internal : Assertion::K::Inside;
      if (a->b->k == want && same_expr(a->b->e, a->a->e)) return std::nullopt;
      return err("conclusion does not match the schema");
    });
  }
  if (rule == "FldClass") {
    return schema([&](const AssnP& a) -> std::optional<std::string> {
      if (a->k != Assertion::K::Implies || a->a->k != Assertion::K::HasClass ||
          a->b->k != Assertion::K::HasClass)
        return err("expected e : C ==> e.f : D schema");
      if (!m.has(a->a->cls)) return err("class " + a->a->cls + " is not in the module");
      const AssnP& rhs = a->b;
      if (rhs->e->k != Expr::K::Field || !same_expr(rhs->e->a, a->a->e))
        return err("conclusion must classify a field of the antecedent expression");
      const Param* fd = m.cls(a->a->cls)->field(rhs->e->name);
      if (!fd || fd->type != rhs->cls)
        return err("no field " + rhs->e->name + " : " + rhs->cls + " in " + a->a->cls);
      return std::nullopt;
    });
  }
  if (rule == "Absurd") {
    return schema([&](const AssnP& a) -> std::optional<std::string> {
      if (a->k == Assertion::K::Implies && same_nnf(a->a, Assertion::false_()))
        return std::nullopt;
      return err("expected false ==> A schema");
    });
  }
  if (rule == "ExcludedMiddle") {
    return schema([&](const AssnP& a) -> std::optional<std::string> {
      if (a->k == Assertion::K::Or && same_nnf(a->b, nnf(a->a, true))) return std::nullopt;
      return err("expected A || !A schema");
    });
  }

  // ---- per-method rules
  if (rule == "If1Classical" || rule == "If1Inside") {
    if (auto e = need(1)) return e;
    if (auto e = want_kind(prems[0], K::Hoare, "premise")) return e;
    if (auto e = want_kind(concl, K::OnlyIfNext, "conclusion")) return e;
    auto shape = detail::split_per_method(concl.a1);
    if (!shape)
      return err("conclusion antecedent is not of the form A && x : C && calls(_, x.m(..))");
    const HoareAxiom& h = prems[0].hr;
    if (h.cls != shape->cls || h.meth != shape->meth)
      return err("Hoare premise is about " + h.cls + "." + h.meth + ", conclusion about " +
                 shape->cls + "." + shape->meth);
    if (h.recv != shape->recv) return err("receiver name mismatch with the Hoare premise");
    if (shape->args.size() != h.params.size())
      return err("argument count mismatch with the Hoare premise");
    for (size_t i = 0; i < shape->args.size(); ++i)
      if (shape->args[i]->k != Expr::K::Var || shape->args[i]->name != h.params[i])
        return err("call arguments must name the Hoare premise parameters in order");
    if (!is_classical(concl.a3)) return err("the necessary condition must be classical here");
    std::vector<AssnP> want_pre;
    AssnP rest_conj;
    if (rule == "If1Classical") {
      if (!is_classical(concl.a2)) return err("A2 must be classical for this rule");
      for (const auto& c : shape->rest) {
        if (!is_classical(c)) return err("antecedent context must be classical for this rule");
        want_pre.push_back(c);
      }
      want_pre.push_back(Assertion::has_class(Expr::var_(shape->recv), shape->cls));
      want_pre.push_back(Assertion::not_(concl.a3));
      if (!same_nnf(h.post, Assertion::not_(concl.a2)))
        return err("Hoare postcondition must be the negation of A2");
    } else {
      if (concl.a2->k != Assertion::K::Not || concl.a2->a->k != Assertion::K::Inside)
        return err("A2 must be of the form !inside(y) for this rule");
      ExprP y = concl.a2->a->e;
      bool dropped = false;
      for (const auto& c : shape->rest) {
        if (!dropped && c->k == Assertion::K::Inside && same_expr(c->e, y)) {
          dropped = true;  // inside(y) itself cannot appear in a classical pre
          continue;
        }
        if (!is_classical(c)) return err("antecedent context must be classical for this rule");
        want_pre.push_back(c);
      }
      if (!dropped) return err("antecedent must contain the conjunct inside(y)");
      want_pre.push_back(Assertion::has_class(Expr::var_(shape->recv), shape->cls));
      want_pre.push_back(Assertion::not_(concl.a3));
      AssnP want_post = Assertion::not_(Assertion::expr(
          Expr::bin(Expr::K::Eq, Expr::var_("res"), y)));
      if (!same_nnf(h.post, want_post))
        return err("Hoare postcondition must be !(res == y) for y the protected object");
    }
    if (detail::sorted_keys(want_pre) != detail::sorted_keys(conjuncts(h.pre)))
      return err("Hoare precondition does not match the required shape; expected conjuncts: " +
                 to_string(conj_of(want_pre)));
    return std::nullopt;
  }

  if (rule == "If1Absurd") {
    if (auto e = need(0)) return e;
    if (auto e = want_kind(concl, K::OnlyIfNext, "conclusion")) return e;
    auto shape = detail::split_per_method(concl.a1);
    if (!shape)
      return err("conclusion antecedent is not of the form A && x : C && calls(_, x.m(..))");
    if (!m.has(shape->cls) || !m.cls(shape->cls)->confined)
      return err("receiver class " + shape->cls + " is not a confined class of the module");
    return std::nullopt;
  }

  if (rule == "If1Internal") {
    if (auto e = want_kind(concl, K::OnlyIfNext, "conclusion")) return e;
    std::vector<const Judgment*> methods;
    const Judgment* encp = nullptr;
    for (const auto& p : prems) {
      if (p.k == K::OnlyIfNext) {
        methods.push_back(&p);
      } else if (p.k == K::Enc) {
        if (encp) return err("more than one encapsulation premise");
        encp = &p;
      } else {
        return err("unexpected premise form: " + to_string(p));
      }
    }
    if (!encp) return err("an encapsulation premise is required");
    std::set<std::string> fv = free_vars(concl.a1);
    for (const auto& v : free_vars(concl.a2)) fv.insert(v);
    for (const auto& v : free_vars(concl.a3)) fv.insert(v);
    std::vector<std::string> base_keys = detail::sorted_keys(conjuncts(concl.a1));
    // every (class, method) pair of the module must be covered by a premise
    std::set<std::string> covered;
    for (const Judgment* p : methods) {
      if (!same_nnf(p->a2, concl.a2) || !same_nnf(p->a3, concl.a3))
        return err("per-method premise changes A2 or A3: " + to_string(*p));
      auto shape = detail::split_per_method(p->a1);
      if (!shape)
        return err("premise antecedent is not of the form A1 && x : C && calls(_, x.m(..)): " +
                   to_string(*p));
      if (detail::sorted_keys(shape->rest) != base_keys)
        return err("premise antecedent context differs from the conclusion antecedent: " +
                   to_string(*p));
      if (fv.count(shape->recv))
        return err("receiver variable " + shape->recv + " must be fresh for the conclusion");
      std::set<std::string> argnames;
      for (const auto& z : shape->args) {
        if (z->is_wildcard()) continue;
        if (z->k != Expr::K::Var || fv.count(z->name) || !argnames.insert(z->name).second)
          return err("call arguments must be distinct fresh variables or wildcards: " +
                     to_string(*p));
      }
      if (!m.has(shape->cls)) return err("premise class " + shape->cls + " not in module");
      const ClassDef* cd = m.cls(shape->cls);
      const MethodDef* md = cd->method(shape->meth);
      if (!md) return err("premise method " + shape->cls + "." + shape->meth + " not in module");
      if (shape->args.size() != md->params.size())
        return err("premise arity differs from " + shape->cls + "." + shape->meth);
      covered.insert(shape->cls + "." + shape->meth);
    }
    for (const auto& cd : m.classes)
      for (const auto& md : cd.methods)
        if (!covered.count(cd.name + "." + md.name))
          return err("no per-method premise for " + cd.name + "." + md.name);
    if (auto e = entails(concl.a1, Assertion::and_(encp->a1, encp->a3),
                         "A1 establishes the encapsulation guard and subject"))
      return e;
    if (auto e = entails(Assertion::and_(encp->a3, concl.a2), Assertion::false_(),
                         "A2 refutes the encapsulated subject"))
      return e;
    if (auto e = entails(concl.a1, Assertion::not_(concl.a2), "A1 excludes A2")) return e;
    return std::nullopt;
  }

  // ---- consequence
  if (rule == "If1Cons" || rule == "IfCons" || rule == "ThroughCons") {
    K kk = rule == "If1Cons" ? K::OnlyIfNext : rule == "IfCons" ? K::OnlyIf : K::OnlyThrough;
    if (auto e = need(1)) return e;
    if (auto e = want_kind(prems[0], kk, "premise")) return e;
    if (auto e = want_kind(concl, kk, "conclusion")) return e;
    if (auto e = entails(concl.a1, prems[0].a1, "antecedent strengthening")) return e;
    if (auto e = entails(concl.a2, prems[0].a2, "consequent strengthening")) return e;
    if (kk == K::OnlyThrough) {
      if (auto e = entails(prems[0].a3, concl.a3, "necessary condition weakening")) return e;
    } else {
      // the start state satisfies A1, so it may be assumed when weakening
      if (auto e = entails(Assertion::and_(concl.a1, prems[0].a3), concl.a3,
                           "necessary condition weakening"))
        return e;
    }
    return std::nullopt;
  }

  // ---- disjunction and quantifier rules
  if (rule == "If1OrE" || rule == "IfOrE") {
    K kk = rule == "If1OrE" ? K::OnlyIfNext : K::OnlyIf;
    if (auto e = need(2)) return e;
    if (auto e = want_kind(prems[0], kk, "first premise")) return e;
    if (auto e = want_kind(prems[1], K::OnlyThrough, "second premise")) return e;
    if (auto e = want_kind(concl, kk, "conclusion")) return e;
    if (!same_nnf(prems[0].a1, concl.a1) || !same_nnf(prems[0].a2, concl.a2))
      return err("first premise must share A1 and A2 with the conclusion");
    if (prems[0].a3->k != Assertion::K::Or || !same_nnf(prems[0].a3->a, concl.a3))
      return err("first premise must conclude A || A' with A the conclusion's condition");
    AssnP aprime = prems[0].a3->b;
    if (!same_conjunct_set(prems[1].a1, Assertion::and_(concl.a1, aprime)))
      return err("second premise must start from A1 && A'");
    if (!same_nnf(prems[1].a2, concl.a2) || !same_nnf(prems[1].a3, Assertion::false_()))
      return err("second premise must show A2 unreachable (through false)");
    return std::nullopt;
  }
  if (rule == "If1Exists" || rule == "IfExists") {
    K kk = rule == "If1Exists" ? K::OnlyIfNext : K::OnlyIf;
    if (auto e = need(1)) return e;
    if (auto e = want_kind(prems[0], kk, "premise")) return e;
    if (auto e = want_kind(concl, kk, "conclusion")) return e;
    if (concl.a1->k != Assertion::K::Exists)
      return err("conclusion antecedent must be existential");
    if (!same_nnf(prems[0].a2, concl.a2) || !same_nnf(prems[0].a3, concl.a3))
      return err("premise must share A2 and A3 with the conclusion");
    std::string v = concl.a1->var;
    const AssnP& body = concl.a1->a;
    std::set<std::string> eigen_bad = free_vars(concl.a1);
    for (const auto& x : free_vars(concl.a2)) eigen_bad.insert(x);
    for (const auto& x : free_vars(concl.a3)) eigen_bad.insert(x);
    std::set<std::string> cands = free_vars(prems[0].a1);
    cands.insert(v);
    for (const auto& y : cands) {
      if (!same_nnf(subst_assn(body, v, Expr::var_(y)), prems[0].a1)) continue;
      if (eigen_bad.count(y))
        return err("eigenvariable " + y + " occurs free in the conclusion");
      return std::nullopt;
    }
    return err("premise antecedent is not an instance of the existential body");
  }
  if (rule == "IfOrI2") {
    if (auto e = need(2)) return e;
    if (auto e = want_kind(prems[0], K::OnlyIf, "first premise")) return e;
    if (auto e = want_kind(prems[1], K::OnlyIf, "second premise")) return e;
    if (auto e = want_kind(concl, K::OnlyIf, "conclusion")) return e;
    if (!same_nnf(prems[0].a1, concl.a1) || !same_nnf(prems[1].a1, concl.a1))
      return err("premises must share the conclusion's antecedent");
    if (!same_nnf(prems[0].a3, concl.a3) || !same_nnf(prems[1].a3, concl.a3))
      return err("premises must share the conclusion's necessary condition");
    if (concl.a2->k != Assertion::K::Or || !same_nnf(concl.a2->a, prems[0].a2) ||
        !same_nnf(concl.a2->b, prems[1].a2))
      return err("conclusion consequent must be the disjunction of the premise consequents");
    return std::nullopt;
  }

  // ---- from one-step to multi-step judgments
  if (rule == "Changes") {
    if (auto e = need(1)) return e;
    if (auto e = want_kind(prems[0], K::OnlyIfNext, "premise")) return e;
    if (auto e = want_kind(concl, K::OnlyThrough, "conclusion")) return e;
    // split the antecedent into rigid class-membership conjuncts and the core
    std::vector<AssnP> core;
    for (const auto& c : conjuncts(prems[0].a1))
      if (c->k != Assertion::K::HasClass) core.push_back(c);
    if (core.empty()) return err("premise antecedent has no non-rigid core to negate");
    if (!same_nnf(prems[0].a2, Assertion::not_(conj_of(core))))
      return err("premise must be a change: A2 must be the negation of A1's core");
    if (!same_nnf(concl.a1, prems[0].a1) || !same_nnf(concl.a2, prems[0].a2))
      return err("conclusion must keep the premise's A1 and A2");
    bool plain = same_nnf(concl.a3, prems[0].a3);
    bool strengthened =
        same_conjunct_set(concl.a3, Assertion::and_(prems[0].a1, prems[0].a3));
    if (!plain && !strengthened)
      return err("conclusion condition must be A3 or A1 && A3 of the premise");
    return std::nullopt;
  }
  if (rule == "If") {
    if (auto e = need(1)) return e;
    if (auto e = want_kind(prems[0], K::OnlyIf, "premise")) return e;
    if (auto e = want_kind(concl, K::OnlyThrough, "conclusion")) return e;
    if (!same_nnf(prems[0].a1, concl.a1) || !same_nnf(prems[0].a2, concl.a2) ||
        !same_nnf(prems[0].a3, concl.a3))
      return err("conclusion must restate the premise as a through-judgment");
    return std::nullopt;
  }
  if (rule == "End") {
    if (auto e = need(0)) return e;
    if (auto e = want_kind(concl, K::OnlyThrough, "conclusion")) return e;
    if (!same_nnf(concl.a2, concl.a3))
      return err("the final state itself is the only free necessary condition here");
    return std::nullopt;
  }
  if (rule == "Trans1" || rule == "Trans2") {
    if (auto e = need(2)) return e;
    if (auto e = want_kind(prems[0], K::OnlyThrough, "first premise")) return e;
    if (auto e = want_kind(prems[1], K::OnlyThrough, "second premise")) return e;
    if (auto e = want_kind(concl, K::OnlyThrough, "conclusion")) return e;
    if (rule == "Trans1") {
      if (!same_nnf(prems[0].a1, concl.a1) || !same_nnf(prems[1].a1, concl.a1))
        return err("both premises must share the conclusion's antecedent");
      if (!same_nnf(prems[0].a2, concl.a2))
        return err("first premise must share the conclusion's consequent");
      if (!same_nnf(prems[1].a2, prems[0].a3))
        return err("second premise must continue from the first premise's condition");
      if (!same_nnf(prems[1].a3, concl.a3))
        return err("conclusion condition must come from the second premise");
    } else {
      if (!same_nnf(prems[0].a1, concl.a1))
        return err("first premise must share the conclusion's antecedent");
      if (!same_nnf(prems[0].a2, concl.a2) || !same_nnf(prems[1].a2, concl.a2))
        return err("both premises must share the conclusion's consequent");
      if (!same_nnf(prems[1].a1, prems[0].a3))
        return err("second premise must start from the first premise's condition");
      if (!same_nnf(prems[1].a3, concl.a3))
        return err("conclusion condition must come from the second premise");
    }
    return std::nullopt;
  }
  if (rule == "IfTrans") {
    if (auto e = need(2)) return e;
    if (auto e = want_kind(prems[0], K::OnlyThrough, "first premise")) return e;
    if (auto e = want_kind(prems[1], K::OnlyIf, "second premise")) return e;
    if (auto e = want_kind(concl, K::OnlyIf, "conclusion")) return e;
    if (!same_nnf(prems[0].a1, concl.a1) || !same_nnf(prems[1].a1, concl.a1))
      return err("both premises must share the conclusion's antecedent");
    if (!same_nnf(prems[0].a2, concl.a2))
      return err("first premise must share the conclusion's consequent");
    if (!same_nnf(prems[1].a2, prems[0].a3))
      return err("second premise must consume the first premise's condition");
    if (!same_nnf(prems[1].a3, concl.a3))
      return err("conclusion condition must come from the second premise");
    return std::nullopt;
  }
  if (rule == "IfClass") {
    if (auto e = need(0)) return e;
    if (auto e = want_kind(concl, K::OnlyIf, "conclusion")) return e;
    if (concl.a1->k != Assertion::K::HasClass)
      return err("antecedent must be a class-membership assertion");
    if (!same_nnf(concl.a2, Assertion::not_(concl.a1)))
      return err("consequent must be the negation of the antecedent");
    if (!same_nnf(concl.a3, Assertion::false_()))
      return err("class membership never changes, so the condition must be false");
    return std::nullopt;
  }
  if (rule == "IfStart") {
    if (auto e = need(0)) return e;
    if (auto e = want_kind(concl, K::OnlyIf, "conclusion")) return e;
    if (!same_nnf(concl.a3, concl.a1))
      return err("the condition must be the antecedent itself");
    return std::nullopt;
  }

  return err("unknown rule: " + rule);
}

// built-in rule registry (deterministic order, used by the CLI and tests)
inline const std::vector<std::string>& rule_names() {
  static const std::vector<std::string> names = {
      "Axiom",        "HoareCons",   "Taut",      "EncAuto",     "CallerExt",
      "CallerRecv",   "CallerArgs",  "ClassInt",  "InsideInt",   "FldClass",
      "Absurd",       "ExcludedMiddle",
      "If1Classical", "If1Inside",   "If1Absurd", "If1Internal", "If1Cons",
      "IfCons",       "ThroughCons", "If1OrE",    "IfOrE",       "If1Exists",
      "IfExists",     "IfOrI2",      "Changes",   "If",          "End",
      "Trans1",       "Trans2",      "IfTrans",   "IfClass",     "IfStart"};
  return names;
}

// ---------------------------------------------------------------- proof scripts

struct ProofStep {
  std::string label;
  std::string rule;
  Judgment j;
  std::vector<std::string> from;
  int line = 0;
};

struct ProofScript {
  std::vector<ProofStep> steps;
};

namespace detail {

// grabs the next { ... } block (assertions contain no braces)
inline std::string brace_block(const std::string& s, size_t& pos, int line) {
  size_t open = s.find('{', pos);
  if (open == std::string::npos) throw ParseError(line, 1, "missing '{' in proof step");
  size_t close = s.find('}', open + 1);
  if (close == std::string::npos) throw ParseError(line, 1, "missing '}' in proof step");
  pos = close + 1;
  return s.substr(open + 1, close - open - 1);
}

inline void skip_ws(const std::string& s, size_t& pos) {
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
}

inline std::string word(const std::string& s, size_t& pos) {
  skip_ws(s, pos);
  size_t start = pos;
  while (pos < s.size() &&
         (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_' || s[pos] == '\''))
    ++pos;
  return s.substr(start, pos - start);
}

inline bool keyword_at(const std::string& s, size_t pos, const std::string& kw) {
  size_t p = pos;
  skip_ws(s, p);
  return s.compare(p, kw.size(), kw) == 0;
}

}  // namespace detail

// One step per logical line:
//   label: CONCLUDE <judgment> BY <rule> [FROM l1, l2, ...]
// where <judgment> is one of
//   VALID { A }
//   ENC { guard } { subject }
//   HOARE C.m(recv, p1, ...) { pre } { post }
//   FROM { A1 } NEXT { A2 } ONLYIF { A3 }
//   FROM { A1 } TO { A2 } ONLYIF { A3 }
//   FROM { A1 } TO { A2 } ONLYTHROUGH { A3 }
// Lines that do not start a new step continue the previous one; '#' or '//'
// start a comment.
inline ProofScript parse_proof_script(const std::string& text) {
  // join logical steps
  std::vector<std::pair<int, std::string>> logical;
  {
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      size_t h = raw.find('#');
      if (h != std::string::npos) raw.erase(h);
      h = raw.find("//");
      if (h != std::string::npos) raw.erase(h);
      // a new step starts with "name :" before any brace
      size_t colon = raw.find(':');
      size_t brace = raw.find('{');
      bool starts = false;
      if (colon != std::string::npos && (brace == std::string::npos || colon < brace)) {
        std::string head = raw.substr(0, colon);
        starts = !head.empty() &&
                 head.find_first_not_of(
                     "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_' ") ==
                     std::string::npos &&
                 head.find_first_not_of(' ') != std::string::npos;
      }
      if (starts) {
        logical.emplace_back(lineno, raw);
      } else if (!logical.empty()) {
        logical.back().second += " " + raw;
      } else if (raw.find_first_not_of(" \t\r") != std::string::npos) {
        throw ParseError(lineno, 1, "text before the first labelled step");
      }
    }
  }

  ProofScript script;
  for (auto& [lineno, s] : logical) {
    if (s.find_first_not_of(" \t\r") == std::string::npos) continue;
    ProofStep st;
    st.line = lineno;
    size_t pos = 0;
    size_t colon = s.find(':');
    st.label = s.substr(0, colon);
    // trim
    st.label.erase(0, st.label.find_first_not_of(' '));
    st.label.erase(st.label.find_last_not_of(' ') + 1);
    while (st.label.find("  ") != std::string::npos)
      st.label.replace(st.label.find("  "), 2, " ");
    if (st.label.empty()) throw ParseError(lineno, 1, "empty step label");
    pos = colon + 1;
    if (detail::word(s, pos) != "CONCLUDE")
      throw ParseError(lineno, 1, "expected CONCLUDE after the step label");

    auto assn = [&](size_t& p) { return parse_assertion_text(detail::brace_block(s, p, lineno)); };
    std::string kw = detail::word(s, pos);
    if (kw == "VALID") {
      st.j = Judgment::valid(assn(pos));
    } else if (kw == "ENC") {
      AssnP g = assn(pos);
      st.j = Judgment::enc(g, assn(pos));
    } else if (kw == "HOARE") {
      HoareAxiom h;
      h.cls = detail::word(s, pos);
      detail::skip_ws(s, pos);
      if (pos >= s.size() || s[pos] != '.') throw ParseError(lineno, 1, "expected '.' in HOARE");
      ++pos;
      h.meth = detail::word(s, pos);
      detail::skip_ws(s, pos);
      if (pos >= s.size() || s[pos] != '(') throw ParseError(lineno, 1, "expected '(' in HOARE");
      ++pos;
      h.recv = detail::word(s, pos);
      if (h.recv.empty()) throw ParseError(lineno, 1, "expected receiver name in HOARE");
      detail::skip_ws(s, pos);
      while (pos < s.size() && s[pos] == ',') {
        ++pos;
        std::string p = detail::word(s, pos);
        if (p.empty()) throw ParseError(lineno, 1, "expected parameter name in HOARE");
        h.params.push_back(p);
        detail::skip_ws(s, pos);
      }
      if (pos >= s.size() || s[pos] != ')') throw ParseError(lineno, 1, "expected ')' in HOARE");
      ++pos;
      h.pre = assn(pos);
      h.post = assn(pos);
      st.j = Judgment::hoare(std::move(h));
    } else if (kw == "FROM") {
      AssnP a1 = assn(pos);
      std::string mid = detail::word(s, pos);
      if (mid == "NEXT") {
        AssnP a2 = assn(pos);
        if (detail::word(s, pos) != "ONLYIF")
          throw ParseError(lineno, 1, "expected ONLYIF after NEXT clause");
        st.j = Judgment::nec(Judgment::K::OnlyIfNext, a1, a2, assn(pos));
      } else if (mid == "TO") {
        AssnP a2 = assn(pos);
        std::string tail = detail::word(s, pos);
        if (tail == "ONLYIF")
          st.j = Judgment::nec(Judgment::K::OnlyIf, a1, a2, assn(pos));
        else if (tail == "ONLYTHROUGH")
          st.j = Judgment::nec(Judgment::K::OnlyThrough, a1, a2, assn(pos));
        else
          throw ParseError(lineno, 1, "expected ONLYIF or ONLYTHROUGH");
      } else {
        throw ParseError(lineno, 1, "expected NEXT or TO after the FROM clause");
      }
    } else {
      throw ParseError(lineno, 1, "unknown judgment form '" + kw + "'");
    }

    if (detail::word(s, pos) != "BY")
      throw ParseError(lineno, 1, "expected BY <rule> in proof step");
    st.rule = detail::word(s, pos);
    if (st.rule.empty()) throw ParseError(lineno, 1, "expected a rule name after BY");
    detail::skip_ws(s, pos);
    if (detail::keyword_at(s, pos, "FROM")) {
      detail::word(s, pos);  // consume FROM
      while (true) {
        detail::skip_ws(s, pos);
        size_t start = pos;
        while (pos < s.size() && s[pos] != ',') ++pos;
        std::string lbl = s.substr(start, pos - start);
        lbl.erase(0, lbl.find_first_not_of(' '));
        lbl.erase(lbl.find_last_not_of(" \t\r") + 1);
        while (lbl.find("  ") != std::string::npos) lbl.replace(lbl.find("  "), 2, " ");
        if (lbl.empty()) throw ParseError(lineno, 1, "empty premise label");
        st.from.push_back(lbl);
        if (pos >= s.size()) break;
        ++pos;  // skip comma
      }
    } else {
      detail::skip_ws(s, pos);
      if (pos < s.size())
        throw ParseError(lineno, 1, "unexpected trailing text in proof step");
    }
    script.steps.push_back(std::move(st));
  }
  return script;
}

// ---------------------------------------------------------------- script checking

struct ScriptIssue {
  std::string label;
  std::string message;
  int line = 0;
};

struct ScriptReport {
  bool ok = true;
  std::vector<ScriptIssue> errors;
  std::vector<std::string> warnings;
  size_t steps_checked = 0;
};

// Checks every step in order against its premises. Steps that fail are
// reported, and their stated judgments remain usable by later steps so a
// single mistake produces a single error.
inline ScriptReport check_script(const Module& m, const ProofScript& script) {
  ScriptReport rep;
  std::map<std::string, const Judgment*> env;
  for (const auto& st : script.steps) {
    auto fail = [&](const std::string& msg) {
      rep.ok = false;
      rep.errors.push_back({st.label, msg, st.line});
    };
    if (env.count(st.label)) {
      fail("duplicate step label");
      continue;
    }
    std::vector<Judgment> prems;
    bool missing = false;
    for (const auto& l : st.from) {
      auto it = env.find(l);
      if (it == env.end()) {
        fail("premise label '" + l + "' is not defined above this step");
        missing = true;
        break;
      }
      prems.push_back(*it->second);
    }
    if (!missing) {
      if (auto e = check_rule(m, st.rule, prems, st.j))
        fail("rule " + st.rule + ": " + *e);
      else
        ++rep.steps_checked;
    }
    env.emplace(st.label, &st.j);
  }
  return rep;
}

}  // namespace nec
