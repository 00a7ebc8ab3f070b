#pragma once

// AST for the object language (modules, statements, expressions), the
// specification assertion language, and necessity specifications.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nec {

// ---------------------------------------------------------------- values

struct Value {
  enum class K { Null, Bool, Int, Addr };
  K k = K::Null;
  bool b = false;
  std::int64_t i = 0;
  std::uint32_t a = 0;

  static Value null() { return Value{}; }
  static Value boolean(bool v) {
    Value r; r.k = K::Bool; r.b = v; return r;
  }
  static Value integer(std::int64_t v) {
    Value r; r.k = K::Int; r.i = v; return r;
  }
  static Value addr(std::uint32_t v) {
    Value r; r.k = K::Addr; r.a = v; return r;
  }
  bool is_null() const { return k == K::Null; }
  bool is_bool() const { return k == K::Bool; }
  bool is_int() const { return k == K::Int; }
  bool is_addr() const { return k == K::Addr; }

  friend bool operator==(const Value& l, const Value& r) {
    if (l.k != r.k) return false;
    switch (l.k) {
      case K::Null: return true;
      case K::Bool: return l.b == r.b;
      case K::Int: return l.i == r.i;
      case K::Addr: return l.a == r.a;
    }
    return false;
  }
  friend bool operator!=(const Value& l, const Value& r) { return !(l == r); }
  friend bool operator<(const Value& l, const Value& r) {
    if (l.k != r.k) return static_cast<int>(l.k) < static_cast<int>(r.k);
    switch (l.k) {
      case K::Null: return false;
      case K::Bool: return l.b < r.b;
      case K::Int: return l.i < r.i;
      case K::Addr: return l.a < r.a;
    }
    return false;
  }
};

inline std::string to_string(const Value& v) {
  switch (v.k) {
    case Value::K::Null: return "null";
    case Value::K::Bool: return v.b ? "true" : "false";
    case Value::K::Int: return std::to_string(v.i);
    case Value::K::Addr: return "@" + std::to_string(v.a);
  }
  return "?";
}

// ---------------------------------------------------------------- expressions

struct Expr;
using ExprP = std::shared_ptr<const Expr>;

struct Expr {
  enum class K { Val, Var, Add, Sub, Eq, Lt, If, Field, Ghost };
  K k = K::Val;
  Value val;          // Val
  std::string name;   // Var name, Field field, Ghost ghost-name
  ExprP a, b, c;      // operands: binary a/b, If a?b:c, Field/Ghost base a, Ghost arg b

  static ExprP val_(Value v) {
    auto e = std::make_shared<Expr>(); e->k = K::Val; e->val = v; return e;
  }
  static ExprP var_(std::string n) {
    auto e = std::make_shared<Expr>(); e->k = K::Var; e->name = std::move(n); return e;
  }
  static ExprP bin(K kk, ExprP l, ExprP r) {
    auto e = std::make_shared<Expr>(); e->k = kk; e->a = std::move(l); e->b = std::move(r); return e;
  }
  static ExprP if_(ExprP cnd, ExprP thn, ExprP els) {
    auto e = std::make_shared<Expr>(); e->k = K::If;
    e->a = std::move(cnd); e->b = std::move(thn); e->c = std::move(els); return e;
  }
  static ExprP field(ExprP base, std::string f) {
    auto e = std::make_shared<Expr>(); e->k = K::Field;
    e->a = std::move(base); e->name = std::move(f); return e;
  }
  static ExprP ghost(ExprP base, std::string g, ExprP arg) {
    auto e = std::make_shared<Expr>(); e->k = K::Ghost;
    e->a = std::move(base); e->name = std::move(g); e->b = std::move(arg); return e;
  }
  bool is_wildcard() const { return k == K::Var && name == "_"; }
};

inline void print_expr(std::ostream& os, const ExprP& e, int prec = 0) {
  if (!e) { os << "<null-expr>"; return; }
  switch (e->k) {
    case Expr::K::Val: os << to_string(e->val); break;
    case Expr::K::Var: os << e->name; break;
    case Expr::K::Add:
    case Expr::K::Sub:
      if (prec > 2) os << "(";
      print_expr(os, e->a, 2);
      os << (e->k == Expr::K::Add ? " + " : " - ");
      print_expr(os, e->b, 3);
      if (prec > 2) os << ")";
      break;
    case Expr::K::Eq:
    case Expr::K::Lt:
      if (prec > 1) os << "(";
      print_expr(os, e->a, 2);
      os << (e->k == Expr::K::Eq ? " == " : " < ");
      print_expr(os, e->b, 2);
      if (prec > 1) os << ")";
      break;
    case Expr::K::If:
      if (prec > 0) os << "(";
      os << "if ";
      print_expr(os, e->a, 1);
      os << " then ";
      print_expr(os, e->b, 1);
      os << " else ";
      print_expr(os, e->c, 0);
      if (prec > 0) os << ")";
      break;
    case Expr::K::Field:
      print_expr(os, e->a, 4);
      os << "." << e->name;
      break;
    case Expr::K::Ghost:
      print_expr(os, e->a, 4);
      os << "." << e->name << "(";
      print_expr(os, e->b, 0);
      os << ")";
      break;
  }
}

inline std::string to_string(const ExprP& e) {
  std::ostringstream os; print_expr(os, e); return os.str();
}

// ---------------------------------------------------------------- assertions

struct Assertion;
using AssnP = std::shared_ptr<const Assertion>;

struct Assertion {
  enum class K {
    Expr, HasClass, Not, And, Or, Implies,
    Forall, Exists, Access, Internal, External, Inside, Calls
  };
  K k = K::Expr;
  ExprP e, e2;              // Expr e; HasClass e; Access e/e2; Internal/External/Inside e; Calls recv e
  std::string cls;          // HasClass
  std::string var;          // Forall / Exists binder
  std::string meth;         // Calls method
  AssnP a, b;               // Not a; And/Or/Implies a,b; quantifier body a
  ExprP caller;             // Calls caller (may be wildcard var "_")
  std::vector<ExprP> args;  // Calls args (entries may be wildcards)

  static AssnP expr(ExprP e) {
    auto r = std::make_shared<Assertion>(); r->k = K::Expr; r->e = std::move(e); return r;
  }
  static AssnP has_class(ExprP e, std::string c) {
    auto r = std::make_shared<Assertion>(); r->k = K::HasClass;
    r->e = std::move(e); r->cls = std::move(c); return r;
  }
  static AssnP not_(AssnP x) {
    auto r = std::make_shared<Assertion>(); r->k = K::Not; r->a = std::move(x); return r;
  }
  static AssnP bin(K kk, AssnP l, AssnP r2) {
    auto r = std::make_shared<Assertion>(); r->k = kk; r->a = std::move(l); r->b = std::move(r2); return r;
  }
  static AssnP and_(AssnP l, AssnP r2) { return bin(K::And, std::move(l), std::move(r2)); }
  static AssnP or_(AssnP l, AssnP r2) { return bin(K::Or, std::move(l), std::move(r2)); }
  static AssnP implies(AssnP l, AssnP r2) { return bin(K::Implies, std::move(l), std::move(r2)); }
  static AssnP quant(K kk, std::string v, AssnP body) {
    auto r = std::make_shared<Assertion>(); r->k = kk;
    r->var = std::move(v); r->a = std::move(body); return r;
  }
  static AssnP access(ExprP x, ExprP y) {
    auto r = std::make_shared<Assertion>(); r->k = K::Access;
    r->e = std::move(x); r->e2 = std::move(y); return r;
  }
  static AssnP pred(K kk, ExprP x) {
    auto r = std::make_shared<Assertion>(); r->k = kk; r->e = std::move(x); return r;
  }
  static AssnP calls(ExprP who, ExprP recv, std::string m, std::vector<ExprP> as) {
    auto r = std::make_shared<Assertion>(); r->k = K::Calls;
    r->caller = std::move(who); r->e = std::move(recv);
    r->meth = std::move(m); r->args = std::move(as); return r;
  }
  static AssnP true_() { return expr(Expr::val_(Value::boolean(true))); }
  static AssnP false_() { return expr(Expr::val_(Value::boolean(false))); }
};

inline void print_assertion(std::ostream& os, const AssnP& a, int prec = 0) {
  if (!a) { os << "<null-assn>"; return; }
  switch (a->k) {
    case Assertion::K::Expr: print_expr(os, a->e, 1); break;
    case Assertion::K::HasClass:
      print_expr(os, a->e, 2);
      os << " : " << a->cls;
      break;
    case Assertion::K::Not:
      os << "!";
      print_assertion(os, a->a, 4);
      break;
    case Assertion::K::And:
      if (prec > 2) os << "(";
      print_assertion(os, a->a, 3);
      os << " && ";
      print_assertion(os, a->b, 2);
      if (prec > 2) os << ")";
      break;
    case Assertion::K::Or:
      if (prec > 1) os << "(";
      print_assertion(os, a->a, 2);
      os << " || ";
      print_assertion(os, a->b, 1);
      if (prec > 1) os << ")";
      break;
    case Assertion::K::Implies:
      if (prec > 0) os << "(";
      print_assertion(os, a->a, 1);
      os << " ==> ";
      print_assertion(os, a->b, 0);
      if (prec > 0) os << ")";
      break;
    case Assertion::K::Forall:
    case Assertion::K::Exists:
      os << (a->k == Assertion::K::Forall ? "forall " : "exists ") << a->var << ". [";
      print_assertion(os, a->a, 0);
      os << "]";
      break;
    case Assertion::K::Access:
      os << "access(";
      print_expr(os, a->e);
      os << ", ";
      print_expr(os, a->e2);
      os << ")";
      break;
    case Assertion::K::Internal:
      os << "internal(";
      print_expr(os, a->e);
      os << ")";
      break;
    case Assertion::K::External:
      os << "external(";
      print_expr(os, a->e);
      os << ")";
      break;
    case Assertion::K::Inside:
      os << "inside(";
      print_expr(os, a->e);
      os << ")";
      break;
    case Assertion::K::Calls:
      os << "calls(";
      print_expr(os, a->caller);
      os << ", ";
      print_expr(os, a->e, 4);
      os << "." << a->meth << "(";
      for (size_t i = 0; i < a->args.size(); ++i) {
        if (i) os << ", ";
        print_expr(os, a->args[i]);
      }
      os << "))";
      break;
  }
}

inline std::string to_string(const AssnP& a) {
  std::ostringstream os; print_assertion(os, a); return os.str();
}

inline bool same_expr(const ExprP& a, const ExprP& b) { return to_string(a) == to_string(b); }
inline bool same_assertion(const AssnP& a, const AssnP& b) { return to_string(a) == to_string(b); }

// ---------------------------------------------------------------- statements

struct Stmt;
using StmtP = std::shared_ptr<const Stmt>;

struct Stmt {
  enum class K { Read, Write, Call, New, Return, If };
  K k = K::Return;
  std::string x;            // target variable (Read/Call/New), source obj var (Write)
  std::string y;            // source obj var (Read), receiver (Call)
  std::string f;            // field (Read/Write)
  std::string m;            // method (Call)
  std::string cls;          // class (New)
  ExprP e;                  // Write RHS, Return value, If condition
  std::vector<ExprP> args;  // Call/New arguments (atoms: variables or literals)
  std::vector<StmtP> thn, els;  // If branches

  static StmtP read(std::string x, std::string y, std::string f) {
    auto s = std::make_shared<Stmt>(); s->k = K::Read;
    s->x = std::move(x); s->y = std::move(y); s->f = std::move(f); return s;
  }
  static StmtP write(std::string x, std::string f, ExprP e) {
    auto s = std::make_shared<Stmt>(); s->k = K::Write;
    s->x = std::move(x); s->f = std::move(f); s->e = std::move(e); return s;
  }
  static StmtP call(std::string x, std::string y, std::string m, std::vector<ExprP> args) {
    auto s = std::make_shared<Stmt>(); s->k = K::Call;
    s->x = std::move(x); s->y = std::move(y); s->m = std::move(m); s->args = std::move(args);
    return s;
  }
  static StmtP new_(std::string x, std::string c, std::vector<ExprP> args) {
    auto s = std::make_shared<Stmt>(); s->k = K::New;
    s->x = std::move(x); s->cls = std::move(c); s->args = std::move(args); return s;
  }
  static StmtP ret(ExprP e) {
    auto s = std::make_shared<Stmt>(); s->k = K::Return; s->e = std::move(e); return s;
  }
  static StmtP if_(ExprP c, std::vector<StmtP> t, std::vector<StmtP> e) {
    auto s = std::make_shared<Stmt>(); s->k = K::If;
    s->e = std::move(c); s->thn = std::move(t); s->els = std::move(e); return s;
  }
};

inline void print_stmt(std::ostream& os, const StmtP& s, int indent);

inline void print_block(std::ostream& os, const std::vector<StmtP>& body, int indent) {
  for (const auto& s : body) print_stmt(os, s, indent);
}

inline void print_stmt(std::ostream& os, const StmtP& s, int indent) {
  std::string pad(static_cast<size_t>(indent) * 2, ' ');
  os << pad;
  switch (s->k) {
    case Stmt::K::Read:
      os << s->x << " := " << s->y << "." << s->f << "\n";
      break;
    case Stmt::K::Write:
      os << s->x << "." << s->f << " := ";
      print_expr(os, s->e);
      os << "\n";
      break;
    case Stmt::K::Call:
    case Stmt::K::New:
      os << s->x << " := ";
      if (s->k == Stmt::K::New) os << "new " << s->cls << "(";
      else os << s->y << "." << s->m << "(";
      for (size_t i = 0; i < s->args.size(); ++i) {
        if (i) os << ", ";
        print_expr(os, s->args[i]);
      }
      os << ")\n";
      break;
    case Stmt::K::Return:
      os << "return ";
      print_expr(os, s->e);
      os << "\n";
      break;
    case Stmt::K::If:
      os << "if ";
      print_expr(os, s->e);
      os << " {\n";
      print_block(os, s->thn, indent + 1);
      os << pad << "}";
      if (!s->els.empty()) {
        os << " else {\n";
        print_block(os, s->els, indent + 1);
        os << pad << "}";
      }
      os << "\n";
      break;
  }
}

inline std::string to_string(const StmtP& s) {
  std::ostringstream os; print_stmt(os, s, 0); return os.str();
}

// ---------------------------------------------------------------- classes and modules

struct Param {
  std::string name;
  std::string type;  // class name, or "int" / "bool" / "Object"
};

struct GhostDef {
  std::string name;
  bool intrnl = false;
  Param param;        // ghost fields are unary
  std::string rtype;
  ExprP body;
};

struct MethodDef {
  std::string name;
  std::vector<Param> params;
  std::string rtype;  // "" = none declared
  std::vector<StmtP> body;
};

struct ClassDef {
  std::string name;
  bool confined = false;
  std::vector<Param> fields;
  std::vector<GhostDef> ghosts;
  std::optional<MethodDef> ctor;  // name "constr"
  std::vector<MethodDef> methods;

  const Param* field(const std::string& f) const {
    for (const auto& p : fields) if (p.name == f) return &p;
    return nullptr;
  }
  const GhostDef* ghost(const std::string& g) const {
    for (const auto& p : ghosts) if (p.name == g) return &p;
    return nullptr;
  }
  const MethodDef* method(const std::string& m) const {
    for (const auto& p : methods) if (p.name == m) return &p;
    return nullptr;
  }
};

struct Module {
  std::string name;
  std::vector<ClassDef> classes;

  const ClassDef* cls(const std::string& c) const {
    for (const auto& cd : classes) if (cd.name == c) return &cd;
    return nullptr;
  }
  bool has(const std::string& c) const { return cls(c) != nullptr; }
};

struct LinkError : std::runtime_error {
  std::string clashing;
  explicit LinkError(const std::string& c)
      : std::runtime_error("link: duplicate class " + c), clashing(c) {}
};

// Module linking: union of class maps, defined only on disjoint domains.
inline Module link(const Module& internal, const Module& external) {
  Module out = internal;
  out.name = internal.name + "+" + external.name;
  for (const auto& cd : external.classes) {
    if (internal.has(cd.name)) throw LinkError(cd.name);
    out.classes.push_back(cd);
  }
  return out;
}

inline void print_params(std::ostream& os, const std::vector<Param>& ps) {
  os << "(";
  for (size_t i = 0; i < ps.size(); ++i) {
    if (i) os << ", ";
    os << ps[i].name << " : " << ps[i].type;
  }
  os << ")";
}

inline void print_module(std::ostream& os, const Module& m) {
  os << "module " << m.name << "\n";
  for (const auto& cd : m.classes) {
    os << (cd.confined ? "confined class " : "class ") << cd.name << " {\n";
    for (const auto& f : cd.fields) os << "  field " << f.name << " : " << f.type << "\n";
    for (const auto& g : cd.ghosts) {
      os << "  ghost " << (g.intrnl ? "intrnl " : "") << g.name << "(" << g.param.name
         << " : " << g.param.type << ") : " << g.rtype << " = ";
      print_expr(os, g.body);
      os << "\n";
    }
    if (cd.ctor) {
      os << "  constr";
      print_params(os, cd.ctor->params);
      os << " {\n";
      print_block(os, cd.ctor->body, 2);
      os << "  }\n";
    }
    for (const auto& md : cd.methods) {
      os << "  method " << md.name;
      print_params(os, md.params);
      if (!md.rtype.empty()) os << " : " << md.rtype;
      os << " {\n";
      print_block(os, md.body, 2);
      os << "  }\n";
    }
    os << "}\n";
  }
}

inline std::string to_string(const Module& m) {
  std::ostringstream os; print_module(os, m); return os.str();
}

inline bool same_module(const Module& a, const Module& b) {
  return to_string(a) == to_string(b);
}

// ---------------------------------------------------------------- necessity specs

struct NecessitySpec {
  enum class K { OnlyIfNext, OnlyIf, OnlyThrough, Plain };
  K k = K::Plain;
  std::string name;
  AssnP a1, a2, a3;  // Plain uses a3 only
};

inline void print_spec(std::ostream& os, const NecessitySpec& s) {
  if (!s.name.empty()) os << "spec " << s.name << "\n";
  switch (s.k) {
    case NecessitySpec::K::Plain:
      os << "assert ";
      print_assertion(os, s.a3);
      os << "\n";
      return;
    case NecessitySpec::K::OnlyIfNext:
      os << "from ";
      print_assertion(os, s.a1);
      os << "\nnext ";
      print_assertion(os, s.a2);
      os << "\nonlyIf ";
      break;
    case NecessitySpec::K::OnlyIf:
      os << "from ";
      print_assertion(os, s.a1);
      os << "\nto ";
      print_assertion(os, s.a2);
      os << "\nonlyIf ";
      break;
    case NecessitySpec::K::OnlyThrough:
      os << "from ";
      print_assertion(os, s.a1);
      os << "\nto ";
      print_assertion(os, s.a2);
      os << "\nonlyThrough ";
      break;
  }
  print_assertion(os, s.a3);
  os << "\n";
}

inline std::string to_string(const NecessitySpec& s) {
  std::ostringstream os; print_spec(os, s); return os.str();
}

inline bool same_spec(const NecessitySpec& a, const NecessitySpec& b) {
  return a.k == b.k && same_assertion(a.a3, b.a3) &&
         (a.k == NecessitySpec::K::Plain ||
          (same_assertion(a.a1, b.a1) && same_assertion(a.a2, b.a2)));
}

}  // namespace nec
