// Small-step interpreter: transfer semantics, field privacy, traps, ghosts.

#include <catch_amalgamated.hpp>
#include <fstream>
#include <sstream>

#include "nec/interp.hpp"
#include "nec/parse.hpp"

using namespace nec;

static Module load(const std::string& n) {
  std::ifstream f(std::string(NEC_FIXTURES_DIR) + "/" + n);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_module(ss.str());
}

static RunResult run_main(const Module& m, const std::string& stmts) {
  return run_to_completion(m, initial_state(parse_stmts_text(stmts)));
}

static std::int64_t balance_of(const ProgramState& st, const std::string& var) {
  auto v = interpret_var(st, var);
  REQUIRE(v);
  const HeapObject* o = st.obj(*v);
  REQUIRE(o);
  auto it = o->flds.find("balance");
  REQUIRE(it != o->flds.end());
  REQUIRE(it->second.is_int());
  return it->second.i;
}

TEST_CASE("transfer with the matching password moves exactly 100") {
  Module m = load("modA.loo");
  // Passwords are private, so main cannot read one; bind it directly into the
  // top frame's locals for test setup.
  RunResult setup = run_main(m, "v1 := new Account(300)\nv2 := new Account(100)\nreturn null");
  REQUIRE(setup.done);
  ProgramState st = setup.trace.back();
  auto a1 = interpret_var(st, "v1");
  auto a2 = interpret_var(st, "v2");
  REQUIRE((a1 && a2));
  Value pwd = st.heap.at(a1->a).flds.at("pwd");

  SECTION("matching password: -100 / +100, bit-exact") {
    st.top().locals["p"] = pwd;
    auto stmts = parse_stmts_text("v3 := v1.transfer(v2, p)\nreturn null");
    st.top().code.assign(stmts.begin(), stmts.end());
    RunResult rr = run_to_completion(m, st);
    REQUIRE(rr.done);
    CHECK(balance_of(rr.trace.back(), "v1") == 200);
    CHECK(balance_of(rr.trace.back(), "v2") == 200);
  }

  SECTION("non-matching password: both balances unchanged") {
    st.top().locals["p"] = st.heap.at(a2->a).flds.at("pwd");  // wrong password
    auto stmts = parse_stmts_text("v3 := v1.transfer(v2, p)\nreturn null");
    st.top().code.assign(stmts.begin(), stmts.end());
    RunResult rr = run_to_completion(m, st);
    REQUIRE(rr.done);
    CHECK(balance_of(rr.trace.back(), "v1") == 300);
    CHECK(balance_of(rr.trace.back(), "v2") == 100);
  }

  SECTION("null password never matches a real one") {
    auto stmts = parse_stmts_text("v3 := v1.transfer(v2, null)\nreturn null");
    st.top().code.assign(stmts.begin(), stmts.end());
    RunResult rr = run_to_completion(m, st);
    REQUIRE(rr.done);
    CHECK(balance_of(rr.trace.back(), "v1") == 300);
  }
}

TEST_CASE("field access from outside the object's class is stuck on privacy") {
  Module m = load("modA.loo");
  SECTION("external read") {
    RunResult rr = run_main(m, "v1 := new Account(300)\nv2 := v1.balance\nreturn null");
    CHECK(rr.stuck);
    CHECK(rr.stuck_reason == "field-privacy");
  }
  SECTION("external write") {
    RunResult rr = run_main(m, "v1 := new Account(300)\nv1.balance := 0\nreturn null");
    CHECK(rr.stuck);
    CHECK(rr.stuck_reason == "field-privacy");
  }
  SECTION("even another Account cannot touch a different object's field") {
    // transfer writes dest.balance -- allowed because receiver and dest share
    // the class?  No: privacy is per-class in this semantics, so the body of
    // Account may access fields of any Account.  Confirm transfer runs.
    RunResult setup = run_main(m, "v1 := new Account(300)\nv2 := new Account(0)\nreturn null");
    REQUIRE(setup.done);
    CHECK_FALSE(setup.stuck);
  }
}

TEST_CASE("arithmetic overflow is a trap, not wraparound") {
  Module m = parse_module(
      "module Ov\nclass C {\n field v : int\n constr() { }\n method big(x : int) : int {\n  "
      "this.v := x + x\n  return 0\n }\n}\n");
  RunResult rr = run_main(m, "v1 := new C()\nv2 := v1.big(4611686018427387904)\nreturn null");
  CHECK(rr.stuck);
  CHECK(rr.stuck_reason.find("overflow") != std::string::npos);
}

TEST_CASE("ghost functions evaluate with bounded fuel") {
  Module m = load("modD.loo");
  RunResult rr = run_main(m, "v1 := new Account(null)\nv2 := v1.deposit(5, null)\nreturn null");
  REQUIRE(rr.done);
  ProgramState st = rr.trace.back();
  auto v = interpret_var(st, "v1");
  REQUIRE(v);
  // ghost balance(0) == 5 after the deposit (key null matches null)
  int fuel = kDefaultGhostFuel;
  std::map<std::string, Value> env = st.top().locals;
  EvalResult g =
      eval_expr_env(m, st, env, parse_expr_text("v1.balance(0)"), fuel, nullptr);
  REQUIRE(g.k == EvalResult::K::Ok);
  CHECK(g.v == Value::integer(5));
}

TEST_CASE("execution is deterministic") {
  Module m = load("modB.loo");
  std::string prog =
      "v1 := new Account(42)\nv2 := new Account(1)\nv3 := new Password()\nv4 := v1.set(v3)\nv5 := "
      "v1.transfer(v2, v3)\nreturn null";
  RunResult r1 = run_main(m, prog);
  RunResult r2 = run_main(m, prog);
  REQUIRE(r1.done);
  REQUIRE(r2.done);
  CHECK(r1.trace.size() == r2.trace.size());
  CHECK(balance_of(r1.trace.back(), "v1") == balance_of(r2.trace.back(), "v1"));
  CHECK(balance_of(r1.trace.back(), "v1") == -58);  // 42 - 100, set let the attacker in
  CHECK(balance_of(r1.trace.back(), "v2") == 101);
}

TEST_CASE("calling a missing method or wrong arity is stuck, not undefined") {
  Module m = load("modA.loo");
  CHECK(run_main(m, "v1 := new Account(0)\nv2 := v1.frob()\nreturn null").stuck_reason ==
        "no-such-method");
  CHECK(run_main(m, "v1 := new Account(0)\nv2 := v1.transfer(v1)\nreturn null").stuck_reason ==
        "arity-mismatch");
}
