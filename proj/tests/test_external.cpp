// External-states semantics: big-step external transitions, arising states,
// and the adaptation operator.

#include <catch_amalgamated.hpp>
#include <fstream>
#include <random>
#include <sstream>

#include "nec/checker.hpp"
#include "nec/external.hpp"
#include "nec/parse.hpp"

using namespace nec;

namespace {

Module load(const std::string& n) {
  std::ifstream f(std::string(NEC_FIXTURES_DIR) + "/" + n);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_module(ss.str());
}

}  // namespace

TEST_CASE("external steps collapse internal execution") {
  Module internal = load("modA.loo");
  Module linked = link(internal, default_adversary_classes());
  SatContext cx = make_sat_context(linked, internal);
  ProgramState st = initial_state(parse_stmts_text("v1 := new Account(300)\nreturn null"));
  ExtStepResult r = external_step(cx, st);
  REQUIRE(r.k == ExtStepResult::K::Ok);
  // the constructor body (three statements) ran inside one external step
  CHECK_FALSE(r.step.internal_trace.empty());
  auto v1 = interpret_var(r.step.to, "v1");
  REQUIRE(v1);
  CHECK(class_of(r.step.to, *v1) == "Account");
}

TEST_CASE("arising states all have an external receiver") {
  Module internal = load("modB.loo");
  AdversaryProgram adv;
  adv.classes = default_adversary_classes();
  adv.main = parse_stmts_text(
      "v1 := new Account(300)\nv2 := new Account(0)\nv3 := new Password()\nv4 := v1.set(v3)\nv5 "
      ":= v1.transfer(v2, v3)\nreturn null");
  ArisingRun run = arising_states(internal, adv);
  CHECK(run.done);
  REQUIRE(run.states.size() > 5);
  Module linked = link(internal, adv.classes);
  SatContext cx = make_sat_context(linked, internal);
  for (const auto& st : run.states) CHECK(has_external_this(cx, st));
}

TEST_CASE("caller axioms hold in every calls-satisfying arising state") {
  // Whenever ⟨x calls y.m(z̄)⟩ holds, the caller is external (it is the
  // adversary frame), and it has access to the receiver and every argument.
  Module internal = load("modB.loo");
  AdversaryProgram adv;
  adv.classes = default_adversary_classes();
  adv.main = parse_stmts_text(
      "v1 := new Account(300)\nv2 := new Account(0)\nv3 := new Password()\nv4 := v1.set(v3)\nv5 "
      ":= v1.transfer(v2, v3)\nv6 := v2.set(v3)\nreturn null");
  ArisingRun run = arising_states(internal, adv);
  Module linked = link(internal, adv.classes);
  SatContext cx = make_sat_context(linked, internal);
  int calls_states = 0;
  for (const auto& st : run.states) {
    const Frame& fr = st.top();
    if (fr.code.empty() || fr.code.front()->k != Stmt::K::Call) continue;
    const StmtP& s = fr.code.front();
    // build the matching calls assertion with named caller `this`
    std::string text = "calls(this, " + s->y + "." + s->m + "(";
    for (size_t i = 0; i < s->args.size(); ++i) text += (i ? ", " : "") + to_string(s->args[i]);
    text += "))";
    if (!satisfies(cx, st, parse_assertion_text(text))) continue;
    ++calls_states;
    CHECK(satisfies(cx, st, parse_assertion_text("external(this)")));
    CHECK(satisfies(cx, st, parse_assertion_text("access(this, " + s->y + ")")));
    for (const auto& arg : s->args) {
      if (arg->k == Expr::K::Var)
        CHECK(satisfies(cx, st, parse_assertion_text("access(this, " + arg->name + ")")));
    }
  }
  CHECK(calls_states >= 3);
}

TEST_CASE("two-account adaptation scenario") {
  // Base state: a and a1 hold distinct 350-balance accounts; the continuation
  // transfers from a1, re-points a at a1's account via an external holder,
  // then transfers from the new a.  After two external steps, the adapted
  // state must judge `a` by its base binding.
  Module internal = load("modA.loo");
  Module holder = parse_module(
      "module Ext\nclass Holder {\n field acct : Object\n constr() { }\n}\n");
  Module linked = link(internal, holder);
  SatContext cx = make_sat_context(linked, internal);

  ProgramState st;
  auto pw = [&] { return Value::addr(st.alloc(HeapObject{"Password", {}})); };
  Value pw1 = pw(), pw2 = pw(), pw3 = pw();
  Value acc1 = Value::addr(
      st.alloc(HeapObject{"Account", {{"balance", Value::integer(350)}, {"pwd", pw1}}}));
  Value acc2 = Value::addr(
      st.alloc(HeapObject{"Account", {{"balance", Value::integer(350)}, {"pwd", pw2}}}));
  Value acc3 = Value::addr(
      st.alloc(HeapObject{"Account", {{"balance", Value::integer(0)}, {"pwd", pw3}}}));
  Value hold = Value::addr(st.alloc(HeapObject{"Holder", {{"acct", acc2}}}));
  Frame f;
  f.locals = {{"this", hold}, {"h", hold}, {"a", acc1}, {"a1", acc2},
              {"d", acc3},    {"p1", pw1}, {"p2", pw2}};
  auto code = parse_stmts_text(
      "t1 := a1.transfer(d, p2)\n"
      "a := h.acct\n"
      "t2 := a.transfer(d, p1)\n");
  f.code.assign(code.begin(), code.end());
  st.stack.push_back(std::move(f));
  ProgramState base = st;

  // two external steps: the whole a1.transfer call, then the field read
  ExtStepResult s1 = external_step(cx, st);
  REQUIRE(s1.k == ExtStepResult::K::Ok);
  ExtStepResult s2 = external_step(cx, s1.step.to);
  REQUIRE(s2.k == ExtStepResult::K::Ok);
  const ProgramState& future = s2.step.to;

  // sanity: the future state really re-pointed a and moved the money
  CHECK(*interpret_var(future, "a") == acc2);
  CHECK(future.heap.at(acc2.a).flds.at("balance") == Value::integer(250));

  AdaptedState ad = adapt(future, base);
  // a keeps its base binding: the untouched 350 account
  CHECK(*interpret_var(ad.state, "a") == acc1);
  CHECK_FALSE(satisfies(cx, ad.state, parse_assertion_text("a.balance == 250")));
  // the pending call is on a1's account, not on a's
  CHECK(satisfies(cx, ad.state, parse_assertion_text("calls(_, a1.transfer(_, _))")));
  CHECK_FALSE(satisfies(cx, ad.state, parse_assertion_text("calls(_, a.transfer(_, _))")));
}

TEST_CASE("adaptation is insensitive to the choice of fresh names (500 states)") {
  Module internal = load("modB.loo");
  Module linked = link(internal, default_adversary_classes());
  SatContext cx = make_sat_context(linked, internal);
  std::mt19937 rng(97);

  // random adversary mains over the fixture alphabet
  auto random_main = [&](int len) {
    std::vector<std::string> lines;
    int n = 1;
    std::vector<std::string> accounts, pwds;
    for (int i = 0; i < len; ++i) {
      std::string v = "v" + std::to_string(n++);
      switch (rng() % 4) {
        case 0:
          lines.push_back(v + " := new Account(" + std::to_string(int(rng() % 400)) + ")");
          accounts.push_back(v);
          break;
        case 1:
          lines.push_back(v + " := new Password()");
          pwds.push_back(v);
          break;
        case 2:
          if (accounts.empty() || pwds.empty()) { --i; --n; continue; }
          lines.push_back(v + " := " + accounts[rng() % accounts.size()] + ".set(" +
                          pwds[rng() % pwds.size()] + ")");
          break;
        default:
          if (accounts.size() < 2 || pwds.empty()) { --i; --n; continue; }
          lines.push_back(v + " := " + accounts[rng() % accounts.size()] + ".transfer(" +
                          accounts[rng() % accounts.size()] + ", " +
                          pwds[rng() % pwds.size()] + ")");
      }
    }
    lines.push_back("return null");
    std::string all;
    for (auto& l : lines) all += l + "\n";
    return parse_stmts_text(all);
  };

  std::vector<AssnP> battery;
  for (const char* t :
       {"exists o. [o : Account && o.balance == 250]", "exists o. [o : Account && o.balance < 0]",
        "forall o. [o : Account ==> !(o.balance < 0)]", "exists p. [p : Password && inside(p)]",
        "exists p. [p : Password && !inside(p)]", "exists o. [external(o) && o : Adv]",
        "exists a. [exists p. [a : Account && a.pwd == p && inside(p)]]"})
    battery.push_back(parse_assertion_text(t));

  int checked = 0;
  while (checked < 500) {
    AdversaryProgram adv;
    adv.classes = default_adversary_classes();
    adv.main = random_main(2 + int(rng() % 5));
    ArisingRun run = arising_states(internal, adv);
    if (run.states.size() < 2) continue;
    for (int rep = 0; rep < 3 && checked < 500; ++rep) {
      size_t i = rng() % (run.states.size() - 1);
      size_t j = i + 1 + rng() % (run.states.size() - 1 - i);
      const ProgramState& base = run.states[i];
      const ProgramState& future = run.states[j];
      AdaptedState one = adapt(future, base);
      // a different fresh-name choice: pre-rename the future top frame
      ProgramState prefixed = future;
      {
        std::map<std::string, std::string> rn;
        Frame nf;
        for (const auto& [x, v] : prefixed.top().locals) {
          rn[x] = x + "q";
          nf.locals[x + "q"] = v;
        }
        if (prefixed.top().hole) nf.hole = rn.at(*prefixed.top().hole);
        for (const auto& s : prefixed.top().code) nf.code.push_back(rename_stmt(s, rn));
        nf.is_ctor = prefixed.top().is_ctor;
        prefixed.stack.back() = std::move(nf);
      }
      AdaptedState two = adapt(prefixed, base);
      for (const auto& a : battery)
        CHECK(satisfies(cx, one.state, a) == satisfies(cx, two.state, a));
      ++checked;
    }
  }
  CHECK(checked == 500);
}
