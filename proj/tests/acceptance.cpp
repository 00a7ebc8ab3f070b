// Acceptance gate: one pass/fail line per criterion.

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "nec/checker.hpp"
#include "nec/external.hpp"
#include "nec/parse.hpp"
#include "nec/proof.hpp"

using namespace nec;

namespace {

int failures = 0;

void report(int n, const std::string& what, bool ok, const std::string& detail = "") {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << n << ": " << what;
  if (!ok && !detail.empty()) std::cout << " — " << detail;
  std::cout << std::endl;
  if (!ok) ++failures;
}

std::string slurp(const std::string& n) {
  std::ifstream f(std::string(NEC_FIXTURES_DIR) + "/" + n);
  if (!f) throw std::runtime_error("missing fixture " + n);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Module load(const std::string& n) { return parse_module(slurp(n)); }

NecessitySpec spec_named(const std::string& file, const std::string& name) {
  for (auto& s : parse_specs(slurp(file)))
    if (s.name == name) return s;
  throw std::runtime_error("no spec " + name);
}

bool concludes(const Module& m, const ProofScript& s, const NecessitySpec& sp) {
  ScriptReport rep = check_script(m, s);
  if (!rep.ok) return false;
  Judgment::K k = sp.k == NecessitySpec::K::OnlyIfNext ? Judgment::K::OnlyIfNext
                  : sp.k == NecessitySpec::K::OnlyIf   ? Judgment::K::OnlyIf
                                                       : Judgment::K::OnlyThrough;
  for (const auto& st : s.steps)
    if (st.j.k == k && same_nnf(st.j.a1, sp.a1) && same_nnf(st.j.a2, sp.a2) &&
        same_nnf(st.j.a3, sp.a3))
      return true;
  return false;
}

}  // namespace

int main() {
  Module modA = load("modA.loo"), modB = load("modB.loo"), modC = load("modC.loo"),
         modD = load("modD.loo");
  NecessitySpec sNext = spec_named("account.nspec", "S_RobustNextAcc");
  NecessitySpec sIf = spec_named("account.nspec", "S_RobustIfAcc");
  NecessitySpec sThrough = spec_named("account.nspec", "S_RobustThroughAcc");
  NecessitySpec sChange = spec_named("account.nspec", "S_ChangeNext");
  NecessitySpec sLeak = spec_named("account.nspec", "S_LeakThrough");
  NecessitySpec sGhost = spec_named("modD.nspec", "S_GhostNext");

  // 1 — attack reproduction with a minimized set-then-transfer main
  {
    auto t0 = std::chrono::steady_clock::now();
    CheckResult r = check(modB, sIf);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = r.falsified() && r.counterexample && secs <= 60.0;
    std::string detail;
    if (ok) {
      std::vector<const Stmt*> calls;
      for (const auto& st : r.counterexample->adversary.main)
        if (st->k == Stmt::K::Call) calls.push_back(st.get());
      ok = calls.size() == 2 && calls[0]->m == "set" && calls[1]->m == "transfer" &&
           calls[0]->y == calls[1]->y && calls[1]->args.size() == 2 &&
           to_string(calls[0]->args[0]) == to_string(calls[1]->args[1]);
      if (!ok) detail = "counterexample shape mismatch";
    } else {
      detail = r.falsified() ? "time limit exceeded" : "not falsified";
    }
    report(1, "check(ModB, S_robust2) falsified with a set-then-transfer attack", ok, detail);
  }

  // 2 — discrimination
  {
    CheckResult ra = check(modA, sIf);
    CheckResult rc = check(modC, sIf);
    report(2, "ModA and ModC admit no counterexample for S_robust2 at the same bound",
           !ra.falsified() && !rc.falsified());
  }

  // 3 — the 3×3 operator table
  {
    std::vector<NecessitySpec> specs = {sNext, sIf, sThrough};
    auto cells = check_table({&modA, &modB, &modC}, specs);
    int match = 0;
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) {
        bool want = (i == 1 && k == 1);  // only (ModB, S_RobustIfAcc)
        if (cells[i][k].falsified() == want) ++match;
      }
    report(3, "3x3 table matches: single falsified cell (ModB, S_RobustIfAcc)", match == 9,
           std::to_string(match) + "/9 cells agree");
  }

  // 4 — interpreter exactness of transfer
  {
    RunResult setup = run_to_completion(
        modA, initial_state(parse_stmts_text(
                  "v1 := new Account(300)\nv2 := new Account(100)\nreturn null")));
    bool ok = setup.done;
    if (ok) {
      ProgramState base = setup.trace.back();
      Value a1 = *interpret_var(base, "v1");
      Value a2 = *interpret_var(base, "v2");
      auto bal = [&](const ProgramState& st, Value a) { return st.heap.at(a.a).flds.at("balance"); };
      auto go = [&](Value pwd) {
        ProgramState st = base;
        st.top().locals["p"] = pwd;
        auto code = parse_stmts_text("v3 := v1.transfer(v2, p)\nreturn null");
        st.top().code.assign(code.begin(), code.end());
        return run_to_completion(modA, st);
      };
      RunResult hit = go(base.heap.at(a1.a).flds.at("pwd"));
      RunResult miss = go(base.heap.at(a2.a).flds.at("pwd"));
      ok = hit.done && bal(hit.trace.back(), a1) == Value::integer(200) &&
           bal(hit.trace.back(), a2) == Value::integer(200) && miss.done &&
           bal(miss.trace.back(), a1) == Value::integer(300) &&
           bal(miss.trace.back(), a2) == Value::integer(100);
    }
    report(4, "transfer moves exactly -100/+100 with the password, nothing without", ok);
  }

  // 5 — field privacy over the enumerated statement alphabet
  {
    bool ok = true;
    std::string setup = "v1 := new Account(300)\nv2 := new Password()\n";
    std::vector<std::string> probes;
    for (const char* f : {"balance", "pwd"}) {
      probes.push_back(std::string("v3 := v1.") + f);                     // read
      for (const char* rhs : {"0", "1", "42", "null", "v2"})
        probes.push_back(std::string("v1.") + f + " := " + rhs);          // writes
    }
    for (const auto& p : probes) {
      RunResult rr =
          run_to_completion(modA, initial_state(parse_stmts_text(setup + p + "\nreturn null")));
      if (!(rr.stuck && rr.stuck_reason == "field-privacy")) {
        ok = false;
        break;
      }
    }
    report(5, "every external read/write of an Account field is Stuck(field-privacy)", ok);
  }

  // 6 — the two-account adaptation scenario
  {
    Module holder =
        parse_module("module Ext\nclass Holder {\n field acct : Object\n constr() { }\n}\n");
    Module linked = link(modA, holder);
    SatContext cx = make_sat_context(linked, modA);
    ProgramState st;
    Value pw1 = Value::addr(st.alloc(HeapObject{"Password", {}}));
    Value pw2 = Value::addr(st.alloc(HeapObject{"Password", {}}));
    Value pw3 = Value::addr(st.alloc(HeapObject{"Password", {}}));
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
        "t1 := a1.transfer(d, p2)\na := h.acct\nt2 := a.transfer(d, p1)\n");
    f.code.assign(code.begin(), code.end());
    st.stack.push_back(std::move(f));
    ProgramState base = st;
    bool ok = false;
    ExtStepResult s1 = external_step(cx, st);
    if (s1.k == ExtStepResult::K::Ok) {
      ExtStepResult s2 = external_step(cx, s1.step.to);
      if (s2.k == ExtStepResult::K::Ok) {
        AdaptedState ad = adapt(s2.step.to, base);
        ok = !satisfies(cx, ad.state, parse_assertion_text("a.balance == 250")) &&
             satisfies(cx, ad.state, parse_assertion_text("calls(_, a1.transfer(_, _))")) &&
             !satisfies(cx, ad.state, parse_assertion_text("calls(_, a.transfer(_, _))"));
      }
    }
    report(6, "adapted state judges a by its base binding, a1's call stays visible", ok);
  }

  // 7 — proof replay and full single-step mutation sweep
  {
    ProofScript script = parse_proof_script(slurp("modC_robust.nproof"));
    bool ok = concludes(modC, script, sIf);
    std::string detail;
    for (const char* need :
         {"BalEncaps", "PwdEncaps", "PwdInsideEncaps", "SetBalChange", "SetPwdLeak",
          "SetPwdChange", "TransferBalChange", "TransferPwdLeak", "TransferPwdChange",
          "BalanceChange", "PasswordChange", "PasswordLeak", "Case A", "Case B", "final"}) {
      bool found = false;
      for (const auto& stp : script.steps) found |= stp.label == need;
      if (!found) { ok = false; detail = std::string("missing step ") + need; }
    }
    int survivors = 0, mutants = 0;
    if (ok) {
      auto accepts = [&](const ProofScript& s) { return concludes(modC, s, sIf); };
      for (size_t i = 0; i < script.steps.size(); ++i) {
        ProofScript mu = script;
        mu.steps.erase(mu.steps.begin() + i);
        ++mutants;
        if (accepts(mu)) ++survivors;
      }
      for (size_t i = 0; i < script.steps.size(); ++i)
        for (size_t slot = 0; slot < script.steps[i].from.size(); ++slot)
          for (size_t j = 0; j < i; ++j) {
            if (script.steps[j].label == script.steps[i].from[slot]) continue;
            ProofScript mu = script;
            mu.steps[i].from[slot] = script.steps[j].label;
            ++mutants;
            if (accepts(mu)) ++survivors;
          }
      ok = survivors == 0;
      detail = std::to_string(survivors) + "/" + std::to_string(mutants) + " mutants survived";
    }
    bool ghost_ok = concludes(modD, parse_proof_script(slurp("modD_ghost.nproof")), sGhost);
    report(7, "ModC proof replays, all single-step mutations rejected, ModD ghost script accepted",
           ok && ghost_ok, ok ? "ModD script rejected" : detail);
  }

  // 8 — kernel/checker coherence over six (module, spec) fixtures
  {
    struct Fix { const Module* m; const NecessitySpec* s; const char* script; };
    std::vector<Fix> fixes = {{&modC, &sIf, "modC_robust.nproof"},
                              {&modC, &sLeak, "modC_leak.nproof"},
                              {&modA, &sChange, "modA_next.nproof"},
                              {&modA, &sNext, "modA_next.nproof"},
                              {&modB, &sThrough, "modB_through.nproof"},
                              {&modD, &sGhost, "modD_ghost.nproof"}};
    int agree = 0;
    for (const auto& fx : fixes) {
      bool proved = concludes(*fx.m, parse_proof_script(slurp(fx.script)), *fx.s);
      bool clean = !check(*fx.m, *fx.s).falsified();
      if (proved && clean) ++agree;
    }
    report(8, "every proved spec is counterexample-free at main length <= 4", agree == 6,
           std::to_string(agree) + "/6 fixtures agree");
  }

  // 9 — property suites (seeds frozen; the Catch2 suites run the full volume)
  {
    bool ok = true;
    // adaptation fresh-name equivalence and classical laws are exercised at
    // full volume in test_external / test_assertions; here we re-run compact
    // versions so this binary is self-contained.
    Module linked = link(modB, default_adversary_classes());
    SatContext cx = make_sat_context(linked, modB);
    AdversaryProgram adv;
    adv.classes = default_adversary_classes();
    adv.main = parse_stmts_text(
        "v1 := new Account(300)\nv2 := new Account(0)\nv3 := new Password()\nv4 := "
        "v1.set(v3)\nv5 := v1.transfer(v2, v3)\nv6 := v2.set(v3)\nreturn null");
    ArisingRun run = arising_states(modB, adv);
    ok &= run.done;
    // caller axioms on every calls-satisfying state
    int calls_states = 0;
    for (const auto& st : run.states) {
      const Frame& fr = st.top();
      if (fr.code.empty() || fr.code.front()->k != Stmt::K::Call) continue;
      const StmtP& s = fr.code.front();
      std::string text = "calls(this, " + s->y + "." + s->m + "(";
      for (size_t i = 0; i < s->args.size(); ++i) text += (i ? ", " : "") + to_string(s->args[i]);
      text += "))";
      if (!satisfies(cx, st, parse_assertion_text(text))) continue;
      ++calls_states;
      ok &= satisfies(cx, st, parse_assertion_text("external(this)"));
      ok &= satisfies(cx, st, parse_assertion_text("access(this, " + s->y + ")"));
      for (const auto& arg : s->args)
        if (arg->k == Expr::K::Var)
          ok &= satisfies(cx, st, parse_assertion_text("access(this, " + arg->name + ")"));
    }
    ok &= calls_states >= 3;
    // adaptation insensitivity on every adjacent pair of arising states
    for (size_t i = 0; ok && i + 1 < run.states.size(); ++i) {
      AdaptedState one = adapt(run.states[i + 1], run.states[i]);
      ProgramState renamed = run.states[i + 1];
      std::map<std::string, std::string> rn;
      Frame nf;
      for (const auto& [x, v] : renamed.top().locals) { rn[x] = x + "q"; nf.locals[x + "q"] = v; }
      if (renamed.top().hole) nf.hole = rn.at(*renamed.top().hole);
      for (const auto& s : renamed.top().code) nf.code.push_back(rename_stmt(s, rn));
      renamed.stack.back() = std::move(nf);
      AdaptedState two = adapt(renamed, run.states[i]);
      for (const char* t : {"exists p. [p : Password && inside(p)]",
                            "exists o. [o : Account && o.balance < 0]"})
        ok &= satisfies(cx, one.state, parse_assertion_text(t)) ==
              satisfies(cx, two.state, parse_assertion_text(t));
    }
    // classical laws, 100 random pairs here (500 in the Catch2 suite)
    std::mt19937 rng(5);
    const ProgramState& st0 = run.states.back();
    auto atom = [&]() {
      std::vector<std::string> vs = {"v1", "v2", "v3", "this"};
      return Assertion::expr(Expr::bin(rng() % 2 ? Expr::K::Eq : Expr::K::Lt,
                                       Expr::var_(vs[rng() % vs.size()]),
                                       Expr::val_(Value::integer(int(rng() % 3)))));
    };
    for (int t = 0; ok && t < 100; ++t) {
      AssnP a = atom(), b = atom();
      bool va = satisfies(cx, st0, a), vb = satisfies(cx, st0, b);
      ok &= satisfies(cx, st0, Assertion::not_(a)) == !va;
      ok &= satisfies(cx, st0, Assertion::and_(a, b)) == (va && vb);
      ok &= satisfies(cx, st0, Assertion::or_(a, Assertion::not_(a)));
    }
    // access non-transitivity witness
    {
      ProgramState st = initial_state(parse_stmts_text("return null"));
      Value o3 = Value::addr(st.alloc(HeapObject{"Adv", {{"f1", Value::null()}}}));
      Value o2 = Value::addr(st.alloc(HeapObject{"Adv", {{"f1", o3}}}));
      Value o1 = Value::addr(st.alloc(HeapObject{"Adv", {{"f1", o2}}}));
      st.top().locals = {{"this", *interpret_var(st, "this")},
                         {"a", o1}, {"b", o2}, {"c", o3}};
      ok &= satisfies(cx, st, parse_assertion_text("access(a, b)"));
      ok &= satisfies(cx, st, parse_assertion_text("access(b, c)"));
      ok &= !satisfies(cx, st, parse_assertion_text("access(a, c)"));
    }
    // bound monotonicity, 20 triples here (100 in the Catch2 suite)
    {
      Module cell = parse_module(
          "module Cell\nclass Cell {\n field v : int\n ghost val(z : int) : int = this.v + z\n "
          "constr(n : int) { this.v := n }\n method bump() : Object {\n  a := this.v\n  this.v := "
          "a + 1\n  return null\n }\n}\n");
      NecessitySpec s = parse_spec(
          "spec S\nfrom c : Cell && c.val(0) == n\nnext !(c.val(0) == n)\nonlyIf false");
      for (int t = 0; ok && t < 20; ++t) {
        ExplorationBound b1, b2;
        b1.max_main_len = 1 + int(rng() % 3);
        b1.max_objects = 1 + int(rng() % 3);
        b2 = b1;
        b2.max_main_len += 1;
        if (check(cell, s, b1).falsified()) ok &= check(cell, s, b2).falsified();
      }
    }
    report(9, "property suites: adaptation, classical laws, access, caller axioms, monotonicity",
           ok);
  }

  // 10 — confinement verdicts
  {
    bool ok = check_confinement(modD).ok;
    {
      Module mut = modD;
      Module leaky = parse_module(
          "module M\nclass C {\n field x : int\n constr() { }\n method getLedger() : Ledger {\n  "
          "l := this.x\n  return l\n }\n}\n");
      for (auto& c : mut.classes)
        if (c.name == "Account") c.methods.push_back(leaky.classes[0].methods[0]);
      ConfinementReport rep = check_confinement(mut);
      ok &= !rep.ok && rep.violations.size() == 1;
    }
    {
      Module mut = modD;
      for (auto& c : mut.classes)
        if (c.name == "Account")
          c.ghosts.push_back(
              GhostDef{"leakKey", true, {"z", "int"}, "Object", parse_expr_text("this.key")});
      ok &= !check_confinement(mut).ok;
    }
    report(10, "ModD confined; return-mutant is one violation; intrnl ghost leak rejected", ok);
  }

  std::cout << (failures ? "ACCEPTANCE: FAIL (" + std::to_string(failures) + " criteria)"
                         : "ACCEPTANCE: PASS (10/10 criteria)")
            << std::endl;
  return failures ? 1 : 0;
}
