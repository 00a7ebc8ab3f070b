// Proof kernel: normal forms, the validity engine, rule checking, and script
// replay.

#include <catch_amalgamated.hpp>
#include <fstream>
#include <random>
#include <sstream>

#include "nec/proof.hpp"

using namespace nec;

namespace {

Module load(const std::string& n) {
  std::ifstream f(std::string(NEC_FIXTURES_DIR) + "/" + n);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_module(ss.str());
}

std::string slurp_fixture(const std::string& n) {
  std::ifstream f(std::string(NEC_FIXTURES_DIR) + "/" + n);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

AssnP A(const std::string& t) { return parse_assertion_text(t); }

bool entails(const Module& m, const std::string& from, const std::string& to) {
  ValidityEngine eng(m);
  return eng.proves_implication(A(from), A(to));
}

}  // namespace

TEST_CASE("negation normal form") {
  CHECK(to_string(nnf(A("!(x == y && a < b)"), false)) == to_string(A("!(x == y) || !(a < b)")));
  CHECK(to_string(nnf(A("!(!(x == y))"), false)) == to_string(A("x == y")));
  CHECK(to_string(nnf(A("x == y ==> a < b"), false)) == to_string(A("!(x == y) || a < b")));
  CHECK(to_string(nnf(A("!(exists o. [external(o)])"), false)) ==
        to_string(A("forall o. [!external(o)]")));
}

TEST_CASE("conjunct sets ignore order and association") {
  CHECK(same_conjunct_set(A("a == b && (c == d && e == f)"), A("(e == f && a == b) && c == d")));
  CHECK_FALSE(same_conjunct_set(A("a == b && c == d"), A("a == b")));
  CHECK(same_nnf(A("!(!(a == b))"), A("a == b")));
}

TEST_CASE("validity engine: frozen goal battery") {
  Module m = load("modC.loo");
  // positive goals
  CHECK(entails(m, "a == b && b == c", "a == c"));
  CHECK(entails(m, "a == b", "b == a"));
  CHECK(entails(m, "a.balance == bal", "!(a.balance < bal)"));
  CHECK(entails(m, "x == a && z2 == x.pwd && calls(_, x.set(z1, z2))",
                "calls(_, a.set(_, a.pwd))"));
  CHECK(entails(m, "a : Account && a.balance == bal",
                "exists p. [a : Account && a.pwd == p && p : Password]"));
  CHECK(entails(m, "calls(_, a.set(_, a.pwd)) && a.pwd == p && inside(p)", "false"));
  CHECK(entails(m, "!inside(p)", "exists o. [external(o) && access(o, p)]"));
  CHECK(entails(m, "external(o) && access(o, p) && p : Password", "!inside(p)"));
  CHECK(entails(m, "x == y || y == z", "y == x || z == y"));
  CHECK(entails(m, "a : Account", "internal(a)"));
  CHECK(entails(m, "p : Password && q : Object", "!(internal(q) && external(q))"));
  // negative goals: the engine must not prove these
  CHECK_FALSE(entails(m, "a == b", "a == c"));
  CHECK_FALSE(entails(m, "a.balance == bal", "a.balance < bal"));
  CHECK_FALSE(entails(m, "calls(_, a.set(z1, z2))", "calls(_, b.set(z1, z2))"));
  CHECK_FALSE(entails(m, "inside(p)", "false"));
  CHECK_FALSE(entails(m, "x == a || z2 == x.pwd", "x == a"));
}

TEST_CASE("hoare axioms must be classical and well-addressed") {
  Module m = load("modC.loo");
  Judgment good = Judgment::hoare(
      HoareAxiom{"Account", "set", "x", {"z1", "z2"}, A("x : Account"), A("x : Account")});
  CHECK_FALSE(check_rule(m, "Axiom", {}, good).has_value());
  // unknown method
  Judgment bad1 = Judgment::hoare(
      HoareAxiom{"Account", "frob", "x", {"z1"}, A("x : Account"), A("x : Account")});
  CHECK(check_rule(m, "Axiom", {}, bad1).has_value());
  // non-classical precondition
  Judgment bad2 = Judgment::hoare(
      HoareAxiom{"Account", "set", "x", {"z1", "z2"}, A("inside(x)"), A("x : Account")});
  CHECK(check_rule(m, "Axiom", {}, bad2).has_value());
}

TEST_CASE("structural validity rules") {
  Module m = load("modC.loo");
  CHECK_FALSE(check_rule(m, "ExcludedMiddle", {},
                         Judgment::valid(A("x == y || !(x == y)")))
                  .has_value());
  CHECK_FALSE(check_rule(m, "ClassInt", {},
                         Judgment::valid(A("a : Account ==> internal(a)")))
                  .has_value());
  CHECK(check_rule(m, "ExcludedMiddle", {}, Judgment::valid(A("x == y || x == z"))).has_value());
  CHECK_FALSE(check_rule(m, "Taut", {}, Judgment::valid(A("x == x"))).has_value());
}

TEST_CASE("rule registry is stable and complete") {
  auto names = rule_names();
  CHECK(names.size() >= 30);
  for (const char* need : {"Axiom", "EncAuto", "If1Classical", "If1Inside", "If1Absurd",
                           "If1Internal", "Changes", "IfOrE", "IfTrans", "IfExists", "End"})
    CHECK(std::find(names.begin(), names.end(), need) != names.end());
  // unknown rules are reported, not crashes
  Module m = load("modC.loo");
  auto err = check_rule(m, "NoSuchRule", {}, Judgment::valid(A("x == x")));
  CHECK(err.has_value());
}

TEST_CASE("script parsing") {
  ProofScript s = parse_proof_script(
      "# comment\n"
      "Step One: CONCLUDE VALID { x == x } BY Taut\n"
      "  // continuation comment\n"
      "Step Two: CONCLUDE FROM { a : Account }\n"
      "  TO { a == null } ONLYIF { a == a } BY IfStart FROM Step One\n");
  REQUIRE(s.steps.size() == 2);
  CHECK(s.steps[0].label == "Step One");
  CHECK(s.steps[1].rule == "IfStart");
  REQUIRE(s.steps[1].from.size() == 1);
  CHECK(s.steps[1].from[0] == "Step One");
  CHECK_THROWS_AS(parse_proof_script("Oops: VALID { x } BY Taut"), ParseError);
  CHECK_THROWS_AS(parse_proof_script("{ x == x } floating text"), ParseError);
}

TEST_CASE("script checking reports per-step errors") {
  Module m = load("modC.loo");
  ProofScript s = parse_proof_script(
      "one: CONCLUDE VALID { x == x } BY Taut\n"
      "two: CONCLUDE VALID { x == y } BY Taut\n"          // not provable
      "three: CONCLUDE VALID { y == y } BY Taut FROM nine\n"  // undefined label
      "four: CONCLUDE VALID { z == z } BY Taut\n");
  ScriptReport rep = check_script(m, s);
  CHECK_FALSE(rep.ok);
  CHECK(rep.steps_checked == 2);  // only the sound steps count
  REQUIRE(rep.errors.size() == 2);
  CHECK(rep.errors[0].label == "two");
  CHECK(rep.errors[1].label == "three");
}

TEST_CASE("the fixture scripts are accepted") {
  struct Pair { const char* mod; const char* script; };
  for (auto [mod, script] : {Pair{"modA.loo", "modA_next.nproof"},
                             Pair{"modB.loo", "modB_through.nproof"},
                             Pair{"modC.loo", "modC_robust.nproof"},
                             Pair{"modC.loo", "modC_leak.nproof"},
                             Pair{"modD.loo", "modD_ghost.nproof"}}) {
    Module m = load(mod);
    ScriptReport rep = check_script(m, parse_proof_script(slurp_fixture(script)));
    INFO(script);
    for (const auto& e : rep.errors) INFO(e.label << ": " << e.message);
    CHECK(rep.ok);
  }
}

TEST_CASE("sampled mutations of the showcase script are rejected") {
  Module m = load("modC.loo");
  ProofScript s = parse_proof_script(slurp_fixture("modC_robust.nproof"));
  Judgment target = Judgment::nec(Judgment::K::OnlyIf, A("a : Account && a.balance == bal"),
                                  A("a.balance < bal"),
                                  A("exists o. [external(o) && access(o, a.pwd)]"));
  auto accepts = [&](const ProofScript& sc) {
    ScriptReport rep = check_script(m, sc);
    if (!rep.ok) return false;
    for (const auto& st : sc.steps)
      if (st.j.k == target.k && same_nnf(st.j.a1, target.a1) && same_nnf(st.j.a2, target.a2) &&
          same_nnf(st.j.a3, target.a3))
        return true;
    return false;
  };
  REQUIRE(accepts(s));
  std::mt19937 rng(7);
  // 20 random deletions
  for (int t = 0; t < 20; ++t) {
    ProofScript mu = s;
    mu.steps.erase(mu.steps.begin() + rng() % mu.steps.size());
    CHECK_FALSE(accepts(mu));
  }
  // 20 random premise replacements
  for (int t = 0; t < 20; ++t) {
    ProofScript mu = s;
    size_t i = 1 + rng() % (mu.steps.size() - 1);
    if (mu.steps[i].from.empty()) { --t; continue; }
    size_t slot = rng() % mu.steps[i].from.size();
    const std::string& alt = mu.steps[rng() % i].label;
    if (alt == mu.steps[i].from[slot]) { --t; continue; }
    mu.steps[i].from[slot] = alt;
    CHECK_FALSE(accepts(mu));
  }
}
