// nec — command-line front end: run programs, evaluate assertions, check
// confinement, bounded-check necessity specs, and replay proof scripts.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nec/json_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFalsified = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBoundHit = 3;

bool use_color() {
  const char* c = std::getenv("NEC_COLOR");
  return !(c && std::string(c) == "0");
}
std::string red(const std::string& s) { return use_color() ? "\033[31m" + s + "\033[0m" : s; }
std::string green(const std::string& s) { return use_color() ? "\033[32m" + s + "\033[0m" : s; }

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

nec::Module load_module(const std::string& path) { return nec::parse_module(slurp(path)); }

std::vector<nec::NecessitySpec> load_specs(const std::string& path, const std::string& name) {
  auto specs = nec::parse_specs(slurp(path));
  if (name.empty()) return specs;
  for (auto& s : specs)
    if (s.name == name) return {s};
  throw std::runtime_error("no spec named '" + name + "' in " + path);
}

void print_counterexample(const nec::Counterexample& ce) {
  std::cout << "  adversary main:" << std::endl;
  for (const auto& st : ce.adversary.main) std::cout << "    " << to_string(st) << std::endl;
  if (!ce.valuation.empty()) {
    std::cout << "  valuation:";
    for (const auto& [x, v] : ce.valuation) std::cout << " " << x << "=" << to_string(v);
    std::cout << std::endl;
  }
  std::cout << "  " << ce.description << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"necessity toolkit: checker, interpreter, and proof kernel"};
  app.require_subcommand(1);
  bool json_mode = false;
  app.add_flag("--json", json_mode, "emit a single JSON document on stdout");
  int jobs = 1;
  app.add_option("--jobs", jobs, "cap checker workers (current engine is sequential)")
      ->check(CLI::PositiveNumber);

  std::string mod_path, spec_path, spec_name, proof_path, main_path, state_path, dump_path,
      assertion_text;
  std::vector<std::string> table_mods;
  nec::ExplorationBound bound;
  std::vector<std::int64_t> ints;

  auto add_bound = [&](CLI::App* c) {
    c->add_option("--len", bound.max_main_len, "max adversary main length");
    c->add_option("--objects", bound.max_objects, "max adversary-allocated objects");
    c->add_option("--ints", ints, "integer literal pool")->delimiter(',');
    c->add_option("--internal-steps", bound.max_internal, "internal small-step budget");
  };

  auto* run = app.add_subcommand("run", "execute a main program against a module");
  run->add_option("-m,--module", mod_path, "module file (.loo)")->required();
  run->add_option("main", main_path, "file of statements forming main")->required();
  run->add_option("--dump", dump_path, "write the final state as JSON");

  auto* eval = app.add_subcommand("eval", "evaluate an assertion against a dumped state");
  eval->add_option("-m,--module", mod_path, "module file (.loo)")->required();
  eval->add_option("--state", state_path, "state JSON produced by run --dump")->required();
  eval->add_option("-a,--assertion", assertion_text, "assertion text")->required();

  auto* confine = app.add_subcommand("confine", "check the confinement discipline");
  confine->add_option("-m,--module", mod_path, "module file (.loo)")->required();

  auto* check = app.add_subcommand("check", "bounded search for a spec counterexample");
  check->add_option("-m,--module", mod_path, "module file (.loo)")->required();
  check->add_option("-s,--specs", spec_path, "spec file (.nspec)")->required();
  check->add_option("--spec", spec_name, "only this named spec");
  add_bound(check);

  auto* prove = app.add_subcommand("prove", "replay a proof script");
  prove->add_option("-m,--module", mod_path, "module file (.loo)")->required();
  prove->add_option("-p,--proof", proof_path, "proof script (.nproof)")->required();

  auto* table = app.add_subcommand("table", "check every module against every spec");
  table->add_option("-m,--module", table_mods, "module files (repeatable)")->required();
  table->add_option("-s,--specs", spec_path, "spec file (.nspec)")->required();
  add_bound(table);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  if (!ints.empty()) bound.int_pool = ints;

  try {
    if (*run) {
      nec::Module m = load_module(mod_path);
      auto stmts = nec::parse_stmts_text(slurp(main_path));
      nec::RunResult rr = nec::run_to_completion(m, nec::initial_state(stmts));
      const nec::ProgramState& fin = rr.trace.back();
      if (!dump_path.empty()) {
        std::ofstream out(dump_path);
        out << nec::to_json(fin).dump(2) << std::endl;
      }
      if (json_mode) {
        nec::json j;
        j["done"] = rr.done;
        j["stuck"] = rr.stuck;
        j["stuck_reason"] = rr.stuck_reason;
        j["steps"] = rr.trace.size() - 1;
        nec::json locals = nec::json::object();
        for (const auto& [x, v] : fin.top().locals) locals[x] = to_string(v);
        j["locals"] = locals;
        std::cout << j.dump(2) << std::endl;
      } else {
        if (rr.stuck) std::cout << red("stuck: " + rr.stuck_reason) << std::endl;
        for (const auto& [x, v] : fin.top().locals)
          std::cout << x << " = " << to_string(v) << std::endl;
      }
      return rr.stuck ? kExitFalsified : (rr.done ? kExitOk : kExitBoundHit);
    }

    if (*eval) {
      nec::Module m = load_module(mod_path);
      nec::ProgramState st = nec::state_from_json(nec::json::parse(slurp(state_path)));
      nec::AssnP a = nec::parse_assertion_text(assertion_text);
      nec::SatContext cx = nec::make_sat_context(m, m);
      bool holds = nec::satisfies(cx, st, a);
      if (json_mode)
        std::cout << nec::json{{"holds", holds}}.dump(2) << std::endl;
      else
        std::cout << (holds ? green("holds") : red("does not hold")) << std::endl;
      return holds ? kExitOk : kExitFalsified;
    }

    if (*confine) {
      nec::Module m = load_module(mod_path);
      nec::ConfinementReport rep = nec::check_confinement(m);
      if (json_mode) {
        std::cout << nec::to_json(rep).dump(2) << std::endl;
      } else if (rep.ok) {
        std::cout << green("confinement ok") << std::endl;
      } else {
        for (const auto& v : rep.violations)
          std::cout << red("violation") << " " << v.cls << "." << v.member << ": " << v.reason
                    << std::endl;
      }
      return rep.ok ? kExitOk : kExitFalsified;
    }

    if (*check) {
      nec::Module m = load_module(mod_path);
      auto specs = load_specs(spec_path, spec_name);
      bool any_falsified = false, any_pruned = false;
      nec::json out = nec::json::array();
      for (const auto& s : specs) {
        nec::CheckResult r = nec::check(m, s, bound);
        any_falsified |= r.falsified();
        any_pruned |= r.divergence_pruned;
        if (json_mode) {
          nec::json j = nec::to_json(r);
          j["spec"] = s.name;
          out.push_back(j);
        } else {
          std::cout << s.name << ": "
                    << (r.falsified() ? red("FALSIFIED") : green("no counterexample within bound"))
                    << " (" << r.programs_explored << " programs)" << std::endl;
          if (r.counterexample) print_counterexample(*r.counterexample);
        }
      }
      if (json_mode) std::cout << out.dump(2) << std::endl;
      if (any_falsified) return kExitFalsified;
      return any_pruned ? kExitBoundHit : kExitOk;
    }

    if (*prove) {
      nec::Module m = load_module(mod_path);
      nec::ProofScript script = nec::parse_proof_script(slurp(proof_path));
      nec::ScriptReport rep = nec::check_script(m, script);
      if (json_mode) {
        std::cout << nec::to_json(rep).dump(2) << std::endl;
      } else {
        for (const auto& e : rep.errors)
          std::cout << red("error") << " line " << e.line << " [" << e.label
                    << "]: " << e.message << std::endl;
        for (const auto& w : rep.warnings) std::cout << "warning: " << w << std::endl;
        std::cout << (rep.ok ? green("accepted") : red("rejected")) << " (" << rep.steps_checked
                  << " steps)" << std::endl;
      }
      return rep.ok ? kExitOk : kExitFalsified;
    }

    if (*table) {
      std::vector<nec::Module> mods;
      std::vector<const nec::Module*> modp;
      std::vector<std::string> names;
      for (const auto& p : table_mods) mods.push_back(load_module(p));
      for (const auto& m : mods) {
        modp.push_back(&m);
        names.push_back(m.name);
      }
      auto specs = load_specs(spec_path, "");
      auto cells = nec::check_table(modp, specs, bound);
      bool any_falsified = false;
      for (const auto& row : cells)
        for (const auto& c : row) any_falsified |= c.falsified();
      if (json_mode) {
        std::cout << nec::table_to_json(names, specs, cells).dump(2) << std::endl;
      } else {
        for (size_t i = 0; i < cells.size(); ++i) {
          std::cout << names[i] << ":";
          for (size_t k = 0; k < specs.size(); ++k)
            std::cout << "  " << specs[k].name << "="
                      << (cells[i][k].falsified() ? red("FALSIFIED") : green("ok"));
          std::cout << std::endl;
        }
      }
      return any_falsified ? kExitFalsified : kExitOk;
    }
  } catch (const nec::ParseError& e) {
    std::cerr << "parse error at " << e.line << ":" << e.col << ": " << e.what() << std::endl;
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitUsage;
  }
  return kExitUsage;
}
