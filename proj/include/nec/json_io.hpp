#pragma once
// JSON serialization of reports: machine-readable output for the CLI.

#include <json.hpp>

#include "nec/checker.hpp"
#include "nec/confine.hpp"
#include "nec/proof.hpp"

namespace nec {

using json = nlohmann::json;

inline json to_json(const Counterexample& ce) {
  json j;
  j["main"] = json::array();
  for (const auto& st : ce.adversary.main) j["main"].push_back(to_string(st));
  j["violation_indices"] = {ce.i, ce.j};
  json val = json::object();
  for (const auto& [name, v] : ce.valuation) val[name] = to_string(v);
  j["valuation"] = val;
  j["description"] = ce.description;
  return j;
}

inline json to_json(const CheckResult& r) {
  json j;
  j["verdict"] = r.falsified() ? "Falsified" : "NoCounterexampleWithinBound";
  j["programs_explored"] = r.programs_explored;
  j["divergence_pruned"] = r.divergence_pruned;
  if (r.counterexample) j["counterexample"] = to_json(*r.counterexample);
  return j;
}

inline json to_json(const ConfinementReport& r) {
  json j;
  j["ok"] = r.ok;
  j["violations"] = json::array();
  for (const auto& v : r.violations)
    j["violations"].push_back({{"class", v.cls}, {"member", v.member}, {"reason", v.reason}});
  return j;
}

inline json to_json(const ScriptReport& r) {
  json j;
  j["ok"] = r.ok;
  j["steps_checked"] = r.steps_checked;
  j["errors"] = json::array();
  for (const auto& e : r.errors)
    j["errors"].push_back({{"label", e.label}, {"line", e.line}, {"message", e.message}});
  j["warnings"] = r.warnings;
  return j;
}

// ---------------------------------------------------------------- state dump/load

inline json to_json(const Value& v) {
  switch (v.k) {
    case Value::K::Null: return nullptr;
    case Value::K::Bool: return v.b;
    case Value::K::Int: return v.i;
    case Value::K::Addr: return json{{"addr", v.a}};
  }
  return nullptr;
}

inline Value value_from_json(const json& j) {
  if (j.is_null()) return Value::null();
  if (j.is_boolean()) return Value::boolean(j.get<bool>());
  if (j.is_number_integer()) return Value::integer(j.get<std::int64_t>());
  if (j.is_object() && j.contains("addr")) return Value::addr(j["addr"].get<std::uint32_t>());
  throw std::runtime_error("bad value in state file: " + j.dump());
}

inline json to_json(const ProgramState& st) {
  json j;
  json heap = json::object();
  for (const auto& [addr, obj] : st.heap) {
    json flds = json::object();
    for (const auto& [f, v] : obj.flds) flds[f] = to_json(v);
    heap[std::to_string(addr)] = {{"class", obj.cls}, {"fields", flds}};
  }
  j["heap"] = heap;
  j["stack"] = json::array();
  for (const auto& fr : st.stack) {
    json locals = json::object();
    for (const auto& [x, v] : fr.locals) locals[x] = to_json(v);
    json code = json::array();
    for (const auto& s : fr.code) code.push_back(to_string(s));
    json f = {{"locals", locals}, {"code", code}, {"is_ctor", fr.is_ctor}};
    if (fr.hole) f["hole"] = *fr.hole;
    j["stack"].push_back(f);
  }
  j["next_addr"] = st.next_addr;
  return j;
}

inline ProgramState state_from_json(const json& j) {
  ProgramState st;
  for (const auto& [key, o] : j.at("heap").items()) {
    HeapObject obj;
    obj.cls = o.at("class").get<std::string>();
    for (const auto& [f, v] : o.at("fields").items()) obj.flds[f] = value_from_json(v);
    st.heap.emplace(static_cast<std::uint32_t>(std::stoul(key)), std::move(obj));
  }
  for (const auto& f : j.at("stack")) {
    Frame fr;
    for (const auto& [x, v] : f.at("locals").items()) fr.locals[x] = value_from_json(v);
    std::string code;
    for (const auto& s : f.at("code")) code += s.get<std::string>() + "\n";
    auto stmts = parse_stmts_text(code);
    fr.code.assign(stmts.begin(), stmts.end());
    fr.is_ctor = f.value("is_ctor", false);
    if (f.contains("hole")) fr.hole = f["hole"].get<std::string>();
    st.stack.push_back(std::move(fr));
  }
  st.next_addr = j.value("next_addr", 0u);
  if (st.next_addr == 0) {
    for (const auto& [a, _] : st.heap) st.next_addr = std::max(st.next_addr, a + 1);
    if (st.next_addr == 0) st.next_addr = 1;
  }
  if (st.stack.empty()) throw std::runtime_error("state file has an empty stack");
  return st;
}

inline json table_to_json(const std::vector<std::string>& module_names,
                          const std::vector<NecessitySpec>& specs,
                          const std::vector<std::vector<CheckResult>>& cells) {
  json j;
  j["modules"] = module_names;
  j["specs"] = json::array();
  for (const auto& s : specs) j["specs"].push_back(s.name);
  j["rows"] = json::array();
  for (const auto& row : cells) {
    json r = json::array();
    for (const auto& c : row) r.push_back(to_json(c));
    j["rows"].push_back(r);
  }
  return j;
}

}  // namespace nec
