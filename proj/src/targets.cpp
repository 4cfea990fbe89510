#include "dgflive/targets.hpp"

#include <algorithm>

#include <json.hpp>

namespace dgflive {

using nlohmann::json;

TargetSpec TargetSpec::load(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("target spec: expected an object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (it.key() != "vulnerable" && it.key() != "key_functions")
      throw ParseError("target spec: unknown field '" + it.key() + "'");

  TargetSpec spec;
  if (!doc.contains("vulnerable") || !doc["vulnerable"].is_array() ||
      doc["vulnerable"].empty())
    throw ParseError("target spec: 'vulnerable' must be a non-empty array");

  std::set<std::string> names;
  std::set<std::string> cves;
  for (const json& jv : doc["vulnerable"]) {
    if (!jv.is_object()) throw ParseError("vulnerable[]: expected an object");
    for (auto it = jv.begin(); it != jv.end(); ++it)
      if (it.key() != "function" && it.key() != "cve" && it.key() != "weight")
        throw ParseError("vulnerable[]: unknown field '" + it.key() + "'");
    VulnerableEntry e;
    if (!jv.contains("function") || !jv["function"].is_string())
      throw ParseError("vulnerable[]: missing function name");
    if (!jv.contains("cve") || !jv["cve"].is_string())
      throw ParseError("vulnerable[]: missing cve");
    e.function = jv["function"].get<std::string>();
    e.cve = jv["cve"].get<std::string>();
    if (jv.contains("weight")) {
      if (!jv["weight"].is_number()) throw ParseError("vulnerable[]: weight must be a number");
      e.weight = jv["weight"].get<double>();
    }
    if (e.weight <= 0)
      throw ValidationError("vulnerable function " + e.function + " has non-positive weight");
    if (!names.insert(e.function).second)
      throw ValidationError("vulnerable function " + e.function + " listed twice");
    cves.insert(e.cve);
    spec.vulnerable.push_back(std::move(e));
  }

  if (doc.contains("key_functions")) {
    if (!doc["key_functions"].is_array())
      throw ParseError("target spec: 'key_functions' must be an array");
    std::set<std::string> key_names;
    for (const json& jk : doc["key_functions"]) {
      if (!jk.is_object()) throw ParseError("key_functions[]: expected an object");
      for (auto it = jk.begin(); it != jk.end(); ++it)
        if (it.key() != "function" && it.key() != "cves")
          throw ParseError("key_functions[]: unknown field '" + it.key() + "'");
      KeyFunctionEntry e;
      if (!jk.contains("function") || !jk["function"].is_string())
        throw ParseError("key_functions[]: missing function name");
      e.function = jk["function"].get<std::string>();
      if (!key_names.insert(e.function).second)
        throw ValidationError("key function " + e.function + " listed twice");
      if (!jk.contains("cves") || !jk["cves"].is_array() || jk["cves"].empty())
        throw ParseError("key_functions[]: 'cves' must be a non-empty array");
      for (const json& jc : jk["cves"]) {
        if (!jc.is_string()) throw ParseError("key_functions[]: cve entries must be strings");
        std::string cve = jc.get<std::string>();
        if (!cves.count(cve))
          throw ValidationError("key function " + e.function +
                                " references unknown cve " + cve);
        e.cves.push_back(std::move(cve));
      }
      spec.key_functions.push_back(std::move(e));
    }
  }
  return spec;
}

std::vector<std::string> TargetSpec::cve_list() const {
  std::vector<std::string> out;
  for (const auto& v : vulnerable)
    if (std::find(out.begin(), out.end(), v.cve) == out.end()) out.push_back(v.cve);
  return out;
}

namespace {

// Forward reachability over an owner-filtered call graph.
std::set<uint32_t> reachable_from(const Program& p, uint32_t start,
                                  bool library_only) {
  std::set<uint32_t> seen{start};
  std::vector<uint32_t> stack{start};
  while (!stack.empty()) {
    uint32_t f = stack.back();
    stack.pop_back();
    for (uint32_t c : p.callees[f]) {
      if (library_only && p.functions[c].owner != Owner::Library) continue;
      if (seen.insert(c).second) stack.push_back(c);
    }
  }
  return seen;
}

uint32_t resolve_library_fn(const Program& p, const std::string& name,
                            const char* role) {
  auto ix = p.find_function(name);
  if (!ix) throw UnknownFunction(std::string(role) + " function " + name + " not found");
  if (p.functions[*ix].owner != Owner::Library)
    throw OwnerMismatch(std::string(role) + " function " + name + " is client-owned");
  return *ix;
}

}  // namespace

std::pair<std::map<uint32_t, double>, std::map<uint32_t, double>> distribute_weights(
    const Program& program, const TargetSpec& spec, const std::set<uint32_t>& a_fns,
    const std::set<uint32_t>& cc_fns) {
  (void)a_fns;
  std::map<uint32_t, double> w_v;
  std::map<uint32_t, double> shares_sum;
  std::map<uint32_t, uint32_t> shares_cnt;

  double max_raw = 0;
  for (const auto& v : spec.vulnerable) {
    uint32_t vf = resolve_library_fn(program, v.function, "vulnerable");
    w_v[vf] = v.weight;
    max_raw = std::max(max_raw, v.weight);

    // R(v): CC functions reaching v through the combined call graph.
    std::vector<uint32_t> reachers;
    for (uint32_t cc : cc_fns)
      if (reachable_from(program, cc, /*library_only=*/false).count(vf))
        reachers.push_back(cc);
    if (reachers.empty()) continue;
    double share = v.weight / static_cast<double>(reachers.size());
    for (uint32_t cc : reachers) {
      shares_sum[cc] += share;
      shares_cnt[cc] += 1;
    }
  }
  for (auto& [fn, w] : w_v) w /= max_raw;

  std::map<uint32_t, double> w_cc;
  double max_mean = 0;
  for (uint32_t cc : cc_fns) {
    auto it = shares_sum.find(cc);
    double mean = it == shares_sum.end() ? 0.0 : it->second / shares_cnt[cc];
    w_cc[cc] = mean;
    max_mean = std::max(max_mean, mean);
  }
  if (max_mean > 0)
    for (auto& [fn, w] : w_cc) w /= max_mean;

  return {std::move(w_v), std::move(w_cc)};
}

TargetTuple build_target_tuple(const Program& program, const TargetSpec& spec) {
  TargetTuple t;
  for (const auto& v : spec.vulnerable)
    t.v_fns.insert(resolve_library_fn(program, v.function, "vulnerable"));
  for (const auto& k : spec.key_functions)
    resolve_library_fn(program, k.function, "key");

  // A: library functions reaching some v within the library call graph.
  // A function reaches itself by the empty path, so V is included.
  for (uint32_t f = 0; f < program.functions.size(); ++f) {
    if (program.functions[f].owner != Owner::Library) continue;
    auto reach = reachable_from(program, f, /*library_only=*/true);
    for (uint32_t v : t.v_fns)
      if (reach.count(v)) {
        t.a_fns.insert(f);
        break;
      }
  }

  // CC: client functions with a direct call edge into A.
  for (uint32_t f = 0; f < program.functions.size(); ++f) {
    if (program.functions[f].owner != Owner::Client) continue;
    for (uint32_t c : program.callees[f])
      if (t.a_fns.count(c)) {
        t.cc_fns.insert(f);
        break;
      }
  }
  t.empty_cc = t.cc_fns.empty();

  for (uint32_t v : t.v_fns) t.vt_blocks.insert(program.fbb(v));
  for (uint32_t cc : t.cc_fns) t.ct_blocks.insert(program.fbb(cc));

  auto [w_v, w_cc] = distribute_weights(program, spec, t.a_fns, t.cc_fns);
  t.w_v = std::move(w_v);
  t.w_cc = std::move(w_cc);
  return t;
}

}  // namespace dgflive
