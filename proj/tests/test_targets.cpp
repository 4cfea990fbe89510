#include <doctest.h>

#include "dgflive/targets.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace dgflive;
using namespace dgflive::testing;

namespace {

// client {main -> call_lib}, library {api -> helper -> vuln}
const char* kChainDoc = R"({
  "name":"chain5","entry":"main",
  "functions":[
    {"name":"main","owner":"client","blocks":[
      {"id":"b0","calls":["call_lib"],"branch":{"uncond":"return"}}]},
    {"name":"call_lib","owner":"client","blocks":[
      {"id":"b0","calls":["api"],"branch":{"uncond":"return"}}]},
    {"name":"api","owner":"library","blocks":[
      {"id":"b0","calls":["helper"],"branch":{"uncond":"return"}}]},
    {"name":"helper","owner":"library","blocks":[
      {"id":"b0","calls":["vuln"],"branch":{"uncond":"return"}}]},
    {"name":"vuln","owner":"library","blocks":[
      {"id":"b0","calls":[],"branch":{"uncond":"return"}}]}]
})";

std::set<std::string> fn_names(const Program& p, const std::set<uint32_t>& fns) {
  std::set<std::string> out;
  for (uint32_t f : fns) out.insert(p.functions[f].name);
  return out;
}

}  // namespace

TEST_CASE("five-node caller chain") {
  Program p = Program::load(kChainDoc);
  TargetSpec spec = TargetSpec::load(
      R"({"vulnerable":[{"function":"vuln","cve":"CVE-1","weight":5.0}]})");
  TargetTuple t = build_target_tuple(p, spec);
  CHECK(fn_names(p, t.v_fns) == std::set<std::string>{"vuln"});
  CHECK(fn_names(p, t.a_fns) == std::set<std::string>{"api", "helper", "vuln"});
  CHECK(fn_names(p, t.cc_fns) == std::set<std::string>{"call_lib"});
  CHECK(t.vt_blocks == std::set<uint32_t>{p.fbb(*p.find_function("vuln"))});
  CHECK(t.ct_blocks == std::set<uint32_t>{p.fbb(*p.find_function("call_lib"))});
  CHECK_FALSE(t.empty_cc);
}

TEST_CASE("isolated vulnerable function yields an empty-CC warning") {
  Program p = Program::load(R"({
    "name":"iso","entry":"main",
    "functions":[
      {"name":"main","owner":"client","blocks":[
        {"id":"b0","calls":[],"branch":{"uncond":"return"}}]},
      {"name":"v","owner":"library","blocks":[
        {"id":"b0","calls":[],"branch":{"uncond":"return"}}]}]
  })");
  TargetSpec spec =
      TargetSpec::load(R"({"vulnerable":[{"function":"v","cve":"C","weight":3.0}]})");
  TargetTuple t = build_target_tuple(p, spec);
  CHECK(fn_names(p, t.a_fns) == std::set<std::string>{"v"});
  CHECK(t.cc_fns.empty());
  CHECK(t.empty_cc);
  // v keeps its normalized weight even with no caller
  CHECK(t.w_v.at(*p.find_function("v")) == 1.0);
}

TEST_CASE("two vulnerable functions sharing one caller chain") {
  Program p = Program::load(R"({
    "name":"twosinks","entry":"main",
    "functions":[
      {"name":"main","owner":"client","blocks":[
        {"id":"b0","calls":["entry_fn"],"branch":{"uncond":"return"}}]},
      {"name":"entry_fn","owner":"client","blocks":[
        {"id":"b0","calls":["api"],"branch":{"uncond":"return"}}]},
      {"name":"api","owner":"library","blocks":[
        {"id":"b0","calls":["v1","v2"],"branch":{"uncond":"return"}}]},
      {"name":"v1","owner":"library","blocks":[
        {"id":"b0","calls":[],"branch":{"uncond":"return"}}]},
      {"name":"v2","owner":"library","blocks":[
        {"id":"b0","calls":[],"branch":{"uncond":"return"}}]}]
  })");
  TargetSpec spec = TargetSpec::load(R"({"vulnerable":[
    {"function":"v1","cve":"C1","weight":2.0},
    {"function":"v2","cve":"C2","weight":1.0}]})");
  TargetTuple t = build_target_tuple(p, spec);
  CHECK(t.cc_fns.size() == 1);
  CHECK(t.vt_blocks.size() == 2);
  CHECK(t.w_v.at(*p.find_function("v1")) == 1.0);
  CHECK(t.w_v.at(*p.find_function("v2")) == 0.5);
}

TEST_CASE("weight distribution examples") {
  SUBCASE("single vulnerable function, single caller") {
    Program p = Program::load(kChainDoc);
    TargetSpec spec = TargetSpec::load(
        R"({"vulnerable":[{"function":"vuln","cve":"C","weight":7.3}]})");
    TargetTuple t = build_target_tuple(p, spec);
    CHECK(t.w_v.at(*p.find_function("vuln")) == 1.0);
    CHECK(t.w_cc.at(*p.find_function("call_lib")) == 1.0);
  }

  SUBCASE("share-then-average example") {
    // cc1 reaches v1 and v2; cc2 reaches v1 only.
    Program p = Program::load(R"({
      "name":"w","entry":"main",
      "functions":[
        {"name":"main","owner":"client","blocks":[
          {"id":"b0","calls":["cc1","cc2"],"branch":{"uncond":"return"}}]},
        {"name":"cc1","owner":"client","blocks":[
          {"id":"b0","calls":["a1"],"branch":{"uncond":"return"}}]},
        {"name":"cc2","owner":"client","blocks":[
          {"id":"b0","calls":["a2"],"branch":{"uncond":"return"}}]},
        {"name":"a1","owner":"library","blocks":[
          {"id":"b0","calls":["v1","v2"],"branch":{"uncond":"return"}}]},
        {"name":"a2","owner":"library","blocks":[
          {"id":"b0","calls":["v1"],"branch":{"uncond":"return"}}]},
        {"name":"v1","owner":"library","blocks":[
          {"id":"b0","calls":[],"branch":{"uncond":"return"}}]},
        {"name":"v2","owner":"library","blocks":[
          {"id":"b0","calls":[],"branch":{"uncond":"return"}}]}]
    })");
    TargetSpec spec = TargetSpec::load(R"({"vulnerable":[
      {"function":"v1","cve":"C1","weight":1.0},
      {"function":"v2","cve":"C2","weight":0.5}]})");
    TargetTuple t = build_target_tuple(p, spec);
    // cc1 shares {0.5, 0.5} mean 0.5; cc2 shares {0.5} mean 0.5; both max to 1
    CHECK(t.w_cc.at(*p.find_function("cc1")) == doctest::Approx(1.0));
    CHECK(t.w_cc.at(*p.find_function("cc2")) == doctest::Approx(1.0));
    CHECK(t.w_v.at(*p.find_function("v1")) == 1.0);
    CHECK(t.w_v.at(*p.find_function("v2")) == 0.5);
  }
}

TEST_CASE("spec errors") {
  Program p = Program::load(kChainDoc);
  CHECK_THROWS_AS(
      build_target_tuple(p, TargetSpec::load(
          R"({"vulnerable":[{"function":"ghost","cve":"C","weight":1}]})")),
      UnknownFunction);
  CHECK_THROWS_AS(
      build_target_tuple(p, TargetSpec::load(
          R"({"vulnerable":[{"function":"main","cve":"C","weight":1}]})")),
      OwnerMismatch);
  // client-owned key functions are rejected
  CHECK_THROWS_AS(
      build_target_tuple(p, TargetSpec::load(R"({
        "vulnerable":[{"function":"vuln","cve":"C","weight":1}],
        "key_functions":[{"function":"call_lib","cves":["C"]}]})")),
      OwnerMismatch);
  // key function cve must reference a vulnerable entry
  CHECK_THROWS_AS(TargetSpec::load(R"({
      "vulnerable":[{"function":"vuln","cve":"C","weight":1}],
      "key_functions":[{"function":"helper","cves":["C-OTHER"]}]})"),
                  ValidationError);
  CHECK_THROWS_AS(TargetSpec::load(R"({
      "vulnerable":[{"function":"vuln","cve":"C","weight":-1}]})"),
                  ValidationError);
  CHECK_THROWS_AS(TargetSpec::load(R"({
      "vulnerable":[{"function":"vuln","cve":"C1","weight":1},
                    {"function":"vuln","cve":"C2","weight":1}]})"),
                  ValidationError);
}

TEST_CASE("reachability matches the transitive-closure oracle") {
  Rng rng(0xAB5EED);
  for (int iter = 0; iter < 80; ++iter) {
    Program p = Program::load(random_program_json(rng, 12, 4).dump());
    TargetSpec spec = TargetSpec::load(random_targets_json(rng, p).dump());
    TargetTuple t = build_target_tuple(p, spec);

    auto lib_closure = oracle::transitive_closure(oracle::call_adj(p, Owner::Library));
    std::set<uint32_t> v_ix;
    for (const auto& v : spec.vulnerable) v_ix.insert(*p.find_function(v.function));

    std::set<uint32_t> a_expect;
    for (uint32_t f = 0; f < p.functions.size(); ++f) {
      if (p.functions[f].owner != Owner::Library) continue;
      for (uint32_t v : v_ix)
        if (lib_closure[f][v]) a_expect.insert(f);
    }
    CHECK(t.a_fns == a_expect);

    std::set<uint32_t> cc_expect;
    for (uint32_t f = 0; f < p.functions.size(); ++f) {
      if (p.functions[f].owner != Owner::Client) continue;
      for (uint32_t callee : p.callees[f])
        if (a_expect.count(callee)) cc_expect.insert(f);
    }
    CHECK(t.cc_fns == cc_expect);

    // normalization invariants
    double max_v = 0, max_cc = 0;
    for (const auto& [f, w] : t.w_v) {
      CHECK(w >= 0);
      CHECK(w <= 1);
      max_v = std::max(max_v, w);
    }
    CHECK(max_v == 1.0);
    for (const auto& [f, w] : t.w_cc) {
      CHECK(w >= 0);
      CHECK(w <= 1);
      max_cc = std::max(max_cc, w);
    }
    if (!t.w_cc.empty()) CHECK(max_cc == 1.0);
  }
}

TEST_CASE("adding a call edge never shrinks A or CC") {
  Rng rng(0xEDEC0DE);
  for (int iter = 0; iter < 30; ++iter) {
    json doc = random_program_json(rng, 8, 4);
    Program p = Program::load(doc.dump());
    TargetSpec spec = TargetSpec::load(random_targets_json(rng, p).dump());
    TargetTuple before = build_target_tuple(p, spec);

    // splice one new legal call edge into a random block
    uint32_t from = static_cast<uint32_t>(rng.below(p.functions.size()));
    uint32_t to = static_cast<uint32_t>(rng.below(p.functions.size()));
    if (from == to) continue;
    if (p.functions[from].owner == Owner::Library &&
        p.functions[to].owner == Owner::Client)
      continue;
    json& blocks = doc["functions"][from]["blocks"];
    blocks[rng.below(blocks.size())]["calls"].push_back("f" + std::to_string(to));

    Program p2 = Program::load(doc.dump());
    TargetTuple after = build_target_tuple(p2, spec);
    for (uint32_t f : before.a_fns) CHECK(after.a_fns.count(f));
    for (uint32_t f : before.cc_fns) CHECK(after.cc_fns.count(f));
  }
}
