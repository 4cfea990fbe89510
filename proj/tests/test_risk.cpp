#include <doctest.h>

#include <cmath>

#include "dgflive/risk.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace dgflive;
using namespace dgflive::testing;

namespace {

// Program with two vulnerable library functions and a library key function,
// for the importance-score examples.
Program key_fn_program() {
  return Program::load(R"({
    "name":"keys","entry":"main",
    "functions":[
      {"name":"main","owner":"client","blocks":[
        {"id":"b0","calls":["k1"],"branch":{"uncond":"return"}}]},
      {"name":"k1","owner":"library","blocks":[
        {"id":"b0","calls":["v1","v2"],"branch":{"uncond":"return"}}]},
      {"name":"k2","owner":"library","blocks":[
        {"id":"b0","calls":["v1"],"branch":{"uncond":"return"}}]},
      {"name":"v1","owner":"library","blocks":[
        {"id":"b0","calls":[],"branch":{"uncond":"return"}}]},
      {"name":"v2","owner":"library","blocks":[
        {"id":"b0","calls":[],"branch":{"uncond":"return"}}]}]
  })");
}

}  // namespace

TEST_CASE("importance score") {
  Program p = key_fn_program();
  TargetSpec spec = TargetSpec::load(R"({
    "vulnerable":[{"function":"v1","cve":"C1","weight":3.0},
                  {"function":"v2","cve":"C2","weight":4.0}],
    "key_functions":[{"function":"k1","cves":["C1","C2"]},
                     {"function":"k2","cves":["C1"]}]
  })");
  uint32_t v1 = *p.find_function("v1");
  uint32_t v2 = *p.find_function("v2");

  SUBCASE("euclidean norm of associated weights") {
    std::map<uint32_t, double> w{{v1, 0.6}, {v2, 0.8}};
    CHECK(importance_score("k1", spec, p, w) == doctest::Approx(1.0));
    CHECK(importance_score("k2", spec, p, w) == doctest::Approx(0.6));
  }
  SUBCASE("duplicate cve in the document counts once") {
    TargetSpec dup = TargetSpec::load(R"({
      "vulnerable":[{"function":"v1","cve":"C1","weight":3.0}],
      "key_functions":[{"function":"k1","cves":["C1","C1"]}]
    })");
    std::map<uint32_t, double> w{{v1, 0.5}};
    CHECK(importance_score("k1", dup, p, w) == doctest::Approx(0.5));
  }
  SUBCASE("unknown key function") {
    std::map<uint32_t, double> w{{v1, 1.0}};
    CHECK_THROWS_AS(importance_score("v1", spec, p, w), UnknownKeyFunction);
  }
}

TEST_CASE("aggregate importance over a trace") {
  Program p = key_fn_program();
  TargetSpec spec = TargetSpec::load(R"({
    "vulnerable":[{"function":"v1","cve":"C1","weight":3.0},
                  {"function":"v2","cve":"C2","weight":4.0}],
    "key_functions":[{"function":"k1","cves":["C1","C2"]},
                     {"function":"k2","cves":["C1"]}]
  })");
  uint32_t v1 = *p.find_function("v1");
  uint32_t v2 = *p.find_function("v2");
  std::map<uint32_t, double> w{{v1, 0.6}, {v2, 0.8}};

  Trace t;
  SUBCASE("sum over distinct key functions present") {
    t.library_path = {p.fbb(*p.find_function("k1")), p.fbb(*p.find_function("k2"))};
    CHECK(aggregate_is(t, spec, p, w) == doctest::Approx(1.6));
  }
  SUBCASE("no key function on the path") {
    t.library_path = {p.fbb(v1)};
    CHECK(aggregate_is(t, spec, p, w) == 0.0);
  }
  SUBCASE("hit counts do not inflate the sum") {
    // a looping trace still lists each distinct block once
    t.library_path = {p.fbb(*p.find_function("k1"))};
    t.hit_counts = {{p.fbb(*p.find_function("k1")), 40}};
    CHECK(aggregate_is(t, spec, p, w) == doctest::Approx(1.0));
  }
}

TEST_CASE("target distance and path length") {
  Program p = chain_program(10);
  TargetSpec spec = chain_targets();
  TargetTuple tuple = build_target_tuple(p, spec);
  DistanceMap dist = compute_distance_map(p, tuple);
  uint32_t api = *p.find_function("api");

  SUBCASE("plain average on the client side") {
    // chain blocks c1..c5 carry d_b 9,8,7,6,5
    std::vector<uint32_t> path;
    for (uint32_t b = 0; b < 5; ++b) path.push_back(p.gid(api, b));
    CHECK(target_distance(path, dist, 0.0, Side::CT) == doctest::Approx(7.0));
    CHECK(target_distance(path, dist, 1.0, Side::CT) == doctest::Approx(7.0));
  }
  SUBCASE("importance lowers the library-side distance") {
    std::vector<uint32_t> path;
    for (uint32_t b = 0; b < 4; ++b) path.push_back(p.gid(api, b));
    // d_b 9,8,7,6: sum 30... use k=4 IS=1 with sum 20 via blocks c3..c6
    std::vector<uint32_t> mid;
    for (uint32_t b = 2; b < 6; ++b) mid.push_back(p.gid(api, b));  // 7,6,5,4
    double sum = 7 + 6 + 5 + 4;
    CHECK(target_distance(mid, dist, 0.0, Side::VT) == doctest::Approx(sum / 4));
    CHECK(target_distance(mid, dist, 1.0, Side::VT) == doctest::Approx(sum / 5));
  }
  SUBCASE("all-invalid path is -1") {
    std::vector<uint32_t> path{p.fbb(*p.find_function("vuln")) + 0};
    // vuln.b0 is a target, distance 0 -> valid; use a decode-free invalid:
    // main.b0 has a defined client-side distance, so build a fake gid list
    // from a block with no anchors: none exists here, so check empty path
    CHECK(target_distance({}, dist, 0.0, Side::VT) == kInvalidRisk);
  }
  SUBCASE("path length") {
    CHECK(path_length(5, 7.0) == doctest::Approx(9.0));
    CHECK(path_length(1, 0.0) == doctest::Approx(0.0));
    CHECK(path_length(10, 4.5) == doctest::Approx(9.0));
  }
}

TEST_CASE("chain risk, executed and synthetic") {
  Program p = chain_program(10);
  TargetSpec spec = chain_targets();
  TargetTuple tuple = build_target_tuple(p, spec);
  DistanceMap dist = compute_distance_map(p, tuple);
  uint32_t api = *p.find_function("api");

  SUBCASE("executed: input stops after five chain blocks") {
    // thresholds are 12*i, so byte 50 passes c1..c4 and fails at c5
    Trace t = execute(p, std::vector<uint8_t>{50});
    REQUIRE(t.library_path.size() == 5);
    RiskTuple r = seed_risk(t, dist, spec, p, tuple.w_v);
    CHECK(r.d_s_vt == doctest::Approx(7.0));
    CHECK(r.d_r_vt == doctest::Approx(9.0));
    CHECK(r.r_library == doctest::Approx(7.0 / 9.0).epsilon(1e-12));
  }
  SUBCASE("synthetic: closed form over every prefix") {
    for (uint32_t n : {2u, 10u, 25u, 50u}) {
      Program pc = chain_program(n);
      TargetTuple tc = build_target_tuple(pc, spec);
      DistanceMap dc = compute_distance_map(pc, tc);
      uint32_t fapi = *pc.find_function("api");
      for (uint32_t k = 1; k <= n; ++k) {
        Trace t;
        for (uint32_t b = 0; b < k; ++b) t.library_path.push_back(pc.gid(fapi, b));
        RiskTuple r = seed_risk(t, dc, spec, pc, tc.w_v);
        double expect = (n - (k + 1.0) / 2.0) / (n - 1.0);
        CHECK(r.r_library == doctest::Approx(expect).epsilon(1e-9));
        // term-by-term oracle agrees
        auto want = oracle::side_risk(t.library_path, dc.d_b, 0.0);
        CHECK(r.r_library == doctest::Approx(want.r).epsilon(1e-12));
      }
    }
  }
  SUBCASE("seed never entering the library") {
    // every chain input reaches c1, so synthesize a client-only trace
    Trace ct;
    ct.client_path = {p.gid(*p.find_function("main"), 0)};
    RiskTuple r = seed_risk(ct, dist, spec, p, tuple.w_v);
    CHECK(r.r_library == kInvalidRisk);
    CHECK(r.d_s_vt == kInvalidRisk);
    CHECK(r.d_r_vt == kInvalidRisk);
  }
}

TEST_CASE("risk normalization") {
  auto mk = [](double r) {
    RiskTuple t;
    t.r_client = r;
    t.r_library = r;
    return t;
  };
  SUBCASE("min-max rescale") {
    auto out = normalize_risks({mk(0.2), mk(0.5), mk(0.8)});
    CHECK(out[0].r_library == doctest::Approx(0.0));
    CHECK(out[1].r_library == doctest::Approx(0.5));
    CHECK(out[2].r_library == doctest::Approx(1.0));
  }
  SUBCASE("degenerate set maps to one half") {
    auto out = normalize_risks({mk(0.7)});
    CHECK(out[0].r_library == doctest::Approx(0.5));
    auto out2 = normalize_risks({mk(0.3), mk(0.3)});
    CHECK(out2[0].r_library == doctest::Approx(0.5));
    CHECK(out2[1].r_library == doctest::Approx(0.5));
  }
  SUBCASE("invalid entries pass through") {
    auto out = normalize_risks({mk(-1), mk(0.4), mk(0.6)});
    CHECK(out[0].r_library == kInvalidRisk);
    CHECK(out[1].r_library == doctest::Approx(0.0));
    CHECK(out[2].r_library == doctest::Approx(1.0));
  }
  SUBCASE("idempotent on sets already spanning the unit interval") {
    std::vector<RiskTuple> corpus{mk(-1), mk(0.0), mk(0.25), mk(1.0)};
    auto once = normalize_risks(corpus);
    std::vector<RiskTuple> again;
    for (const auto& n : once) {
      RiskTuple t;
      t.r_client = n.r_client;
      t.r_library = n.r_library;
      again.push_back(t);
    }
    auto twice = normalize_risks(again);
    for (size_t i = 0; i < once.size(); ++i) {
      CHECK(twice[i].r_client == doctest::Approx(once[i].r_client));
      CHECK(twice[i].r_library == doctest::Approx(once[i].r_library));
    }
  }
}

TEST_CASE("risk boundedness and indicator consistency on random programs") {
  Rng rng(0x5EEDB0B);
  for (int iter = 0; iter < 50; ++iter) {
    Program p = Program::load(random_program_json(rng).dump());
    TargetSpec spec = TargetSpec::load(random_targets_json(rng, p).dump());
    TargetTuple tuple = build_target_tuple(p, spec);
    DistanceMap dist = compute_distance_map(p, tuple);
    Interpreter interp(p);
    RiskModel model(p, spec, tuple, dist);
    Trace t;
    for (int j = 0; j < 40; ++j) {
      interp.run(random_input(rng), 256, t);
      RiskTuple r = model.seed_risk(t);
      size_t k_ct = 0, k_vt = 0;
      for (uint32_t g : t.client_path)
        if (dist.d_b[g]) ++k_ct;
      for (uint32_t g : t.library_path)
        if (dist.d_b[g]) ++k_vt;
      CHECK((r.r_client == kInvalidRisk) == (k_ct == 0));
      CHECK((r.r_library == kInvalidRisk) == (k_vt == 0));
      if (r.r_client != kInvalidRisk) {
        CHECK(r.r_client >= 0.0);
        CHECK(r.r_client <= 1.0);
      }
      if (r.r_library != kInvalidRisk) {
        CHECK(r.r_library >= 0.0);
        CHECK(r.r_library <= 1.0);
      }
      // RiskModel and the free function agree
      RiskTuple r2 = seed_risk(t, dist, spec, p, tuple.w_v);
      CHECK(r.r_client == doctest::Approx(r2.r_client));
      CHECK(r.r_library == doctest::Approx(r2.r_library));
      CHECK(r.is_score == doctest::Approx(r2.is_score));
    }
  }
}

TEST_CASE("adding a key function never increases the library target distance") {
  Program p = key_fn_program();
  TargetSpec with_key = TargetSpec::load(R"({
    "vulnerable":[{"function":"v1","cve":"C1","weight":3.0}],
    "key_functions":[{"function":"k1","cves":["C1"]}]
  })");
  TargetSpec without = TargetSpec::load(R"({
    "vulnerable":[{"function":"v1","cve":"C1","weight":3.0}]
  })");
  TargetTuple tuple = build_target_tuple(p, with_key);
  DistanceMap dist = compute_distance_map(p, tuple);

  Trace t = execute(p, std::vector<uint8_t>{});
  RiskTuple r_with = seed_risk(t, dist, with_key, p, tuple.w_v);
  RiskTuple r_without = seed_risk(t, dist, without, p, tuple.w_v);
  REQUIRE(r_with.d_s_vt != kInvalidRisk);
  CHECK(r_with.is_score > 0.0);
  CHECK(r_with.d_s_vt <= r_without.d_s_vt);
}

TEST_CASE("shorter-path preference is mitigated at the metric level") {
  TargetSpec spec = chain_targets();
  auto risk_at_half = [&](uint32_t n) {
    Program p = chain_program(n);
    TargetTuple tuple = build_target_tuple(p, spec);
    DistanceMap dist = compute_distance_map(p, tuple);
    DistanceMap merged = compute_merged_distance_map(p, tuple);
    uint32_t api = *p.find_function("api");
    Trace t;
    t.client_path = {p.gid(*p.find_function("main"), 0)};
    for (uint32_t b = 0; b < n / 2; ++b) t.library_path.push_back(p.gid(api, b));
    RiskTuple r = seed_risk(t, dist, spec, p, tuple.w_v);
    auto avg = baseline_seed_metric(t, merged);
    REQUIRE(avg.has_value());
    return std::pair<double, double>{r.r_library, *avg};
  };
  auto [r10, avg10] = risk_at_half(10);
  auto [r20, avg20] = risk_at_half(20);
  CHECK(std::abs(r10 - r20) < 0.05);
  CHECK(avg20 / avg10 >= 1.9);
}

TEST_CASE("figure1 seed ordering: average distance vs seed risk") {
  Program p = load_benchmark("figure1.json");
  TargetSpec spec = load_benchmark_targets("figure1.targets.json");
  TargetTuple tuple = build_target_tuple(p, spec);
  DistanceMap apm = compute_distance_map(p, tuple);
  DistanceMap merged = compute_merged_distance_map(p, tuple);

  Trace a = execute(p, std::vector<uint8_t>{0, 0});
  Trace b = execute(p, std::vector<uint8_t>{2, 0});
  Trace c = execute(p, std::vector<uint8_t>{1, 0});

  auto avg_a = baseline_seed_metric(a, merged);
  auto avg_b = baseline_seed_metric(b, merged);
  auto avg_c = baseline_seed_metric(c, merged);
  REQUIRE(avg_a.has_value());
  REQUIRE(avg_b.has_value());
  REQUIRE(avg_c.has_value());
  // the average-distance ranking prefers B, then A, then C
  CHECK(*avg_b < *avg_a);
  CHECK(*avg_a < *avg_c);

  RiskTuple ra = seed_risk(a, apm, spec, p, tuple.w_v);
  RiskTuple rb = seed_risk(b, apm, spec, p, tuple.w_v);
  RiskTuple rc = seed_risk(c, apm, spec, p, tuple.w_v);
  // seed risk: A never enters the library; C is no worse than B
  CHECK(ra.r_library == kInvalidRisk);
  CHECK(rc.r_library <= rb.r_library);
  CHECK(rc.r_library < 1.0);
}
