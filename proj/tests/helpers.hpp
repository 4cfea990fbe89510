#pragma once

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dgflive/distance.hpp"
#include "dgflive/program.hpp"
#include "dgflive/rng.hpp"
#include "dgflive/targets.hpp"

namespace dgflive::testing {

using nlohmann::json;

inline std::string benchmarks_dir() {
  const char* env = std::getenv("DGFLIVE_BENCHMARKS");
  return env ? env : "benchmarks";
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Program load_benchmark(const std::string& name) {
  return Program::load(read_file(benchmarks_dir() + "/" + name));
}

inline TargetSpec load_benchmark_targets(const std::string& name) {
  return TargetSpec::load(read_file(benchmarks_dir() + "/" + name));
}

// ---------------------------------------------------------------- builders

inline json jblock(const std::string& id, std::vector<std::string> calls,
                   json branch, json trigger = nullptr) {
  json b{{"id", id}, {"calls", calls}, {"branch", branch}};
  if (!trigger.is_null()) b["trigger"] = trigger;
  return b;
}

inline json juncond(const std::string& target) { return json{{"uncond", target}}; }

inline json jcond(json guard, const std::string& then_b, const std::string& else_b) {
  return json{{"cond", {{"guard", guard}, {"then", then_b}, {"else", else_b}}}};
}

// Straight library chain of n blocks inside `api`; the last block calls the
// vulnerable function, so d_b(b_i) = n - i (1-indexed). Guards stop the run
// after k blocks for input byte0 in [12(k-1), 12k).
inline Program chain_program(uint32_t n) {
  json blocks = json::array();
  for (uint32_t i = 1; i <= n; ++i) {
    std::string id = "c" + std::to_string(i);
    if (i < n) {
      uint32_t threshold = std::min<uint32_t>(255, 12 * i);
      blocks.push_back(jblock(
          id, {}, jcond(json{{"byte_ge", {0, threshold}}}, "c" + std::to_string(i + 1),
                        "return")));
    } else {
      blocks.push_back(jblock(id, {"vuln"}, juncond("return")));
    }
  }
  json doc{
      {"name", "chain" + std::to_string(n)},
      {"entry", "main"},
      {"functions",
       {{{"name", "main"},
         {"owner", "client"},
         {"blocks", {jblock("b0", {"api"}, juncond("return"))}}},
        {{"name", "api"}, {"owner", "library"}, {"blocks", blocks}},
        {{"name", "vuln"},
         {"owner", "library"},
         {"blocks", {jblock("b0", {}, juncond("return"))}}}}}};
  return Program::load(doc.dump());
}

inline TargetSpec chain_targets() {
  return TargetSpec::load(
      R"({"vulnerable":[{"function":"vuln","cve":"CVE-CHAIN","weight":1.0}]})");
}

// ------------------------------------------------- random program generator

inline json random_guard(Rng& rng, bool composite_ok = true) {
  if (composite_ok && rng.below(10) < 3) {
    switch (rng.below(3)) {
      case 0: return json{{"and", {random_guard(rng, false), random_guard(rng, false)}}};
      case 1: return json{{"or", {random_guard(rng, false), random_guard(rng, false)}}};
      default: return json{{"not", {random_guard(rng, false)}}};
    }
  }
  uint32_t off = static_cast<uint32_t>(rng.below(4));
  uint32_t val = static_cast<uint32_t>(rng.below(256));
  switch (rng.below(5)) {
    case 0: return json{{"byte_eq", {off, val}}};
    case 1: return json{{"byte_ge", {off, val}}};
    case 2: return json{{"byte_le", {off, val}}};
    case 3: return json{{"u16_eq", {off, rng.below(65536)}}};
    default: return json{{"len_ge", {rng.below(6)}}};
  }
}

// Valid-by-construction random program: f0 is the client entry, library
// functions call only library functions, every reference resolves.
inline json random_program_json(Rng& rng, uint32_t max_fns = 6,
                                uint32_t max_blocks = 8) {
  uint32_t nf = 2 + static_cast<uint32_t>(rng.below(max_fns - 1));
  std::vector<bool> lib(nf, false);
  for (uint32_t i = 1; i < nf; ++i) lib[i] = rng.below(10) < 6;
  lib[nf - 1] = true;  // at least one library function

  json fns = json::array();
  for (uint32_t f = 0; f < nf; ++f) {
    uint32_t nb = 1 + static_cast<uint32_t>(rng.below(max_blocks));
    json blocks = json::array();
    for (uint32_t b = 0; b < nb; ++b) {
      std::vector<std::string> calls;
      while (rng.below(10) < 4 && calls.size() < 2) {
        uint32_t callee = static_cast<uint32_t>(rng.below(nf));
        if (lib[f] && !lib[callee]) continue;  // library never calls client
        if (callee == f) continue;
        calls.push_back("f" + std::to_string(callee));
      }
      auto target = [&]() -> std::string {
        if (rng.below(10) < 4) return "return";
        return "b" + std::to_string(rng.below(nb));
      };
      json branch = rng.below(2) ? jcond(random_guard(rng), target(), target())
                                 : juncond(target());
      blocks.push_back(jblock("b" + std::to_string(b), calls, branch));
    }
    fns.push_back(json{{"name", "f" + std::to_string(f)},
                       {"owner", lib[f] ? "library" : "client"},
                       {"blocks", blocks}});
  }
  return json{{"name", "random"}, {"entry", "f0"}, {"functions", fns}};
}

inline json random_targets_json(Rng& rng, const Program& p) {
  std::vector<std::string> lib_fns;
  for (const auto& f : p.functions)
    if (f.owner == Owner::Library) lib_fns.push_back(f.name);
  json vulnerable = json::array();
  uint32_t nv = 1 + static_cast<uint32_t>(rng.below(std::min<size_t>(3, lib_fns.size())));
  std::vector<std::string> cves;
  for (uint32_t i = 0; i < nv; ++i) {
    std::string fn = lib_fns[i * lib_fns.size() / nv];  // distinct picks
    std::string cve = "CVE-R" + std::to_string(i);
    vulnerable.push_back(json{{"function", fn},
                              {"cve", cve},
                              {"weight", 0.5 + rng.unit() * 9.5}});
    cves.push_back(cve);
  }
  json keys = json::array();
  if (rng.below(2) && !lib_fns.empty()) {
    std::string fn = lib_fns[rng.below(lib_fns.size())];
    json kc = json::array();
    kc.push_back(cves[rng.below(cves.size())]);
    keys.push_back(json{{"function", fn}, {"cves", kc}});
  }
  return json{{"vulnerable", vulnerable}, {"key_functions", keys}};
}

inline std::vector<uint8_t> random_input(Rng& rng, size_t max_len = 8) {
  std::vector<uint8_t> out(rng.below(max_len + 1));
  for (auto& b : out) b = static_cast<uint8_t>(rng.below(256));
  return out;
}

}  // namespace dgflive::testing
