#include "dgflive/risk.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace dgflive {

namespace {

double key_fn_score(const KeyFunctionEntry& entry, const TargetSpec& spec,
                    const Program& program, const std::map<uint32_t, double>& w_v) {
  std::set<std::string> seen;
  double sum_sq = 0;
  for (const std::string& cve : entry.cves) {
    if (!seen.insert(cve).second) continue;  // redundant occurrences do not inflate
    for (const auto& v : spec.vulnerable) {
      if (v.cve != cve) continue;
      auto ix = program.find_function(v.function);
      if (!ix) continue;
      auto it = w_v.find(*ix);
      if (it != w_v.end()) sum_sq += it->second * it->second;
      break;
    }
  }
  return std::sqrt(sum_sq);
}

}  // namespace

double importance_score(const std::string& key_fn, const TargetSpec& spec,
                        const Program& program,
                        const std::map<uint32_t, double>& w_v) {
  for (const auto& k : spec.key_functions)
    if (k.function == key_fn) return key_fn_score(k, spec, program, w_v);
  throw UnknownKeyFunction("function " + key_fn + " is not declared as a key function");
}

double aggregate_is(const Trace& trace, const TargetSpec& spec,
                    const Program& program, const std::map<uint32_t, double>& w_v) {
  double total = 0;
  for (const auto& k : spec.key_functions) {
    auto ix = program.find_function(k.function);
    if (!ix) continue;
    uint32_t fbb = program.fbb(*ix);
    if (std::find(trace.library_path.begin(), trace.library_path.end(), fbb) !=
        trace.library_path.end())
      total += key_fn_score(k, spec, program, w_v);
  }
  return total;
}

double target_distance(const std::vector<uint32_t>& path, const DistanceMap& dist,
                       double is_score, Side side) {
  double sum = 0;
  size_t k = 0;
  for (uint32_t g : path)
    if (dist.d_b[g]) {
      sum += *dist.d_b[g];
      ++k;
    }
  if (k == 0) return kInvalidRisk;
  double denom = static_cast<double>(k) + (side == Side::VT ? is_score : 0.0);
  return sum / denom;
}

double path_length(size_t k, double d_s) {
  return (static_cast<double>(k) - 1.0) / 2.0 + d_s;
}

namespace {

size_t reachable_count(const std::vector<uint32_t>& path, const DistanceMap& dist) {
  size_t k = 0;
  for (uint32_t g : path)
    if (dist.d_b[g]) ++k;
  return k;
}

RiskTuple risk_from_paths(const std::vector<uint32_t>& client_path,
                          const std::vector<uint32_t>& library_path,
                          const DistanceMap& dist, double is_score) {
  RiskTuple r;
  r.is_score = is_score;

  size_t k_ct = reachable_count(client_path, dist);
  r.d_s_ct = target_distance(client_path, dist, 0.0, Side::CT);
  if (r.d_s_ct != kInvalidRisk) {
    r.d_r_ct = path_length(k_ct, r.d_s_ct);
    r.r_client = r.d_r_ct == 0.0 ? 0.0 : r.d_s_ct / r.d_r_ct;
  }

  size_t k_vt = reachable_count(library_path, dist);
  r.d_s_vt = target_distance(library_path, dist, is_score, Side::VT);
  if (r.d_s_vt != kInvalidRisk) {
    r.d_r_vt = path_length(k_vt, r.d_s_vt);
    r.r_library = r.d_r_vt == 0.0 ? 0.0 : r.d_s_vt / r.d_r_vt;
  }
  return r;
}

}  // namespace

RiskTuple seed_risk(const Trace& trace, const DistanceMap& dist,
                    const TargetSpec& spec, const Program& program,
                    const std::map<uint32_t, double>& w_v) {
  double is_score = aggregate_is(trace, spec, program, w_v);
  return risk_from_paths(trace.client_path, trace.library_path, dist, is_score);
}

std::vector<NormalizedRisk> normalize_risks(const std::vector<RiskTuple>& corpus) {
  auto rescale = [&](auto getter) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const RiskTuple& r : corpus) {
      double v = getter(r);
      if (v == kInvalidRisk) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    std::vector<double> out(corpus.size(), kInvalidRisk);
    for (size_t i = 0; i < corpus.size(); ++i) {
      double v = getter(corpus[i]);
      if (v == kInvalidRisk) continue;
      out[i] = hi == lo ? 0.5 : (v - lo) / (hi - lo);
    }
    return out;
  };

  auto client = rescale([](const RiskTuple& r) { return r.r_client; });
  auto library = rescale([](const RiskTuple& r) { return r.r_library; });
  std::vector<NormalizedRisk> out(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    out[i].r_client = client[i];
    out[i].r_library = library[i];
  }
  return out;
}

RiskModel::RiskModel(const Program& program, const TargetSpec& spec,
                     const TargetTuple& tuple, const DistanceMap& dist)
    : program_(program), dist_(dist) {
  is_by_fn_.assign(program.functions.size(), 0.0);
  for (const auto& k : spec.key_functions) {
    auto ix = program.find_function(k.function);
    if (ix) is_by_fn_[*ix] = key_fn_score(k, spec, program, tuple.w_v);
  }
}

double RiskModel::aggregate_is(const Trace& trace) const {
  double total = 0;
  for (uint32_t g : trace.library_path)
    if (g == program_.fbb(program_.block_fn[g]))
      total += is_by_fn_[program_.block_fn[g]];
  return total;
}

RiskTuple RiskModel::seed_risk(const Trace& trace) const {
  return risk_from_paths(trace.client_path, trace.library_path, dist_,
                         aggregate_is(trace));
}

std::optional<double> baseline_seed_metric(const Trace& trace,
                                           const DistanceMap& merged) {
  double sum = 0;
  size_t k = 0;
  for (uint32_t g : trace.client_path)
    if (merged.d_b[g]) {
      sum += *merged.d_b[g];
      ++k;
    }
  for (uint32_t g : trace.library_path)
    if (merged.d_b[g]) {
      sum += *merged.d_b[g];
      ++k;
    }
  if (k == 0) return std::nullopt;
  return sum / static_cast<double>(k);
}

}  // namespace dgflive
