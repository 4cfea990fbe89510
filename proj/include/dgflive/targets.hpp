#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "dgflive/program.hpp"

namespace dgflive {

struct UnknownFunction : ValidationError {
  using ValidationError::ValidationError;
};
struct OwnerMismatch : ValidationError {
  using ValidationError::ValidationError;
};
struct UnknownKeyFunction : ValidationError {
  using ValidationError::ValidationError;
};

struct VulnerableEntry {
  std::string function;
  std::string cve;
  double weight = 1.0;  // raw importance, typically the CVSS score
};

struct KeyFunctionEntry {
  std::string function;
  std::vector<std::string> cves;
};

// Tester-supplied vulnerability description.
//
// Document format (JSON):
//   { "vulnerable": [ {"function": str, "cve": str, "weight": number?} ],
//     "key_functions": [ {"function": str, "cves": [str]} ] }
struct TargetSpec {
  std::vector<VulnerableEntry> vulnerable;
  std::vector<KeyFunctionEntry> key_functions;

  static TargetSpec load(const std::string& text);

  std::vector<std::string> cve_list() const;  // distinct, in declaration order
};

// The target tuple <CT, VT> plus the intermediate sets and per-function
// weights. Function entries are indices into Program::functions; block
// entries are global block ids (always first basic blocks).
struct TargetTuple {
  std::set<uint32_t> v_fns;   // vulnerable library functions
  std::set<uint32_t> a_fns;   // library functions that can reach some v (V included)
  std::set<uint32_t> cc_fns;  // client functions calling into A
  std::set<uint32_t> vt_blocks;
  std::set<uint32_t> ct_blocks;
  std::map<uint32_t, double> w_v;   // normalized to [0,1], max of each map is 1
  std::map<uint32_t, double> w_cc;
  bool empty_cc = false;  // warning only; the power-schedule repair rule compensates
};

// Builds <CT, VT> from the call graphs and the target spec. Throws
// UnknownFunction / OwnerMismatch on spec entries that do not fit the
// program; an empty CC is flagged, not rejected.
TargetTuple build_target_tuple(const Program& program, const TargetSpec& spec);

// Weight distribution: each vulnerable function's raw weight is split evenly
// over the CC functions that reach it through the combined call graph; a CC
// function's pre-normalized weight is the mean of the shares it received.
// Both maps are then independently divided by their maximum.
std::pair<std::map<uint32_t, double>, std::map<uint32_t, double>> distribute_weights(
    const Program& program, const TargetSpec& spec, const std::set<uint32_t>& a_fns,
    const std::set<uint32_t>& cc_fns);

}  // namespace dgflive
