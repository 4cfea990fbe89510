#pragma once

#include <string>
#include <vector>

#include "dgflive/distance.hpp"

namespace dgflive {

inline constexpr double kInvalidRisk = -1.0;

// Per-seed risk: R = d_s / d_r on each side, -1 when the side's path holds no
// target-reachable block. Valid risks lie in [0,1] since d_r >= d_s.
struct RiskTuple {
  double r_client = kInvalidRisk;
  double r_library = kInvalidRisk;
  double d_s_ct = kInvalidRisk;
  double d_s_vt = kInvalidRisk;
  double d_r_ct = kInvalidRisk;
  double d_r_vt = kInvalidRisk;
  double is_score = 0.0;
};

struct NormalizedRisk {
  double r_client = kInvalidRisk;
  double r_library = kInvalidRisk;
};

enum class Side : uint8_t { CT, VT };

// Euclidean norm of the normalized weights of the vulnerable functions
// associated with a key function; each distinct CVE counts once. Throws
// UnknownKeyFunction when the name is not declared as a key function.
double importance_score(const std::string& key_fn, const TargetSpec& spec,
                        const Program& program,
                        const std::map<uint32_t, double>& w_v);

// Sum of importance scores over distinct key functions whose first basic
// block appears in the trace's library path.
double aggregate_is(const Trace& trace, const TargetSpec& spec,
                    const Program& program, const std::map<uint32_t, double>& w_v);

// Average block distance of the path's target-reachable blocks; the VT side
// divides by (count + is_score). -1 when no block on the path has a defined
// distance. Blocks with undefined d_b are excluded from both sum and count.
double target_distance(const std::vector<uint32_t>& path, const DistanceMap& dist,
                       double is_score, Side side);

// Estimated reachable path length: (k - 1) / 2 + d_s for k >= 1.
double path_length(size_t k, double d_s);

RiskTuple seed_risk(const Trace& trace, const DistanceMap& dist,
                    const TargetSpec& spec, const Program& program,
                    const std::map<uint32_t, double>& w_v);

// Queue-relative min-max rescaling per side; -1 entries pass through; a
// degenerate valid set (max == min) maps to 0.5.
std::vector<NormalizedRisk> normalize_risks(const std::vector<RiskTuple>& corpus);

// Precomputed per-function importance scores for the campaign hot path.
class RiskModel {
 public:
  RiskModel(const Program& program, const TargetSpec& spec, const TargetTuple& tuple,
            const DistanceMap& dist);

  double aggregate_is(const Trace& trace) const;
  RiskTuple seed_risk(const Trace& trace) const;

 private:
  const Program& program_;
  const DistanceMap& dist_;
  std::vector<double> is_by_fn_;
};

// AFLGo-style scalar: plain average of the merged-map distances over all
// distinct executed blocks; nullopt when none is defined.
std::optional<double> baseline_seed_metric(const Trace& trace,
                                           const DistanceMap& merged);

}  // namespace dgflive
