#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dgflive/targets.hpp"

namespace dgflive {

// nullopt marks an undefined distance (no target reachable). The -1 sentinel
// the risk layer uses never appears here.
using DistValue = std::optional<double>;

struct DistanceOptions {
  double call_scale = 10.0;     // constant factor applied to callee distances
  bool strict_harmonic = false; // divided harmonic mean instead of reciprocal sum
};

// Static distances. Function entries cover the whole function index space but
// are only defined inside their side's domain (client functions for the
// client side, library for the library side); blocks likewise. A merged map
// erases the owner split: every function/block is in domain and targets VT.
struct DistanceMap {
  DistanceOptions options;
  bool merged = false;
  std::vector<DistValue> d_f_client;
  std::vector<DistValue> d_f_library;
  std::vector<DistValue> d_b;  // by global block id; client blocks target CT,
                               // library blocks target VT (all->VT when merged)
};

// Mean of the raw shortest path and the weight-discounted one:
// p_short * (2 - w) / 2.
double weighted_path_length(double p_short, double w);

// Per-function shortest weighted distances toward a target set. callees must
// already be restricted to the side's subgraph; in_domain masks the nodes the
// side covers. Targets map to 0; nodes reaching no target are nullopt;
// otherwise the reciprocal-sum (or divided harmonic) aggregation over
// weighted path lengths to every reachable target.
std::vector<DistValue> function_distances(
    const std::vector<std::vector<uint32_t>>& callees,
    const std::vector<uint8_t>& in_domain,
    const std::map<uint32_t, double>& target_weights, bool strict_harmonic);

// Per-block distances within each function's CFG. Anchor blocks call a
// function with a defined distance and carry value c * min d_f(callee); every
// other block aggregates (edges-to-anchor + anchor value) over the anchors it
// reaches. Target blocks are 0; blocks reaching no anchor are nullopt.
std::vector<DistValue> block_distances(const Program& program,
                                       const std::vector<DistValue>& fn_dist,
                                       const std::set<uint32_t>& target_blocks,
                                       std::optional<Owner> domain,
                                       const DistanceOptions& options);

DistanceMap compute_distance_map(const Program& program, const TargetTuple& tuple,
                                 const DistanceOptions& options = {});

// Owner distinctions erased, all blocks target VT. Used by the AFLGo-style
// baseline modes.
DistanceMap compute_merged_distance_map(const Program& program,
                                        const TargetTuple& tuple,
                                        const DistanceOptions& options = {});

// Stable (lexicographic) JSON projection: {"c":..., "d_f":..., "d_b":...}
// with nullopt encoded as null.
std::string distance_map_to_json(const Program& program, const DistanceMap& map);
std::string target_tuple_to_json(const Program& program, const TargetTuple& tuple);

// Inverse projections, used by the analysis cache.
DistanceMap distance_map_from_json(const Program& program, const std::string& text,
                                   bool merged);
TargetTuple target_tuple_from_json(const Program& program, const std::string& text);

}  // namespace dgflive
