#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "dgflive/program.hpp"

namespace dgflive {

// Per-trace (edge, hit bucket) pairs. Edges are consecutive executed blocks
// (including call and return transitions) plus a virtual entry edge, matching
// the AFL prev-location scheme.
class EdgeScratch {
 public:
  explicit EdgeScratch(uint32_t nblocks);

  // Fills `pairs` with the trace's distinct (edge id, bucket) pairs and
  // returns an order-independent 64-bit digest of the set.
  uint64_t collect(const Trace& trace,
                   std::vector<std::pair<uint32_t, uint32_t>>& pairs);

 private:
  uint32_t nblocks_;
  std::vector<uint32_t> count_;
  std::vector<uint64_t> epoch_;
  std::vector<uint32_t> touched_;
  uint64_t cur_epoch_ = 0;
};

// Monotone set of observed (edge, bucket) pairs.
class CoverageMap {
 public:
  explicit CoverageMap(uint32_t nblocks);

  // True iff the trace contributes at least one unseen pair; the map absorbs
  // the trace's pairs atomically with the decision.
  bool is_new_coverage(const Trace& trace);

  uint64_t last_digest() const { return last_digest_; }
  const std::vector<std::pair<uint32_t, uint32_t>>& last_pairs() const {
    return pairs_;
  }

 private:
  EdgeScratch scratch_;
  std::vector<uint8_t> seen_;  // bucket bitmask per edge
  std::vector<std::pair<uint32_t, uint32_t>> pairs_;
  uint64_t last_digest_ = 0;
};

// Distinct target-reachable paths, keyed by trace digest.
class PathAccounting {
 public:
  // Returns true when the digest of a VT-touching trace is new.
  bool record(uint64_t digest) { return digests_.insert(digest).second; }
  uint64_t count() const { return digests_.size(); }

 private:
  std::set<uint64_t> digests_;
};

}  // namespace dgflive
