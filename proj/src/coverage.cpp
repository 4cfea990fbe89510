#include "dgflive/coverage.hpp"

#include "dgflive/rng.hpp"

namespace dgflive {

EdgeScratch::EdgeScratch(uint32_t nblocks) : nblocks_(nblocks) {
  size_t edges = static_cast<size_t>(nblocks + 1) * nblocks;
  count_.assign(edges, 0);
  epoch_.assign(edges, 0);
}

uint64_t EdgeScratch::collect(const Trace& trace,
                              std::vector<std::pair<uint32_t, uint32_t>>& pairs) {
  ++cur_epoch_;
  touched_.clear();
  uint32_t prev = nblocks_;  // virtual entry location
  for (uint32_t cur : trace.steps) {
    uint32_t edge = prev * nblocks_ + cur;
    if (epoch_[edge] != cur_epoch_) {
      epoch_[edge] = cur_epoch_;
      count_[edge] = 1;
      touched_.push_back(edge);
    } else {
      ++count_[edge];
    }
    prev = cur;
  }
  pairs.clear();
  uint64_t digest = 0;
  for (uint32_t edge : touched_) {
    uint32_t bucket = bucket_hits(count_[edge]);
    pairs.emplace_back(edge, bucket);
    digest ^= mix64((static_cast<uint64_t>(edge) << 3) | bucket);
  }
  return digest;
}

CoverageMap::CoverageMap(uint32_t nblocks) : scratch_(nblocks) {
  seen_.assign(static_cast<size_t>(nblocks + 1) * nblocks, 0);
}

bool CoverageMap::is_new_coverage(const Trace& trace) {
  last_digest_ = scratch_.collect(trace, pairs_);
  bool fresh = false;
  for (const auto& [edge, bucket] : pairs_) {
    uint8_t bit = static_cast<uint8_t>(1u << bucket);
    if (!(seen_[edge] & bit)) {
      seen_[edge] |= bit;
      fresh = true;
    }
  }
  return fresh;
}

}  // namespace dgflive
