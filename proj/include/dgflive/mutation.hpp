#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dgflive/rng.hpp"

namespace dgflive {

inline constexpr size_t kMaxInputLen = 4096;

enum class Grain : uint8_t { Fine, Coarse };

struct CorpusView {
  // Donor inputs for splicing; may alias the live queue.
  std::span<const std::vector<uint8_t>> inputs;
};

// Fine operators touch at most 4 bytes and never change the length; coarse
// operators may resize within [0, kMaxInputLen].
struct MutationOperator {
  const char* name;
  Grain grain;
  void (*apply)(std::vector<uint8_t>& data, Rng& rng, const CorpusView& corpus);
};

struct OperatorSets {
  std::vector<MutationOperator> fms;  // fine only
  std::vector<MutationOperator> hms;  // fine + coarse
};

const OperatorSets& default_operator_sets();

struct StackSelection {
  std::vector<const MutationOperator*> ops;
  uint32_t fms_draws = 0;   // slots that took the FMS branch
  uint32_t total_draws = 0;
};

// Havoc-style stack: size 2^k with k uniform in 1..6; each slot independently
// draws from FMS with probability fine_ratio, else from HMS.
StackSelection select_operator_stack(Rng& rng, double fine_ratio,
                                     const OperatorSets& sets);

std::vector<uint8_t> mutate(std::vector<uint8_t> input,
                            std::span<const MutationOperator* const> stack,
                            Rng& rng, const CorpusView& corpus);

}  // namespace dgflive
