#include "dgflive/mutation.hpp"

#include <algorithm>

namespace dgflive {

namespace {

constexpr uint8_t kInterestingBytes[] = {0, 1, 16, 32, 64, 100, 127, 128, 255};

void bit_flip_1(std::vector<uint8_t>& data, Rng& rng, const CorpusView&) {
  if (data.empty()) return;
  uint64_t bit = rng.below(data.size() * 8);
  data[bit >> 3] ^= static_cast<uint8_t>(1u << (bit & 7));
}

void byte_set_random(std::vector<uint8_t>& data, Rng& rng, const CorpusView&) {
  if (data.empty()) return;
  data[rng.below(data.size())] = static_cast<uint8_t>(rng.below(256));
}

void byte_add_delta(std::vector<uint8_t>& data, Rng& rng, const CorpusView&) {
  if (data.empty()) return;
  size_t pos = rng.below(data.size());
  uint8_t delta = static_cast<uint8_t>(1 + rng.below(35));
  if (rng.below(2))
    data[pos] = static_cast<uint8_t>(data[pos] + delta);
  else
    data[pos] = static_cast<uint8_t>(data[pos] - delta);
}

void byte_set_interesting(std::vector<uint8_t>& data, Rng& rng, const CorpusView&) {
  if (data.empty()) return;
  data[rng.below(data.size())] =
      kInterestingBytes[rng.below(std::size(kInterestingBytes))];
}

size_t block_len(Rng& rng) { return 2 + rng.below(63); }  // 2..64

void insert_block(std::vector<uint8_t>& data, Rng& rng, const CorpusView&) {
  size_t len = std::min(block_len(rng), kMaxInputLen - std::min(data.size(), kMaxInputLen));
  if (len == 0) return;
  size_t pos = rng.below(data.size() + 1);
  std::vector<uint8_t> chunk(len);
  for (auto& b : chunk) b = static_cast<uint8_t>(rng.below(256));
  data.insert(data.begin() + static_cast<ptrdiff_t>(pos), chunk.begin(), chunk.end());
}

void delete_block(std::vector<uint8_t>& data, Rng& rng, const CorpusView&) {
  if (data.empty()) return;
  size_t pos = rng.below(data.size());
  size_t len = std::min(block_len(rng), data.size() - pos);
  data.erase(data.begin() + static_cast<ptrdiff_t>(pos),
             data.begin() + static_cast<ptrdiff_t>(pos + len));
}

void overwrite_block(std::vector<uint8_t>& data, Rng& rng, const CorpusView&) {
  if (data.empty()) return;
  size_t pos = rng.below(data.size());
  size_t len = std::min(block_len(rng), data.size() - pos);
  if (rng.below(2)) {
    uint8_t fill = static_cast<uint8_t>(rng.below(256));
    std::fill_n(data.begin() + static_cast<ptrdiff_t>(pos), len, fill);
  } else {
    for (size_t i = 0; i < len; ++i)
      data[pos + i] = static_cast<uint8_t>(rng.below(256));
  }
}

void splice_segment(std::vector<uint8_t>& data, Rng& rng, const CorpusView& corpus) {
  // Singleton (or empty) corpus degrades to a plain overwrite.
  if (corpus.inputs.size() < 2) {
    overwrite_block(data, rng, corpus);
    return;
  }
  const std::vector<uint8_t>& donor = corpus.inputs[rng.below(corpus.inputs.size())];
  if (donor.empty()) return;
  size_t dpos = rng.below(donor.size());
  size_t dlen = std::min(block_len(rng), donor.size() - dpos);
  size_t pos = rng.below(data.size() + 1);
  size_t replace = data.empty() ? 0 : std::min(rng.below(dlen + 1), data.size() - pos);
  std::vector<uint8_t> out;
  out.reserve(data.size() - replace + dlen);
  out.insert(out.end(), data.begin(), data.begin() + static_cast<ptrdiff_t>(pos));
  out.insert(out.end(), donor.begin() + static_cast<ptrdiff_t>(dpos),
             donor.begin() + static_cast<ptrdiff_t>(dpos + dlen));
  out.insert(out.end(), data.begin() + static_cast<ptrdiff_t>(pos + replace), data.end());
  if (out.size() > kMaxInputLen) out.resize(kMaxInputLen);
  data = std::move(out);
}

}  // namespace

const OperatorSets& default_operator_sets() {
  static const OperatorSets sets = [] {
    OperatorSets s;
    s.fms = {
        {"bit_flip_1", Grain::Fine, bit_flip_1},
        {"byte_set_random", Grain::Fine, byte_set_random},
        {"byte_add_delta", Grain::Fine, byte_add_delta},
        {"byte_set_interesting", Grain::Fine, byte_set_interesting},
    };
    s.hms = s.fms;
    s.hms.push_back({"insert_block", Grain::Coarse, insert_block});
    s.hms.push_back({"delete_block", Grain::Coarse, delete_block});
    s.hms.push_back({"overwrite_block", Grain::Coarse, overwrite_block});
    s.hms.push_back({"splice_segment", Grain::Coarse, splice_segment});
    return s;
  }();
  return sets;
}

StackSelection select_operator_stack(Rng& rng, double fine_ratio,
                                     const OperatorSets& sets) {
  StackSelection sel;
  uint32_t k = static_cast<uint32_t>(1 + rng.below(6));
  size_t size = size_t{1} << k;
  sel.ops.reserve(size);
  for (size_t i = 0; i < size; ++i) {
    ++sel.total_draws;
    if (rng.chance(fine_ratio)) {
      ++sel.fms_draws;
      sel.ops.push_back(&sets.fms[rng.below(sets.fms.size())]);
    } else {
      sel.ops.push_back(&sets.hms[rng.below(sets.hms.size())]);
    }
  }
  return sel;
}

std::vector<uint8_t> mutate(std::vector<uint8_t> input,
                            std::span<const MutationOperator* const> stack,
                            Rng& rng, const CorpusView& corpus) {
  for (const MutationOperator* op : stack) op->apply(input, rng, corpus);
  if (input.size() > kMaxInputLen) input.resize(kMaxInputLen);
  return input;
}

}  // namespace dgflive
