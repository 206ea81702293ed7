#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "synkb/common.hpp"

namespace synkb {

// Word-id lookup table implementing draws proportional to count^power.
// Every word owns at least one slot and each word's slot share is within one
// slot of its exact share, so the empirical draw distribution converges to
// the target as draws grow.
class UnigramSampler {
 public:
  // Requires table_size >= counts.size().
  UnigramSampler(std::span<const std::uint64_t> counts, double power,
                 std::size_t table_size);

  std::uint32_t sample(Rng& rng) const {
    return table_[rng.below(table_.size())];
  }

  // Redraws until the result differs from `exclude`. Requires a vocabulary
  // of at least two words.
  std::uint32_t sample_excluding(Rng& rng, std::uint32_t exclude) const;

  std::size_t vocab_size() const { return vocab_size_; }
  std::span<const std::uint32_t> table() const { return table_; }

 private:
  std::size_t vocab_size_ = 0;
  std::vector<std::uint32_t> table_;
};

}  // namespace synkb
