#include "synkb/negative_sampler.hpp"

#include <cmath>
#include <stdexcept>

namespace synkb {

UnigramSampler::UnigramSampler(std::span<const std::uint64_t> counts, double power,
                               std::size_t table_size) {
  vocab_size_ = counts.size();
  if (vocab_size_ == 0) {
    throw std::invalid_argument("unigram sampler requires a nonempty vocabulary");
  }
  if (table_size < vocab_size_) {
    throw std::invalid_argument("unigram table smaller than vocabulary");
  }

  std::vector<double> mass(vocab_size_);
  double total = 0.0;
  for (std::size_t w = 0; w < vocab_size_; ++w) {
    mass[w] = std::pow(static_cast<double>(counts[w]), power);
    total += mass[w];
  }

  // One guaranteed slot per word; the remainder is split by cumulative
  // rounding of the exact shares.
  table_.resize(table_size);
  const std::size_t extra = table_size - vocab_size_;
  std::size_t filled = 0;
  std::size_t extra_used = 0;
  double cumulative = 0.0;
  for (std::size_t w = 0; w < vocab_size_; ++w) {
    cumulative += mass[w];
    std::size_t extra_end = static_cast<std::size_t>(
        std::llround(cumulative / total * static_cast<double>(extra)));
    if (w + 1 == vocab_size_) extra_end = extra;
    std::size_t slots = 1 + (extra_end - extra_used);
    extra_used = extra_end;
    for (std::size_t s = 0; s < slots; ++s) {
      table_[filled++] = static_cast<std::uint32_t>(w);
    }
  }
  table_.resize(filled);
}

std::uint32_t UnigramSampler::sample_excluding(Rng& rng, std::uint32_t exclude) const {
  if (vocab_size_ < 2) {
    throw std::invalid_argument("cannot sample a negative from a one-word vocabulary");
  }
  while (true) {
    std::uint32_t id = sample(rng);
    if (id != exclude) return id;
  }
}

}  // namespace synkb
