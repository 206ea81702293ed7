#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synkb/classifier.hpp"
#include "synkb/common.hpp"
#include "synkb/concept_space.hpp"
#include "synkb/embedding.hpp"

namespace synkb {

// Streams the n*(n-1)/2 unordered index pairs of an n-element list in
// lexicographic order, yielding every shard_count-th pair starting at
// `shard`. O(1) memory regardless of n.
class PairEnumerator {
 public:
  PairEnumerator(std::size_t n, unsigned shard = 0, unsigned shard_count = 1)
      : n_(n), shard_(shard), count_(shard_count) {}

  bool next(std::uint32_t& oi, std::uint32_t& oj) {
    for (;;) {
      ++j_;
      if (j_ >= n_) {
        ++i_;
        j_ = i_ + 1;
        if (j_ >= n_) return false;
      }
      if (index_++ % count_ == shard_) {
        oi = static_cast<std::uint32_t>(i_);
        oj = static_cast<std::uint32_t>(j_);
        return true;
      }
    }
  }

  static std::uint64_t pair_count(std::uint64_t n) { return n * (n - 1) / 2; }

 private:
  std::size_t n_;
  std::size_t i_ = 0;
  std::size_t j_ = 0;
  unsigned shard_;
  unsigned count_;
  std::uint64_t index_ = 0;
};

// Candidate pairs to score: either every unordered pair of a term list, or
// an explicit pair file (one "a TAB b" per line).
struct CandidateSource {
  std::vector<std::string> terms;
  std::string pair_file;

  bool is_term_list() const { return pair_file.empty(); }

  static CandidateSource from_terms(std::vector<std::string> terms);
  static CandidateSource from_term_file(const std::string& path);  // one term per line
  static CandidateSource from_pair_file(std::string path);
};

struct KBEntry {
  std::string a;
  std::string b;
  double score = 0.0;
};

struct SynonymKB {
  std::vector<KBEntry> entries;

  // Descending score, ties by pair text; makes output byte-reproducible.
  void sort_canonical();

  // term_a TAB term_b TAB score with 6 decimals, in canonical order.
  void save(const std::string& path) const;
  static SynonymKB load(const std::string& path);
};

struct ScoreStats {
  std::uint64_t terms_dropped = 0;  // list terms without an embedding
  std::uint64_t pairs_dropped = 0;  // pair-file pairs with a missing side
  std::uint64_t pairs_scored = 0;
  std::uint64_t kept = 0;
  double seconds = 0.0;
  double pairs_per_sec = 0.0;
};

// Scores every candidate pair with model over features built from
// `embeddings` and `rules`, keeping score > threshold. Layout consistency
// (model dim/groups vs embedding dim) is checked before any streaming.
// With threads > 1 the pair stream is sharded; results are identical to the
// single-thread run after canonical sorting.
SynonymKB score_stream(const CandidateSource& source, const EmbeddingTable& embeddings,
                       const LinearModel& model, const MatchRules& rules, double threshold,
                       unsigned threads, ScoreStats* stats = nullptr, bool progress = false);

// Fraction of held-out pairs present in the KB, by unordered token-pair
// identity. Held-out set must be nonempty.
double recall_against(const SynonymKB& kb, const std::vector<std::pair<std::string, std::string>>& heldout);

}  // namespace synkb
