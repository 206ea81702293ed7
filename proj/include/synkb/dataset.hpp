#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "synkb/common.hpp"
#include "synkb/corpus.hpp"

namespace synkb {

struct RelationRecord {
  std::string concept_a;
  std::string concept_b;
  std::string category;   // e.g. RO / RQ / SY
  std::string attribute;  // may be empty
};

// Whitelist of (category, attribute) relation kinds treated as synonym
// evidence.
class RelationFilter {
 public:
  // The 15 synonym-bearing relation kinds used for positive-pair mining.
  static RelationFilter synonym_defaults();

  void add(std::string_view category, std::string_view attribute);
  bool keep(std::string_view category, std::string_view attribute) const;
  std::size_t size() const { return keys_.size(); }

  // Sorted (category, attribute) pairs, for inspection and tests.
  std::vector<std::pair<std::string, std::string>> entries() const;

 private:
  std::unordered_set<std::string> keys_;
};

struct RelationLoad {
  std::vector<RelationRecord> kept;
  std::uint64_t dropped = 0;
  std::uint64_t total = 0;
};

// Line format: concept_a TAB concept_b TAB category TAB attribute. A 3-field
// line means an empty attribute. Anything else is fatal with a line number.
RelationLoad load_relations(const std::string& path, const RelationFilter& filter);

// Line format: concept id TAB preferred name. First occurrence of an id wins.
std::unordered_map<std::string, std::string> load_name_map(const std::string& path);

// A candidate pair as surface strings, in canonical order: the token form of
// `a` is lexicographically <= the token form of `b`.
struct TermPair {
  std::string a;
  std::string b;
};

// Canonical identity of an unordered pair: tab-joined token forms.
std::string pair_key(std::string_view token_a, std::string_view token_b);
std::string pair_key_of_surfaces(std::string_view surface_a, std::string_view surface_b);

struct ResolveStats {
  std::uint64_t missing_name = 0;  // records with a concept absent from the name map
  std::uint64_t out_of_vocab = 0;  // records whose term has no vocabulary entry
  std::uint64_t self_pairs = 0;
  std::uint64_t duplicates = 0;
};

struct ResolvedPositives {
  std::vector<TermPair> pairs;  // first-seen order, canonical within pair
  std::unordered_set<std::string> keys;
  ResolveStats stats;
};

ResolvedPositives resolve_positives(const std::vector<RelationRecord>& records,
                                    const std::unordered_map<std::string, std::string>& name_map,
                                    const Vocabulary& vocab);

// Uniformly samples `count` distinct unordered pairs of vocabulary terms
// occurring at least `min_occurrences` times, excluding `positive_keys`.
// Surfaces are the token forms with '_' restored to spaces. Throws DataError
// if fewer than `count` distinct pairs exist.
std::vector<TermPair> generate_negatives(const Vocabulary& vocab, std::uint64_t count,
                                         std::uint64_t min_occurrences,
                                         const std::unordered_set<std::string>& positive_keys,
                                         Rng& rng);

enum class Split : std::uint8_t { kTrain = 0, kTest = 1, kHoldout = 2 };

std::string_view split_name(Split s);
Split split_from_name(std::string_view name);

struct PairRecord {
  std::string a;
  std::string b;
  int label = -1;  // +1 synonym, -1 not
  Split split = Split::kTrain;
};

struct SplitRatios {
  double train = 0.6;
  double test = 0.2;
  double holdout = 0.2;
};

struct PairDataset {
  std::vector<PairRecord> records;

  std::size_t count(Split s) const;
  std::size_t count(Split s, int label) const;

  // Line format: a TAB b TAB label TAB split.
  void save(const std::string& path) const;
  static PairDataset load(const std::string& path);
};

// Tags each class independently with a seeded shuffle and contiguous slices,
// so every split keeps the global positive:negative ratio.
PairDataset make_dataset(const std::vector<TermPair>& positives,
                         const std::vector<TermPair>& negatives, const SplitRatios& ratios,
                         std::uint64_t seed);

}  // namespace synkb
