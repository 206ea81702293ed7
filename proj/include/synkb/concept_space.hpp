#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synkb/common.hpp"

namespace synkb {

// A term as written: case kept for the acronym rule, plus the word split the
// other matching rules operate on.
struct TermSurface {
  std::string original;
  std::vector<std::string> words;   // whitespace-split, case preserved
  std::vector<std::string> folded;  // lowercased words, parallel to `words`

  std::size_t length() const { return words.size(); }
  std::string joined_folded() const;

  // Throws DataError if the surface contains no words.
  static TermSurface parse(std::string_view surface);
};

struct MatchFeatures {
  unsigned m1 = 0;   // common words, multiset intersection over folded words
  double m2 = 0.0;   // m1 / (|a| * |b|)
  bool m3 = false;   // antonym-prefix pair
  bool m4 = false;   // equal uppercase-character sequences
  bool m5 = false;   // initials rule
  bool m6 = false;   // word-level subsequence either direction
};

// True if `needle` appears in `hay` in order, not necessarily contiguously.
bool word_subsequence(std::span<const std::string> needle, std::span<const std::string> hay);

class MatchRules {
 public:
  MatchRules();  // default prefix list: anti dis il im in ir non un

  // One prefix per line, '#' starts a comment, blank lines ignored.
  static MatchRules from_file(const std::string& path);

  MatchFeatures compute(const TermSurface& a, const TermSurface& b) const;

  const std::vector<std::string>& antonym_prefixes() const { return prefixes_; }

 private:
  std::vector<std::string> prefixes_;
};

// Which optional blocks a pair feature vector carries. The raw [A, B] block
// is always present.
struct FeatureGroups {
  bool match = false;
  bool sumdiff = false;
  bool product = false;
  bool m2scaled = false;

  static FeatureGroups all() { return {true, true, true, true}; }

  // Comma-separated group names; must include "raw". Unknown names throw
  // UsageError.
  static FeatureGroups parse(std::string_view csv);

  std::string to_string() const;  // canonical order: raw,match,sumdiff,product,m2scaled

  bool operator==(const FeatureGroups&) const = default;
};

// Assembles the concept-space vector for a term pair. Fixed block order:
//   A (dim) | B (dim) | m1..m6 (6) | A+B (dim) | |A-B| (dim) | A*B (dim)
//   | m2*A (dim) | m2*B (dim)
// with disabled groups contributing nothing. The m1 slot is clipped at 16 so
// no feature leaves a small fixed range; m2 always uses the unclipped count.
class PairFeaturizer {
 public:
  static constexpr double kM1Clip = 16.0;

  PairFeaturizer(std::size_t dim, FeatureGroups groups, MatchRules rules = MatchRules());

  std::size_t dim() const { return dim_; }
  const FeatureGroups& groups() const { return groups_; }
  const MatchRules& rules() const { return rules_; }
  std::size_t feature_count() const { return count_; }

  // Fingerprint of (dim, groups); models refuse to score vectors built under
  // a different layout.
  std::uint64_t layout_id() const { return layout_id_; }

  // `out` must have exactly feature_count() elements.
  void build(std::span<const double> A, std::span<const double> B, const TermSurface& a,
             const TermSurface& b, std::span<double> out) const;

  std::vector<double> build(std::span<const double> A, std::span<const double> B,
                            const TermSurface& a, const TermSurface& b) const;

 private:
  std::size_t dim_;
  FeatureGroups groups_;
  MatchRules rules_;
  std::size_t count_;
  std::uint64_t layout_id_;
};

std::uint64_t feature_layout_id(std::size_t dim, const FeatureGroups& groups);

}  // namespace synkb
