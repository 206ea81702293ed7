#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "synkb/common.hpp"

namespace synkb {

// Splits a line into lowercase word tokens. Word characters are ASCII
// alphanumerics, '_' and any byte >= 0x80 (multi-byte UTF-8 sequences pass
// through untouched); every other character separates tokens.
std::vector<std::string> split_words(std::string_view line);

// Canonical single-token form of a surface term: split_words joined by '_'.
// "Blood in stool" -> "blood_in_stool". Matches what the tokenizer emits for
// a lexicon entry, so surface strings and corpus tokens resolve to the same
// vocabulary slot.
std::string surface_to_token(std::string_view surface);

// Tokenizer with greedy longest-match fusion of multi-word lexicon terms.
class LexiconTokenizer {
 public:
  LexiconTokenizer() = default;

  static LexiconTokenizer from_file(const std::string& path);

  // Entry is normalized through split_words before storage.
  void add_term(std::string_view term);

  std::size_t size() const { return terms_.size(); }

  // Lowercases, splits, then fuses lexicon matches left to right, always
  // preferring the longest match starting at the current word. Fused tokens
  // join their words with '_'.
  std::vector<std::string> tokenize(std::string_view line) const;

 private:
  std::unordered_set<std::string> terms_;
  std::size_t max_words_ = 1;
};

struct Vocabulary {
  static constexpr std::uint32_t npos = std::numeric_limits<std::uint32_t>::max();

  // Parallel arrays indexed by term id. Ids follow descending count, ties
  // broken by first occurrence in the stream.
  std::vector<std::string> terms;
  std::vector<std::uint64_t> counts;
  std::unordered_map<std::string, std::uint32_t> ids;
  std::uint64_t total_tokens = 0;

  std::size_t size() const { return terms.size(); }

  std::uint32_t id_of(std::string_view term) const {
    auto it = ids.find(std::string(term));
    return it == ids.end() ? npos : it->second;
  }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);
};

// Streaming source of tokenized sentences. rewind() restarts from the top;
// shard readers (see file_corpus_factory) only yield their share of lines.
class CorpusReader {
 public:
  virtual ~CorpusReader() = default;
  virtual bool next(std::vector<std::string>& out) = 0;
  virtual void rewind() = 0;
};

using CorpusFactory =
    std::function<std::unique_ptr<CorpusReader>(unsigned shard, unsigned shard_count)>;

// One sentence per line, tokenized through `tok`.
CorpusFactory file_corpus_factory(std::string path, LexiconTokenizer tok);

// In-memory corpus of pre-tokenized sentences.
CorpusFactory memory_corpus_factory(std::vector<std::vector<std::string>> sentences);

// Counts every token in the stream, drops tokens seen fewer than min_count
// times, and assigns ids by descending count (first occurrence breaks ties).
Vocabulary build_vocabulary(CorpusReader& reader, std::uint64_t min_count);
Vocabulary build_vocabulary(const CorpusFactory& factory, std::uint64_t min_count);

// Probability of keeping an occurrence of a term during subsampling:
// min(1, (sqrt(f/r) + 1) * r/f) with f = count/total and r the sample rate.
// Monotonically non-increasing in f.
double keep_probability(std::uint64_t count, std::uint64_t total, double sample_rate);

struct LabelAssignments {
  std::uint32_t label_count = 148;
  // term id -> sorted unique label ids. Terms absent here have no labels.
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> by_term;
  // Lines whose term was not in the vocabulary.
  std::uint64_t skipped_terms = 0;

  const std::vector<std::uint32_t>* labels_of(std::uint32_t term_id) const {
    auto it = by_term.find(term_id);
    return it == by_term.end() ? nullptr : &it->second;
  }

  // Line format: term TAB comma-separated label ids. An optional first line
  // "#label_count=N" overrides default_label_count. Duplicate term lines
  // merge their label sets; out-of-range or non-integer ids are fatal.
  static LabelAssignments load(const std::string& path, const Vocabulary& vocab,
                               std::uint32_t default_label_count = 148);
};

}  // namespace synkb
