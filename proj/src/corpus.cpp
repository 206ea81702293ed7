#include "synkb/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace synkb {

namespace {

bool is_word_char(unsigned char c) {
  if (c >= 0x80) return true;  // UTF-8 continuation/lead bytes
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_';
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  return in;
}

}  // namespace

std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  for (char raw : line) {
    if (is_word_char(static_cast<unsigned char>(raw))) {
      cur.push_back(lower_ascii(raw));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string surface_to_token(std::string_view surface) {
  return join(split_words(surface), '_');
}

LexiconTokenizer LexiconTokenizer::from_file(const std::string& path) {
  LexiconTokenizer tok;
  std::ifstream in = open_or_throw(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!split_words(line).empty()) tok.add_term(line);
  }
  return tok;
}

void LexiconTokenizer::add_term(std::string_view term) {
  std::vector<std::string> words = split_words(term);
  if (words.empty()) return;
  max_words_ = std::max(max_words_, words.size());
  terms_.insert(join(words, ' '));
}

std::vector<std::string> LexiconTokenizer::tokenize(std::string_view line) const {
  std::vector<std::string> words = split_words(line);
  if (terms_.empty() || max_words_ < 2) return words;

  std::vector<std::string> out;
  out.reserve(words.size());
  std::size_t i = 0;
  while (i < words.size()) {
    std::size_t limit = std::min(max_words_, words.size() - i);
    std::size_t matched = 0;
    std::string key;
    for (std::size_t k = limit; k >= 2; --k) {
      key.clear();
      for (std::size_t j = 0; j < k; ++j) {
        if (j > 0) key.push_back(' ');
        key += words[i + j];
      }
      if (terms_.count(key)) {
        matched = k;
        break;
      }
    }
    if (matched >= 2) {
      for (char& c : key) {
        if (c == ' ') c = '_';
      }
      out.push_back(std::move(key));
      i += matched;
    } else {
      out.push_back(std::move(words[i]));
      ++i;
    }
  }
  return out;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    out << terms[i] << '\t' << counts[i] << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  Vocabulary v;
  std::ifstream in = open_or_throw(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 2) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected 'term<TAB>count'");
    }
    std::uint64_t count = 0;
    try {
      count = std::stoull(fields[1]);
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(line_no) + ": bad count '" +
                      fields[1] + "'");
    }
    std::uint32_t id = static_cast<std::uint32_t>(v.terms.size());
    if (!v.ids.emplace(fields[0], id).second) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": duplicate term '" + fields[0] + "'");
    }
    v.terms.push_back(fields[0]);
    v.counts.push_back(count);
    v.total_tokens += count;
  }
  return v;
}

namespace {

class FileCorpusReader : public CorpusReader {
 public:
  FileCorpusReader(std::string path, const LexiconTokenizer* tok, unsigned shard,
                   unsigned shard_count)
      : path_(std::move(path)), tok_(tok), shard_(shard), shard_count_(shard_count) {
    rewind();
  }

  bool next(std::vector<std::string>& out) override {
    std::string line;
    while (std::getline(in_, line)) {
      std::uint64_t n = line_no_++;
      if (shard_count_ > 1 && n % shard_count_ != shard_) continue;
      out = tok_->tokenize(line);
      return true;
    }
    return false;
  }

  void rewind() override {
    in_.close();
    in_.clear();
    in_.open(path_);
    if (!in_) throw DataError("cannot open corpus file: " + path_);
    line_no_ = 0;
  }

 private:
  std::string path_;
  const LexiconTokenizer* tok_;
  unsigned shard_;
  unsigned shard_count_;
  std::ifstream in_;
  std::uint64_t line_no_ = 0;
};

class MemoryCorpusReader : public CorpusReader {
 public:
  MemoryCorpusReader(const std::vector<std::vector<std::string>>* sentences,
                     unsigned shard, unsigned shard_count)
      : sentences_(sentences), shard_(shard), shard_count_(shard_count) {}

  bool next(std::vector<std::string>& out) override {
    while (pos_ < sentences_->size()) {
      std::size_t n = pos_++;
      if (shard_count_ > 1 && n % shard_count_ != shard_) continue;
      out = (*sentences_)[n];
      return true;
    }
    return false;
  }

  void rewind() override { pos_ = 0; }

 private:
  const std::vector<std::vector<std::string>>* sentences_;
  unsigned shard_;
  unsigned shard_count_;
  std::size_t pos_ = 0;
};

}  // namespace

CorpusFactory file_corpus_factory(std::string path, LexiconTokenizer tok) {
  auto shared_tok = std::make_shared<LexiconTokenizer>(std::move(tok));
  return [path = std::move(path), shared_tok](unsigned shard, unsigned shard_count) {
    return std::make_unique<FileCorpusReader>(path, shared_tok.get(), shard,
                                              shard_count);
  };
}

CorpusFactory memory_corpus_factory(std::vector<std::vector<std::string>> sentences) {
  auto shared = std::make_shared<std::vector<std::vector<std::string>>>(
      std::move(sentences));
  return [shared](unsigned shard, unsigned shard_count) {
    return std::make_unique<MemoryCorpusReader>(shared.get(), shard, shard_count);
  };
}

Vocabulary build_vocabulary(CorpusReader& reader, std::uint64_t min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");

  struct Entry {
    std::uint64_t count = 0;
    std::uint64_t first_seen = 0;
  };
  std::unordered_map<std::string, Entry> tally;
  std::vector<std::string> sentence;
  std::uint64_t order = 0;
  while (reader.next(sentence)) {
    for (const std::string& t : sentence) {
      Entry& e = tally[t];
      if (e.count == 0) e.first_seen = order++;
      ++e.count;
    }
  }

  std::vector<std::pair<const std::string*, const Entry*>> kept;
  kept.reserve(tally.size());
  for (const auto& [term, entry] : tally) {
    if (entry.count >= min_count) kept.emplace_back(&term, &entry);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second->count != b.second->count) return a.second->count > b.second->count;
    return a.second->first_seen < b.second->first_seen;
  });

  Vocabulary v;
  v.terms.reserve(kept.size());
  v.counts.reserve(kept.size());
  for (const auto& [term, entry] : kept) {
    std::uint32_t id = static_cast<std::uint32_t>(v.terms.size());
    v.ids.emplace(*term, id);
    v.terms.push_back(*term);
    v.counts.push_back(entry->count);
    v.total_tokens += entry->count;
  }
  return v;
}

Vocabulary build_vocabulary(const CorpusFactory& factory, std::uint64_t min_count) {
  std::unique_ptr<CorpusReader> reader = factory(0, 1);
  return build_vocabulary(*reader, min_count);
}

double keep_probability(std::uint64_t count, std::uint64_t total, double sample_rate) {
  if (count < 1 || total < count) {
    throw std::invalid_argument("keep_probability: need 1 <= count <= total");
  }
  if (sample_rate <= 0) {
    throw std::invalid_argument("keep_probability: sample_rate must be positive");
  }
  double f = static_cast<double>(count) / static_cast<double>(total);
  double p = (std::sqrt(f / sample_rate) + 1.0) * (sample_rate / f);
  return p < 1.0 ? p : 1.0;
}

LabelAssignments LabelAssignments::load(const std::string& path,
                                        const Vocabulary& vocab,
                                        std::uint32_t default_label_count) {
  LabelAssignments out;
  out.label_count = default_label_count;
  std::ifstream in = open_or_throw(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("#label_count=", 0) == 0) {
      try {
        out.label_count = static_cast<std::uint32_t>(std::stoul(line.substr(13)));
      } catch (const std::exception&) {
        throw DataError(path + ":1: bad #label_count header");
      }
      continue;
    }
    std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 2) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected 'term<TAB>id,id,...'");
    }
    std::vector<std::uint32_t> labels;
    std::stringstream ss(fields[1]);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
      std::size_t used = 0;
      unsigned long value = 0;
      try {
        value = std::stoul(piece, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != piece.size() || piece.empty()) {
        throw DataError(path + ":" + std::to_string(line_no) + ": bad label id '" +
                        piece + "'");
      }
      if (value >= out.label_count) {
        throw DataError(path + ":" + std::to_string(line_no) + ": label id " +
                        piece + " out of range [0," +
                        std::to_string(out.label_count) + ")");
      }
      labels.push_back(static_cast<std::uint32_t>(value));
    }
    std::uint32_t term_id = vocab.id_of(fields[0]);
    if (term_id == Vocabulary::npos) {
      ++out.skipped_terms;
      continue;
    }
    std::vector<std::uint32_t>& dst = out.by_term[term_id];
    dst.insert(dst.end(), labels.begin(), labels.end());
    std::sort(dst.begin(), dst.end());
    dst.erase(std::unique(dst.begin(), dst.end()), dst.end());
  }
  return out;
}

}  // namespace synkb
