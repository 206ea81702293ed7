#include "synkb/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace synkb {

namespace {

std::string filter_key(std::string_view category, std::string_view attribute) {
  std::string k(category);
  k.push_back('\t');
  k.append(attribute);
  return k;
}

std::string spaced(std::string_view token) {
  std::string s(token);
  for (char& c : s) {
    if (c == '_') c = ' ';
  }
  return s;
}

}  // namespace

RelationFilter RelationFilter::synonym_defaults() {
  RelationFilter f;
  f.add("RO", "has_active_ingredient");
  f.add("RO", "has_ingredient");
  f.add("RO", "has_product_component");
  f.add("RO", "has_tradename");
  f.add("RO", "refers_to");
  f.add("RQ", "has_alias");
  f.add("RQ", "replaces");
  f.add("SY", "");
  f.add("SY", "expanded_form_of");
  f.add("SY", "has_expanded_form");
  f.add("SY", "has_multi_level_category");
  f.add("SY", "has_print_name");
  f.add("SY", "has_single_level_category");
  f.add("SY", "has_tradename");
  f.add("SY", "same_as");
  return f;
}

void RelationFilter::add(std::string_view category, std::string_view attribute) {
  keys_.insert(filter_key(category, attribute));
}

bool RelationFilter::keep(std::string_view category, std::string_view attribute) const {
  return keys_.count(filter_key(category, attribute)) > 0;
}

std::vector<std::pair<std::string, std::string>> RelationFilter::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(keys_.size());
  for (const std::string& k : keys_) {
    const auto tab = k.find('\t');
    out.emplace_back(k.substr(0, tab), k.substr(tab + 1));
  }
  std::sort(out.begin(), out.end());
  return out;
}

RelationLoad load_relations(const std::string& path, const RelationFilter& filter) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  RelationLoad out;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_tabs(line);
    if (fields.size() == 3) fields.emplace_back();
    if (fields.size() != 4 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": malformed relation line");
    }
    ++out.total;
    if (!filter.keep(fields[2], fields[3])) {
      ++out.dropped;
      continue;
    }
    out.kept.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2]),
                        std::move(fields[3])});
  }
  return out;
}

std::unordered_map<std::string, std::string> load_name_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::unordered_map<std::string, std::string> map;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": malformed name-map line");
    }
    map.emplace(fields[0], fields[1]);
  }
  return map;
}

std::string pair_key(std::string_view token_a, std::string_view token_b) {
  std::string k(token_a);
  k.push_back('\t');
  k.append(token_b);
  return k;
}

std::string pair_key_of_surfaces(std::string_view surface_a, std::string_view surface_b) {
  std::string ta = surface_to_token(surface_a);
  std::string tb = surface_to_token(surface_b);
  if (tb < ta) std::swap(ta, tb);
  return pair_key(ta, tb);
}

ResolvedPositives resolve_positives(const std::vector<RelationRecord>& records,
                                    const std::unordered_map<std::string, std::string>& name_map,
                                    const Vocabulary& vocab) {
  ResolvedPositives out;
  for (const RelationRecord& r : records) {
    const auto a_it = name_map.find(r.concept_a);
    const auto b_it = name_map.find(r.concept_b);
    if (a_it == name_map.end() || b_it == name_map.end()) {
      ++out.stats.missing_name;
      continue;
    }
    std::string surface_a = a_it->second;
    std::string surface_b = b_it->second;
    std::string token_a = surface_to_token(surface_a);
    std::string token_b = surface_to_token(surface_b);
    if (vocab.id_of(token_a) == Vocabulary::npos || vocab.id_of(token_b) == Vocabulary::npos) {
      ++out.stats.out_of_vocab;
      continue;
    }
    if (token_a == token_b) {
      ++out.stats.self_pairs;
      continue;
    }
    if (token_b < token_a) {
      std::swap(token_a, token_b);
      std::swap(surface_a, surface_b);
    }
    if (!out.keys.insert(pair_key(token_a, token_b)).second) {
      ++out.stats.duplicates;
      continue;
    }
    out.pairs.push_back({std::move(surface_a), std::move(surface_b)});
  }
  return out;
}

std::vector<TermPair> generate_negatives(const Vocabulary& vocab, std::uint64_t count,
                                         std::uint64_t min_occurrences,
                                         const std::unordered_set<std::string>& positive_keys,
                                         Rng& rng) {
  std::vector<std::uint32_t> eligible;
  for (std::uint32_t id = 0; id < vocab.size(); ++id) {
    if (vocab.counts[id] >= min_occurrences) eligible.push_back(id);
  }
  const std::uint64_t e = eligible.size();
  if (count == 0) return {};
  if (e < 2) throw DataError("fewer than two terms satisfy the occurrence minimum");

  std::uint64_t excluded = 0;
  for (const std::string& key : positive_keys) {
    const auto tab = key.find('\t');
    const std::uint32_t ia = vocab.id_of(key.substr(0, tab));
    const std::uint32_t ib = vocab.id_of(key.substr(tab + 1));
    if (ia != Vocabulary::npos && ib != Vocabulary::npos &&
        vocab.counts[ia] >= min_occurrences && vocab.counts[ib] >= min_occurrences) {
      ++excluded;
    }
  }
  const std::uint64_t available = e * (e - 1) / 2 - excluded;
  if (count > available) {
    throw DataError("requested " + std::to_string(count) + " negatives but only " +
                    std::to_string(available) + " distinct pairs exist");
  }

  std::vector<TermPair> out;
  out.reserve(count);
  std::unordered_set<std::string> seen;
  seen.reserve(count * 2);
  while (out.size() < count) {
    const std::uint64_t i = rng.below(e);
    const std::uint64_t j = rng.below(e);
    if (i == j) continue;
    std::string ta = vocab.terms[eligible[i]];
    std::string tb = vocab.terms[eligible[j]];
    if (tb < ta) std::swap(ta, tb);
    std::string key = pair_key(ta, tb);
    if (positive_keys.count(key) > 0 || !seen.insert(std::move(key)).second) continue;
    out.push_back({spaced(ta), spaced(tb)});
  }
  return out;
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kTest:
      return "test";
    default:
      return "holdout";
  }
}

Split split_from_name(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  if (name == "holdout") return Split::kHoldout;
  throw DataError("unknown split tag '" + std::string(name) + "'");
}

std::size_t PairDataset::count(Split s) const {
  std::size_t n = 0;
  for (const PairRecord& r : records) n += r.split == s;
  return n;
}

std::size_t PairDataset::count(Split s, int label) const {
  std::size_t n = 0;
  for (const PairRecord& r : records) n += r.split == s && r.label == label;
  return n;
}

void PairDataset::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (const PairRecord& r : records) {
    out << r.a << '\t' << r.b << '\t' << r.label << '\t' << split_name(r.split) << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

PairDataset PairDataset::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  PairDataset ds;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 4 || fields[0].empty() || fields[1].empty()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": malformed pair line");
    }
    int label = 0;
    if (fields[2] == "1" || fields[2] == "+1") label = 1;
    else if (fields[2] == "-1") label = -1;
    else throw DataError(path + ":" + std::to_string(line_no) + ": label must be 1 or -1");
    ds.records.push_back({fields[0], fields[1], label, split_from_name(fields[3])});
  }
  return ds;
}

namespace {

void tag_class(std::vector<PairRecord>& out, const std::vector<TermPair>& pairs, int label,
               const SplitRatios& ratios, Rng& rng) {
  std::vector<std::uint32_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const double n = static_cast<double>(pairs.size());
  const std::size_t c1 = static_cast<std::size_t>(std::llround(n * ratios.train));
  const std::size_t c2 =
      static_cast<std::size_t>(std::llround(n * (ratios.train + ratios.test)));
  for (std::size_t i = 0; i < order.size(); ++i) {
    Split s = i < c1 ? Split::kTrain : i < c2 ? Split::kTest : Split::kHoldout;
    const TermPair& p = pairs[order[i]];
    out.push_back({p.a, p.b, label, s});
  }
}

}  // namespace

PairDataset make_dataset(const std::vector<TermPair>& positives,
                         const std::vector<TermPair>& negatives, const SplitRatios& ratios,
                         std::uint64_t seed) {
  const double sum = ratios.train + ratios.test + ratios.holdout;
  if (std::fabs(sum - 1.0) > 1e-9 || ratios.train < 0 || ratios.test < 0 ||
      ratios.holdout < 0) {
    throw UsageError("split ratios must be nonnegative and sum to 1");
  }
  PairDataset ds;
  ds.records.reserve(positives.size() + negatives.size());
  Rng pos_rng(mix_seed(seed, 1));
  Rng neg_rng(mix_seed(seed, 2));
  tag_class(ds.records, positives, 1, ratios, pos_rng);
  tag_class(ds.records, negatives, -1, ratios, neg_rng);
  return ds;
}

}  // namespace synkb
