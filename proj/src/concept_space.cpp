#include "synkb/concept_space.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace synkb {

std::string TermSurface::joined_folded() const { return join(folded, ' '); }

TermSurface TermSurface::parse(std::string_view surface) {
  TermSurface t;
  t.original = std::string(surface);
  t.words = split_whitespace(surface);
  if (t.words.empty()) throw DataError("empty term surface");
  t.folded.reserve(t.words.size());
  for (const std::string& w : t.words) t.folded.push_back(lower_ascii(w));
  return t;
}

bool word_subsequence(std::span<const std::string> needle, std::span<const std::string> hay) {
  std::size_t i = 0;
  for (std::size_t j = 0; i < needle.size() && j < hay.size(); ++j) {
    if (needle[i] == hay[j]) ++i;
  }
  return i == needle.size();
}

MatchRules::MatchRules()
    : prefixes_{"anti", "dis", "il", "im", "in", "ir", "non", "un"} {}

MatchRules MatchRules::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  MatchRules rules;
  rules.prefixes_.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::vector<std::string> fields = split_whitespace(line);
    if (fields.empty()) continue;
    if (fields.size() > 1) throw DataError(path + ": one prefix per line, got '" + line + "'");
    rules.prefixes_.push_back(lower_ascii(fields[0]));
  }
  if (rules.prefixes_.empty()) throw DataError(path + ": no prefixes");
  return rules;
}

namespace {

std::string uppercase_sequence(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c >= 'A' && c <= 'Z') out.push_back(c);
  }
  return out;
}

std::string initials(const std::vector<std::string>& folded_words) {
  std::string out;
  out.reserve(folded_words.size());
  for (const std::string& w : folded_words) out.push_back(w.front());
  return out;
}

// The sequence m5 compares for one side: a single word contributes all its
// characters, a multi-word term contributes its word initials.
std::string m5_sequence(const TermSurface& t, bool other_is_single) {
  if (t.length() == 1) {
    if (other_is_single) return t.folded.front().substr(0, 1);
    return t.folded.front();
  }
  return initials(t.folded);
}

}  // namespace

MatchFeatures MatchRules::compute(const TermSurface& a, const TermSurface& b) const {
  MatchFeatures m;

  std::unordered_map<std::string, unsigned> pool;
  for (const std::string& w : a.folded) ++pool[w];
  for (const std::string& w : b.folded) {
    auto it = pool.find(w);
    if (it != pool.end() && it->second > 0) {
      --it->second;
      ++m.m1;
    }
  }
  m.m2 = static_cast<double>(m.m1) /
         (static_cast<double>(a.length()) * static_cast<double>(b.length()));

  const std::string ja = a.joined_folded();
  const std::string jb = b.joined_folded();
  for (const std::string& p : prefixes_) {
    if (p + ja == jb || p + jb == ja) {
      m.m3 = true;
      break;
    }
  }

  const std::string ua = uppercase_sequence(a.original);
  const std::string ub = uppercase_sequence(b.original);
  m.m4 = !ua.empty() && ua == ub;

  m.m5 = m5_sequence(a, b.length() == 1) == m5_sequence(b, a.length() == 1);

  m.m6 = word_subsequence(a.folded, b.folded) || word_subsequence(b.folded, a.folded);
  return m;
}

FeatureGroups FeatureGroups::parse(std::string_view csv) {
  FeatureGroups g;
  bool raw = false;
  std::size_t start = 0;
  while (start <= csv.size()) {
    std::size_t end = csv.find(',', start);
    if (end == std::string_view::npos) end = csv.size();
    std::string_view name = csv.substr(start, end - start);
    start = end + 1;
    if (name.empty()) continue;
    if (name == "raw") {
      raw = true;
    } else if (name == "match") {
      g.match = true;
    } else if (name == "sumdiff") {
      g.sumdiff = true;
    } else if (name == "product") {
      g.product = true;
    } else if (name == "m2scaled") {
      g.m2scaled = true;
    } else {
      throw UsageError("unknown feature group '" + std::string(name) + "'");
    }
  }
  if (!raw) throw UsageError("feature groups must include 'raw'");
  return g;
}

std::string FeatureGroups::to_string() const {
  std::string out = "raw";
  if (match) out += ",match";
  if (sumdiff) out += ",sumdiff";
  if (product) out += ",product";
  if (m2scaled) out += ",m2scaled";
  return out;
}

std::uint64_t feature_layout_id(std::size_t dim, const FeatureGroups& groups) {
  return fnv1a64("dim=" + std::to_string(dim) + "|groups=" + groups.to_string());
}

PairFeaturizer::PairFeaturizer(std::size_t dim, FeatureGroups groups, MatchRules rules)
    : dim_(dim), groups_(groups), rules_(std::move(rules)) {
  if (dim_ == 0) throw std::invalid_argument("feature dim must be positive");
  count_ = 2 * dim_;
  if (groups_.match) count_ += 6;
  if (groups_.sumdiff) count_ += 2 * dim_;
  if (groups_.product) count_ += dim_;
  if (groups_.m2scaled) count_ += 2 * dim_;
  layout_id_ = feature_layout_id(dim_, groups_);
}

void PairFeaturizer::build(std::span<const double> A, std::span<const double> B,
                           const TermSurface& a, const TermSurface& b,
                           std::span<double> out) const {
  if (A.size() != dim_ || B.size() != dim_) {
    throw std::invalid_argument("embedding length does not match featurizer dim");
  }
  if (out.size() != count_) {
    throw std::invalid_argument("output span does not match feature count");
  }

  double* p = out.data();
  for (std::size_t d = 0; d < dim_; ++d) *p++ = A[d];
  for (std::size_t d = 0; d < dim_; ++d) *p++ = B[d];

  MatchFeatures m;
  if (groups_.match || groups_.m2scaled) m = rules_.compute(a, b);
  if (groups_.match) {
    *p++ = std::min(static_cast<double>(m.m1), kM1Clip);
    *p++ = m.m2;
    *p++ = m.m3 ? 1.0 : 0.0;
    *p++ = m.m4 ? 1.0 : 0.0;
    *p++ = m.m5 ? 1.0 : 0.0;
    *p++ = m.m6 ? 1.0 : 0.0;
  }
  if (groups_.sumdiff) {
    for (std::size_t d = 0; d < dim_; ++d) *p++ = A[d] + B[d];
    for (std::size_t d = 0; d < dim_; ++d) *p++ = std::fabs(A[d] - B[d]);
  }
  if (groups_.product) {
    for (std::size_t d = 0; d < dim_; ++d) *p++ = A[d] * B[d];
  }
  if (groups_.m2scaled) {
    for (std::size_t d = 0; d < dim_; ++d) *p++ = m.m2 * A[d];
    for (std::size_t d = 0; d < dim_; ++d) *p++ = m.m2 * B[d];
  }
}

std::vector<double> PairFeaturizer::build(std::span<const double> A, std::span<const double> B,
                                          const TermSurface& a, const TermSurface& b) const {
  std::vector<double> out(count_);
  build(A, B, a, b, out);
  return out;
}

}  // namespace synkb
