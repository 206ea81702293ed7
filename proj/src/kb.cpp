#include "synkb/kb.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <thread>
#include <unordered_set>

#include "synkb/dataset.hpp"

namespace synkb {

CandidateSource CandidateSource::from_terms(std::vector<std::string> terms) {
  CandidateSource s;
  s.terms = std::move(terms);
  return s;
}

CandidateSource CandidateSource::from_term_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  CandidateSource s;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) s.terms.push_back(line);
  }
  return s;
}

CandidateSource CandidateSource::from_pair_file(std::string path) {
  CandidateSource s;
  s.pair_file = std::move(path);
  return s;
}

void SynonymKB::sort_canonical() {
  std::sort(entries.begin(), entries.end(), [](const KBEntry& x, const KBEntry& y) {
    if (x.score != y.score) return x.score > y.score;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
}

void SynonymKB::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  char buf[32];
  for (const KBEntry& e : entries) {
    std::snprintf(buf, sizeof(buf), "%.6f", e.score);
    out << e.a << '\t' << e.b << '\t' << buf << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

SynonymKB SynonymKB::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  SynonymKB kb;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 3) {
      throw DataError(path + ":" + std::to_string(line_no) + ": malformed entry");
    }
    try {
      kb.entries.push_back({fields[0], fields[1], std::stod(fields[2])});
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(line_no) + ": bad score");
    }
  }
  return kb;
}

namespace {

struct PreparedTerm {
  TermSurface surface;
  const double* vec = nullptr;
};

struct ProgressMeter {
  std::atomic<std::uint64_t> scored{0};
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  bool enabled = false;

  void bump(std::uint64_t n) {
    const std::uint64_t before = scored.fetch_add(n, std::memory_order_relaxed);
    const std::uint64_t after = before + n;
    if (enabled && before / 1'000'000 != after / 1'000'000) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::fprintf(stderr, "scored %llu pairs (%.0f pairs/s)\n",
                   static_cast<unsigned long long>(after),
                   secs > 0 ? static_cast<double>(after) / secs : 0.0);
    }
  }
};

// Scores one shard of the all-pairs enumeration over prepared terms.
void score_term_shard(const std::vector<PreparedTerm>& prepared, const LinearModel& model,
                      const PairFeaturizer& featurizer, double threshold, unsigned shard,
                      unsigned shard_count, std::vector<KBEntry>& out, std::uint64_t& scored,
                      ProgressMeter& meter) {
  std::vector<double> features(featurizer.feature_count());
  PairEnumerator pairs(prepared.size(), shard, shard_count);
  const std::size_t dim = featurizer.dim();
  std::uint32_t i = 0, j = 0;
  std::uint64_t since_bump = 0;
  while (pairs.next(i, j)) {
    const PreparedTerm& a = prepared[i];
    const PreparedTerm& b = prepared[j];
    featurizer.build({a.vec, dim}, {b.vec, dim}, a.surface, b.surface, features);
    const double z = model.score(features.data());
    ++scored;
    if (z > threshold) out.push_back({a.surface.original, b.surface.original, z});
    if (++since_bump == 65536) {
      meter.bump(since_bump);
      since_bump = 0;
    }
  }
  meter.bump(since_bump);
}

void score_pair_file_shard(const std::string& path, const EmbeddingTable& embeddings,
                           const LinearModel& model, const PairFeaturizer& featurizer,
                           double threshold, unsigned shard, unsigned shard_count,
                           std::vector<KBEntry>& out, std::uint64_t& scored,
                           std::uint64_t& dropped, ProgressMeter& meter) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<double> features(featurizer.feature_count());
  const std::size_t dim = featurizer.dim();
  std::string line;
  std::uint64_t line_no = 0;
  std::uint64_t since_bump = 0;
  while (std::getline(in, line)) {
    const std::uint64_t current = line_no++;
    if (current % shard_count != shard) continue;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw DataError(path + ":" + std::to_string(current + 1) + ": expected 'a TAB b'");
    }
    const double* va = embeddings.vector_of(surface_to_token(fields[0]));
    const double* vb = embeddings.vector_of(surface_to_token(fields[1]));
    if (va == nullptr || vb == nullptr) {
      ++dropped;
      continue;
    }
    const TermSurface a = TermSurface::parse(fields[0]);
    const TermSurface b = TermSurface::parse(fields[1]);
    featurizer.build({va, dim}, {vb, dim}, a, b, features);
    const double z = model.score(features.data());
    ++scored;
    if (z > threshold) out.push_back({fields[0], fields[1], z});
    if (++since_bump == 65536) {
      meter.bump(since_bump);
      since_bump = 0;
    }
  }
  meter.bump(since_bump);
}

}  // namespace

SynonymKB score_stream(const CandidateSource& source, const EmbeddingTable& embeddings,
                       const LinearModel& model, const MatchRules& rules, double threshold,
                       unsigned threads, ScoreStats* stats, bool progress) {
  if (threads < 1) throw UsageError("threads must be >= 1");
  if (model.dim != embeddings.dim()) {
    throw DataError("model was trained for dim " + std::to_string(model.dim) +
                    " but embeddings have dim " + std::to_string(embeddings.dim()));
  }
  const PairFeaturizer featurizer(model.dim, model.groups, rules);
  if (featurizer.feature_count() != model.weights.size() ||
      featurizer.layout_id() != model.layout_id) {
    throw DataError("model weight layout does not match its declared feature groups");
  }

  ScoreStats local;
  const auto start = std::chrono::steady_clock::now();
  ProgressMeter meter;
  meter.enabled = progress;

  std::vector<PreparedTerm> prepared;
  if (source.is_term_list()) {
    std::unordered_set<std::string> seen;
    prepared.reserve(source.terms.size());
    for (const std::string& term : source.terms) {
      const std::string token = surface_to_token(term);
      const double* vec = token.empty() ? nullptr : embeddings.vector_of(token);
      if (vec == nullptr || !seen.insert(token).second) {
        ++local.terms_dropped;
        continue;
      }
      prepared.push_back({TermSurface::parse(term), vec});
    }
  }

  std::vector<std::vector<KBEntry>> partial(threads);
  std::vector<std::uint64_t> scored(threads, 0);
  std::vector<std::uint64_t> dropped(threads, 0);
  std::vector<std::exception_ptr> errors(threads);

  auto worker = [&](unsigned t) {
    try {
      if (source.is_term_list()) {
        score_term_shard(prepared, model, featurizer, threshold, t, threads, partial[t],
                         scored[t], meter);
      } else {
        score_pair_file_shard(source.pair_file, embeddings, model, featurizer, threshold, t,
                              threads, partial[t], scored[t], dropped[t], meter);
      }
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (std::thread& th : pool) th.join();
  }
  for (std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SynonymKB kb;
  std::size_t total = 0;
  for (const auto& p : partial) total += p.size();
  kb.entries.reserve(total);
  for (auto& p : partial) {
    kb.entries.insert(kb.entries.end(), std::make_move_iterator(p.begin()),
                      std::make_move_iterator(p.end()));
  }
  kb.sort_canonical();

  for (unsigned t = 0; t < threads; ++t) {
    local.pairs_scored += scored[t];
    local.pairs_dropped += dropped[t];
  }
  local.kept = kb.entries.size();
  local.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  local.pairs_per_sec =
      local.seconds > 0 ? static_cast<double>(local.pairs_scored) / local.seconds : 0.0;
  if (stats != nullptr) *stats = local;
  return kb;
}

double recall_against(const SynonymKB& kb,
                      const std::vector<std::pair<std::string, std::string>>& heldout) {
  if (heldout.empty()) throw DataError("held-out set is empty");
  std::unordered_set<std::string> kb_keys;
  kb_keys.reserve(kb.entries.size() * 2);
  for (const KBEntry& e : kb.entries) {
    kb_keys.insert(pair_key_of_surfaces(e.a, e.b));
  }
  std::uint64_t covered = 0;
  for (const auto& [a, b] : heldout) {
    covered += kb_keys.count(pair_key_of_surfaces(a, b)) > 0;
  }
  return static_cast<double>(covered) / static_cast<double>(heldout.size());
}

}  // namespace synkb
