#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "synkb/common.hpp"
#include "synkb/corpus.hpp"
#include "synkb/huffman.hpp"
#include "synkb/matrix.hpp"
#include "synkb/negative_sampler.hpp"
#include "synkb/sigmoid.hpp"

namespace synkb {

enum class Arch { kCbow, kSkipGram };
enum class Loss { kHierarchicalSoftmax, kNegativeSampling };

struct TrainingConfig {
  std::size_t dim = 100;
  unsigned window = 5;        // max context half-width in words
  unsigned negative = 10;     // negatives per positive output (NEG loss)
  double sample_rate = 1e-5;  // <= 0 disables subsampling
  double initial_lr = 0.025;
  unsigned epochs = 1;
  Arch arch = Arch::kCbow;
  Loss loss = Loss::kHierarchicalSoftmax;
  bool supervised = false;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  // Learning rate decays linearly to initial_lr * lr_floor_fraction over the
  // expected token count (total corpus tokens * epochs).
  double lr_floor_fraction = 1e-4;
  std::size_t negative_table_size = 100'000'000;
  bool exact_sigmoid = false;
  bool verbose = false;

  void validate() const;
};

// Trained parameters. `input` is the embedding matrix handed to downstream
// consumers; the theta matrices are the output-layer parameters and exist
// only for the loss/supervision modes that use them.
struct EmbeddingModel {
  std::size_t dim = 0;
  Matrix input;        // |V| x dim
  Matrix tree_theta;   // (|V|-1) x dim, hierarchical softmax
  Matrix word_theta;   // |V| x dim, negative sampling
  Matrix label_theta;  // label_count x dim, supervised mode

  double* param_row(int kind, std::uint32_t id);
  const double* param_row(int kind, std::uint32_t id) const;
};

// One output unit touched by a training step: which parameter row, and the
// 0/1 target the logistic regression at that unit trains toward.
struct OutputTouch {
  enum Kind : std::uint8_t { kTreeNode = 0, kWordOutput = 1, kLabelOutput = 2 };
  Kind kind;
  std::uint32_t id;
  double target;
};

// All updates a single (context, target) application performs. `sources`
// are the input rows whose embeddings form the context vector: the window
// words for CBOW (mean), a single word for skip-gram.
struct ContextPlan {
  std::vector<std::uint32_t> sources;
  std::vector<OutputTouch> outputs;
};

// Per-token plan: one context for CBOW, one per window position for
// skip-gram. Storage is reused across tokens; `count` is the live prefix.
struct TokenPlan {
  std::vector<ContextPlan> contexts;
  std::size_t count = 0;

  void reset() { count = 0; }
  ContextPlan& add() {
    if (count == contexts.size()) contexts.emplace_back();
    ContextPlan& c = contexts[count++];
    c.sources.clear();
    c.outputs.clear();
    return c;
  }
  bool empty() const { return count == 0; }
};

struct UpdateCounters {
  std::uint64_t tokens_seen = 0;     // in-vocabulary tokens scanned
  std::uint64_t tokens_trained = 0;  // tokens surviving subsampling
  std::uint64_t contexts = 0;
  std::uint64_t skipped_empty_context = 0;
  std::uint64_t word_unit_evals = 0;   // tree-node + word-output evaluations
  std::uint64_t label_unit_evals = 0;  // label-output evaluations

  void add(const UpdateCounters& o);
};

// Scratch buffers for apply_token; one per training thread.
struct TrainWorkspace {
  std::vector<double> context;
  std::vector<double> context_delta;
};

// 1.0 if `u` is in the sorted id list, else 0.0. The target an output unit
// trains toward.
inline double indicator(std::uint32_t u, std::span<const std::uint32_t> sorted_positives) {
  return std::binary_search(sorted_positives.begin(), sorted_positives.end(), u) ? 1.0 : 0.0;
}

// Logistic objective contribution of one context vector against a set of
// output units: sum over units of t*log(s(theta.c)) + (1-t)*log(1-s(theta.c)).
// Serves as the oracle the per-step updates are gradient-checked against and
// as a progress metric; the training path never evaluates it.
struct LogTermOutput {
  std::span<const double> theta;
  double target;
};
double log_term(std::span<const double> context, std::span<const LogTermOutput> outputs);

// Single-unit update of the shared logistic rule. Writes
//   delta_theta = lr * (target - s(theta.c)) * c
// and accumulates lr * (target - s(theta.c)) * theta into context_delta_accum,
// which the caller applies to the contributing input embeddings after all
// units of the context are processed.
void pointwise_update(std::span<const double> theta, std::span<const double> context,
                      double target, double lr, const Sigmoid& sigmoid,
                      std::span<double> delta_theta,
                      std::span<double> context_delta_accum);

class EmbeddingTrainer {
 public:
  // `labels` may be null; it must outlive the trainer. Builds the Huffman
  // tree or unigram table for the configured loss up front.
  EmbeddingTrainer(const Vocabulary& vocab, const LabelAssignments* labels,
                   const TrainingConfig& config);

  // Runs `epochs` passes over the corpus. With threads > 1 sentence shards
  // train concurrently with unsynchronized parameter updates; single-thread
  // runs are bit-reproducible for a fixed seed.
  EmbeddingModel train(const CorpusFactory& corpus);

  // Freshly initialized parameters: inputs uniform in [-0.5/dim, 0.5/dim]
  // from the config seed, all output parameters zero.
  EmbeddingModel make_model() const;

  // Decides everything a token application will touch. Draws negative
  // samples from `rng`; consumes no randomness otherwise.
  void plan_token(std::span<const std::uint32_t> sentence, std::size_t position,
                  unsigned half_width, Rng& rng, TokenPlan& plan) const;

  // Applies the planned updates in place at learning rate `lr`. Within one
  // context all unit updates read the pre-step context vector, and the
  // accumulated context delta lands on each source embedding scaled by
  // 1/|sources|.
  void apply_token(EmbeddingModel& model, const TokenPlan& plan, double lr,
                   TrainWorkspace& ws, UpdateCounters* counters = nullptr) const;

  const HuffmanTree* tree() const { return tree_.get(); }
  const UnigramSampler* sampler() const { return sampler_.get(); }
  const UpdateCounters& last_counters() const { return counters_; }
  const TrainingConfig& config() const { return config_; }

 private:
  void apply_context(EmbeddingModel& model, const ContextPlan& ctx, double lr,
                     TrainWorkspace& ws, UpdateCounters* counters) const;
  void run_worker(unsigned shard, EmbeddingModel& model, const CorpusFactory& corpus,
                  std::atomic<std::uint64_t>& tokens_done, UpdateCounters& out) const;

  const Vocabulary& vocab_;
  const LabelAssignments* labels_;
  TrainingConfig config_;
  Sigmoid sigmoid_;
  std::unique_ptr<HuffmanTree> tree_;
  std::unique_ptr<UnigramSampler> sampler_;
  std::uint64_t total_expected_tokens_ = 0;
  UpdateCounters counters_;
};

// Text format: header "|V| dim", then one "term v1 ... v_dim" line per term
// with 6 significant digits. Binary format: magic line, same header, then
// raw little-endian doubles per term; round-trips exactly.
void save_embeddings_text(const EmbeddingModel& model, const Vocabulary& vocab,
                          const std::string& path);
void save_embeddings_binary(const EmbeddingModel& model, const Vocabulary& vocab,
                            const std::string& path);

// Read-only embedding table loaded from either format (sniffed from the
// first line).
class EmbeddingTable {
 public:
  static EmbeddingTable load(const std::string& path);

  std::size_t dim() const { return vectors_.cols; }
  std::size_t size() const { return terms_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }

  // Null if the term is absent.
  const double* vector_of(std::string_view term) const;
  const double* vector_at(std::size_t index) const { return vectors_.row(index); }

 private:
  std::vector<std::string> terms_;
  Matrix vectors_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

}  // namespace synkb
