#include "synkb/embedding.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace synkb {

namespace {

constexpr char kBinaryMagic[] = "SYNKBEMB1";

std::uint64_t parse_u64_field(std::string_view s, const std::string& what) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw DataError("bad " + what + ": '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

void TrainingConfig::validate() const {
  if (dim < 1) throw UsageError("dim must be >= 1");
  if (window < 1) throw UsageError("window must be >= 1");
  if (loss == Loss::kNegativeSampling && negative < 1) {
    throw UsageError("negative must be >= 1 with negative-sampling loss");
  }
  if (!(initial_lr > 0)) throw UsageError("learning rate must be positive");
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (threads < 1) throw UsageError("threads must be >= 1");
  if (!(lr_floor_fraction > 0) || lr_floor_fraction > 1) {
    throw UsageError("lr floor fraction must be in (0, 1]");
  }
}

double* EmbeddingModel::param_row(int kind, std::uint32_t id) {
  switch (kind) {
    case OutputTouch::kTreeNode:
      return tree_theta.row(id);
    case OutputTouch::kWordOutput:
      return word_theta.row(id);
    default:
      return label_theta.row(id);
  }
}

const double* EmbeddingModel::param_row(int kind, std::uint32_t id) const {
  return const_cast<EmbeddingModel*>(this)->param_row(kind, id);
}

void UpdateCounters::add(const UpdateCounters& o) {
  tokens_seen += o.tokens_seen;
  tokens_trained += o.tokens_trained;
  contexts += o.contexts;
  skipped_empty_context += o.skipped_empty_context;
  word_unit_evals += o.word_unit_evals;
  label_unit_evals += o.label_unit_evals;
}

double log_term(std::span<const double> context, std::span<const LogTermOutput> outputs) {
  double total = 0.0;
  for (const LogTermOutput& out : outputs) {
    double dot = 0.0;
    for (std::size_t i = 0; i < context.size(); ++i) dot += out.theta[i] * context[i];
    total += out.target * log_sigmoid(dot) + (1.0 - out.target) * log_sigmoid(-dot);
  }
  return total;
}

void pointwise_update(std::span<const double> theta, std::span<const double> context,
                      double target, double lr, const Sigmoid& sigmoid,
                      std::span<double> delta_theta, std::span<double> context_delta_accum) {
  double dot = 0.0;
  for (std::size_t i = 0; i < context.size(); ++i) dot += theta[i] * context[i];
  const double g = lr * (target - sigmoid(dot));
  for (std::size_t i = 0; i < context.size(); ++i) {
    delta_theta[i] = g * context[i];
    context_delta_accum[i] += g * theta[i];
  }
}

EmbeddingTrainer::EmbeddingTrainer(const Vocabulary& vocab, const LabelAssignments* labels,
                                   const TrainingConfig& config)
    : vocab_(vocab), labels_(labels), config_(config), sigmoid_(config.exact_sigmoid) {
  config_.validate();
  if (config_.supervised && labels_ == nullptr) {
    throw UsageError("supervised training requires label assignments");
  }
  if (vocab_.size() == 0) throw DataError("empty vocabulary");
  if (config_.loss == Loss::kHierarchicalSoftmax) {
    tree_ = std::make_unique<HuffmanTree>(build_huffman(vocab_.counts));
  } else {
    std::size_t table = std::max<std::size_t>(config_.negative_table_size, vocab_.size());
    sampler_ = std::make_unique<UnigramSampler>(vocab_.counts, 0.75, table);
  }
  total_expected_tokens_ =
      vocab_.total_tokens * static_cast<std::uint64_t>(config_.epochs);
}

EmbeddingModel EmbeddingTrainer::make_model() const {
  EmbeddingModel m;
  m.dim = config_.dim;
  m.input.resize(vocab_.size(), config_.dim);
  Rng rng(config_.seed);
  const double scale = 1.0 / static_cast<double>(config_.dim);
  for (double& v : m.input.data) v = (rng.unit() - 0.5) * scale;
  if (config_.loss == Loss::kHierarchicalSoftmax) {
    m.tree_theta.resize(vocab_.size() - 1, config_.dim);
  } else {
    m.word_theta.resize(vocab_.size(), config_.dim);
  }
  if (config_.supervised) {
    m.label_theta.resize(labels_->label_count, config_.dim);
  }
  return m;
}

void EmbeddingTrainer::plan_token(std::span<const std::uint32_t> sentence,
                                  std::size_t position, unsigned half_width, Rng& rng,
                                  TokenPlan& plan) const {
  plan.reset();
  const std::uint32_t target = sentence[position];
  const std::size_t lo = position >= half_width ? position - half_width : 0;
  const std::size_t hi = std::min(sentence.size() - 1, position + half_width);

  auto append_outputs = [&](ContextPlan& ctx) {
    if (config_.loss == Loss::kHierarchicalSoftmax) {
      const HuffmanTree::WordCode& wc = tree_->words[target];
      for (std::size_t k = 0; k < wc.bits.size(); ++k) {
        ctx.outputs.push_back(
            {OutputTouch::kTreeNode, wc.nodes[k], 1.0 - static_cast<double>(wc.bits[k])});
      }
    } else {
      ctx.outputs.push_back({OutputTouch::kWordOutput, target, 1.0});
      for (unsigned n = 0; n < config_.negative; ++n) {
        ctx.outputs.push_back(
            {OutputTouch::kWordOutput, sampler_->sample_excluding(rng, target), 0.0});
      }
    }
    if (config_.supervised && labels_ != nullptr) {
      const std::vector<std::uint32_t>* ys = labels_->labels_of(target);
      if (ys != nullptr && !ys->empty()) {
        for (std::uint32_t l = 0; l < labels_->label_count; ++l) {
          ctx.outputs.push_back({OutputTouch::kLabelOutput, l, indicator(l, *ys)});
        }
      }
    }
  };

  if (config_.arch == Arch::kCbow) {
    ContextPlan& ctx = plan.add();
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j == position) continue;
      ctx.sources.push_back(sentence[j]);
    }
    if (ctx.sources.empty()) {
      plan.reset();
      return;
    }
    append_outputs(ctx);
  } else {
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j == position) continue;
      ContextPlan& ctx = plan.add();
      ctx.sources.push_back(sentence[j]);
      append_outputs(ctx);
    }
  }
}

void EmbeddingTrainer::apply_context(EmbeddingModel& model, const ContextPlan& ctx,
                                     double lr, TrainWorkspace& ws,
                                     UpdateCounters* counters) const {
  const std::size_t dim = model.dim;
  ws.context.assign(dim, 0.0);
  for (std::uint32_t s : ctx.sources) {
    const double* w = model.input.row(s);
    for (std::size_t d = 0; d < dim; ++d) ws.context[d] += w[d];
  }
  if (ctx.sources.size() > 1) {
    const double inv = 1.0 / static_cast<double>(ctx.sources.size());
    for (std::size_t d = 0; d < dim; ++d) ws.context[d] *= inv;
  }
  ws.context_delta.assign(dim, 0.0);

  // Every unit update reads the pre-step theta row while accumulating the
  // context delta, so one context application is one exact gradient step of
  // its log_term as long as the touched rows are distinct.
  for (const OutputTouch& out : ctx.outputs) {
    double* theta = model.param_row(out.kind, out.id);
    double dot = 0.0;
    for (std::size_t d = 0; d < dim; ++d) dot += theta[d] * ws.context[d];
    const double g = lr * (out.target - sigmoid_(dot));
    for (std::size_t d = 0; d < dim; ++d) {
      const double t = theta[d];
      ws.context_delta[d] += g * t;
      theta[d] = t + g * ws.context[d];
    }
    if (counters != nullptr) {
      if (out.kind == OutputTouch::kLabelOutput) {
        ++counters->label_unit_evals;
      } else {
        ++counters->word_unit_evals;
      }
    }
  }

  const double scale = 1.0 / static_cast<double>(ctx.sources.size());
  for (std::uint32_t s : ctx.sources) {
    double* w = model.input.row(s);
    for (std::size_t d = 0; d < dim; ++d) w[d] += ws.context_delta[d] * scale;
  }
  if (counters != nullptr) ++counters->contexts;
}

void EmbeddingTrainer::apply_token(EmbeddingModel& model, const TokenPlan& plan, double lr,
                                   TrainWorkspace& ws, UpdateCounters* counters) const {
  if (plan.empty()) {
    if (counters != nullptr) ++counters->skipped_empty_context;
    return;
  }
  for (std::size_t i = 0; i < plan.count; ++i) {
    apply_context(model, plan.contexts[i], lr, ws, counters);
  }
}

void EmbeddingTrainer::run_worker(unsigned shard, EmbeddingModel& model,
                                  const CorpusFactory& corpus,
                                  std::atomic<std::uint64_t>& tokens_done,
                                  UpdateCounters& out) const {
  Rng rng(mix_seed(config_.seed, shard));
  std::unique_ptr<CorpusReader> reader = corpus(shard, config_.threads);
  if (!reader) throw DataError("corpus factory returned no reader");

  const double lr_floor = config_.initial_lr * config_.lr_floor_fraction;
  const double total = static_cast<double>(total_expected_tokens_);
  auto lr_at = [&](std::uint64_t done) {
    return std::max(lr_floor,
                    config_.initial_lr * (1.0 - static_cast<double>(done) / total));
  };

  double lr = lr_at(tokens_done.load(std::memory_order_relaxed));
  std::uint64_t unsynced = 0;
  UpdateCounters counters;
  TokenPlan plan;
  TrainWorkspace ws;
  std::vector<std::string> words;
  std::vector<std::uint32_t> sent;
  const auto start = std::chrono::steady_clock::now();

  for (unsigned epoch = 0; epoch < config_.epochs; ++epoch) {
    reader->rewind();
    while (reader->next(words)) {
      sent.clear();
      for (const std::string& w : words) {
        const std::uint32_t id = vocab_.id_of(w);
        if (id == Vocabulary::npos) continue;
        ++counters.tokens_seen;
        ++unsynced;
        if (config_.sample_rate > 0) {
          const double keep =
              keep_probability(vocab_.counts[id], vocab_.total_tokens, config_.sample_rate);
          if (rng.unit() >= keep) continue;
        }
        sent.push_back(id);
      }
      counters.tokens_trained += sent.size();
      for (std::size_t i = 0; i < sent.size(); ++i) {
        const unsigned b = 1 + static_cast<unsigned>(rng.below(config_.window));
        plan_token(sent, i, b, rng, plan);
        apply_token(model, plan, lr, ws, &counters);
      }
      if (unsynced >= 10000) {
        const std::uint64_t done =
            tokens_done.fetch_add(unsynced, std::memory_order_relaxed) + unsynced;
        unsynced = 0;
        lr = lr_at(done);
        if (config_.verbose && shard == 0) {
          const double secs =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          std::fprintf(stderr, "progress %5.2f%%  lr %.6f  tokens/s %.0f\n",
                       100.0 * static_cast<double>(done) / total, lr,
                       secs > 0 ? static_cast<double>(done) / secs : 0.0);
        }
      }
    }
  }
  tokens_done.fetch_add(unsynced, std::memory_order_relaxed);
  out = counters;
}

EmbeddingModel EmbeddingTrainer::train(const CorpusFactory& corpus) {
  if (vocab_.total_tokens == 0) throw DataError("vocabulary has zero total tokens");
  EmbeddingModel model = make_model();
  std::atomic<std::uint64_t> tokens_done{0};
  counters_ = UpdateCounters{};

  if (config_.threads <= 1) {
    run_worker(0, model, corpus, tokens_done, counters_);
  } else {
    std::vector<UpdateCounters> parts(config_.threads);
    std::vector<std::exception_ptr> errors(config_.threads);
    std::vector<std::thread> pool;
    pool.reserve(config_.threads);
    for (unsigned t = 0; t < config_.threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          run_worker(t, model, corpus, tokens_done, parts[t]);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (std::thread& th : pool) th.join();
    for (std::exception_ptr& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    for (const UpdateCounters& p : parts) counters_.add(p);
  }

  if (counters_.tokens_seen == 0) {
    throw DataError("corpus contains no in-vocabulary tokens");
  }
  return model;
}

void save_embeddings_text(const EmbeddingModel& model, const Vocabulary& vocab,
                          const std::string& path) {
  if (model.input.rows != vocab.size()) {
    throw std::invalid_argument("model/vocabulary size mismatch");
  }
  std::ofstream outf(path);
  if (!outf) throw DataError("cannot write " + path);
  outf << vocab.size() << ' ' << model.dim << '\n';
  char buf[64];
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    outf << vocab.terms[i];
    const double* row = model.input.row(i);
    for (std::size_t d = 0; d < model.dim; ++d) {
      std::snprintf(buf, sizeof(buf), "%.6g", row[d]);
      outf << ' ' << buf;
    }
    outf << '\n';
  }
  if (!outf) throw DataError("write failed: " + path);
}

void save_embeddings_binary(const EmbeddingModel& model, const Vocabulary& vocab,
                            const std::string& path) {
  if (model.input.rows != vocab.size()) {
    throw std::invalid_argument("model/vocabulary size mismatch");
  }
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw DataError("cannot write " + path);
  outf << kBinaryMagic << '\n' << vocab.size() << ' ' << model.dim << '\n';
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    outf << vocab.terms[i] << '\n';
    outf.write(reinterpret_cast<const char*>(model.input.row(i)),
               static_cast<std::streamsize>(model.dim * sizeof(double)));
  }
  if (!outf) throw DataError("write failed: " + path);
}

EmbeddingTable EmbeddingTable::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty embedding file: " + path);

  EmbeddingTable table;
  const bool binary = line == kBinaryMagic;
  if (binary && !std::getline(in, line)) {
    throw DataError("missing header: " + path);
  }
  const std::vector<std::string> header = split_whitespace(line);
  if (header.size() != 2) throw DataError("bad embedding header: " + path);
  const std::uint64_t rows = parse_u64_field(header[0], "row count");
  const std::uint64_t dim = parse_u64_field(header[1], "dimension");
  if (rows == 0 || dim == 0) throw DataError("bad embedding header: " + path);

  table.terms_.reserve(rows);
  table.vectors_.resize(rows, dim);
  for (std::uint64_t i = 0; i < rows; ++i) {
    double* row = table.vectors_.row(i);
    std::string term;
    if (binary) {
      if (!std::getline(in, term)) {
        throw DataError(path + ": expected " + std::to_string(rows) + " rows, got " +
                        std::to_string(i));
      }
      in.read(reinterpret_cast<char*>(row), static_cast<std::streamsize>(dim * sizeof(double)));
      if (!in) throw DataError(path + ": truncated vector for '" + term + "'");
    } else {
      if (!std::getline(in, line)) {
        throw DataError(path + ": expected " + std::to_string(rows) + " rows, got " +
                        std::to_string(i));
      }
      const std::vector<std::string> fields = split_whitespace(line);
      if (fields.size() != dim + 1) {
        throw DataError(path + ": row '" + (fields.empty() ? "" : fields[0]) + "' has " +
                        std::to_string(fields.empty() ? 0 : fields.size() - 1) +
                        " components, expected " + std::to_string(dim));
      }
      term = fields[0];
      for (std::uint64_t d = 0; d < dim; ++d) {
        try {
          row[d] = std::stod(fields[d + 1]);
        } catch (const std::exception&) {
          throw DataError(path + ": bad number '" + fields[d + 1] + "'");
        }
      }
    }
    if (!table.index_.emplace(term, static_cast<std::uint32_t>(i)).second) {
      throw DataError(path + ": duplicate term '" + term + "'");
    }
    table.terms_.push_back(std::move(term));
  }
  return table;
}

const double* EmbeddingTable::vector_of(std::string_view term) const {
  auto it = index_.find(std::string(term));
  return it == index_.end() ? nullptr : vectors_.row(it->second);
}

}  // namespace synkb
