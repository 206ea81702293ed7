#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "synkb/classifier.hpp"
#include "synkb/concept_space.hpp"
#include "synkb/corpus.hpp"
#include "synkb/dataset.hpp"
#include "synkb/embedding.hpp"
#include "synkb/kb.hpp"

using namespace synkb;

namespace {

LexiconTokenizer make_tokenizer(const std::string& lexicon_path) {
  if (lexicon_path.empty()) return LexiconTokenizer();
  return LexiconTokenizer::from_file(lexicon_path);
}

MatchRules make_rules(const std::string& prefixes_path) {
  if (prefixes_path.empty()) return MatchRules();
  return MatchRules::from_file(prefixes_path);
}

Arch parse_arch(const std::string& s) {
  if (s == "cbow") return Arch::kCbow;
  if (s == "skip" || s == "skipgram") return Arch::kSkipGram;
  throw UsageError("unknown --arch '" + s + "' (use cbow or skip)");
}

Loss parse_loss(const std::string& s) {
  if (s == "hs") return Loss::kHierarchicalSoftmax;
  if (s == "neg") return Loss::kNegativeSampling;
  throw UsageError("unknown --loss '" + s + "' (use hs or neg)");
}

SplitRatios parse_split(const std::string& s) {
  const std::vector<std::string> parts = [&] {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
      std::size_t end = s.find(',', start);
      if (end == std::string::npos) end = s.size();
      out.push_back(s.substr(start, end - start));
      start = end + 1;
    }
    return out;
  }();
  if (parts.size() != 3) throw UsageError("--split needs three comma-separated numbers");
  SplitRatios r;
  try {
    r.train = std::stod(parts[0]) ;
    r.test = std::stod(parts[1]);
    r.holdout = std::stod(parts[2]);
  } catch (const std::exception&) {
    throw UsageError("--split needs three comma-separated numbers");
  }
  // Accept percentages ("60,20,20") as well as fractions.
  if (r.train + r.test + r.holdout > 2.0) {
    r.train /= 100.0;
    r.test /= 100.0;
    r.holdout /= 100.0;
  }
  return r;
}

// Builds examples for one split of a pair dataset. Pairs whose terms lack an
// embedding are dropped and counted.
ExampleSet split_examples(const PairDataset& ds, Split split, const EmbeddingTable& emb,
                          const PairFeaturizer& featurizer, std::uint64_t* dropped_out) {
  ExampleSet set(featurizer.feature_count());
  std::vector<double> features(featurizer.feature_count());
  std::uint64_t dropped = 0;
  const std::size_t dim = featurizer.dim();
  for (const PairRecord& r : ds.records) {
    if (r.split != split) continue;
    const double* va = emb.vector_of(surface_to_token(r.a));
    const double* vb = emb.vector_of(surface_to_token(r.b));
    if (va == nullptr || vb == nullptr) {
      ++dropped;
      continue;
    }
    featurizer.build({va, dim}, {vb, dim}, TermSurface::parse(r.a), TermSurface::parse(r.b),
                     features);
    set.add(features, r.label);
  }
  if (dropped_out != nullptr) *dropped_out = dropped;
  return set;
}

struct TrainEmbeddingsArgs {
  std::string corpus, lexicon, vocab_in, vocab_out, labels, output;
  TrainingConfig config;
  std::uint64_t min_count = 2;
  bool binary = false;
};

void cmd_train_embeddings(const TrainEmbeddingsArgs& a) {
  if (a.config.supervised && a.labels.empty()) {
    throw UsageError("--supervised requires --labels");
  }
  const LexiconTokenizer tok = make_tokenizer(a.lexicon);
  const CorpusFactory corpus = file_corpus_factory(a.corpus, tok);

  Vocabulary vocab;
  if (!a.vocab_in.empty()) {
    vocab = Vocabulary::load(a.vocab_in);
  } else {
    vocab = build_vocabulary(corpus, a.min_count);
  }
  std::fprintf(stderr, "vocabulary: %zu terms, %llu tokens\n", vocab.size(),
               static_cast<unsigned long long>(vocab.total_tokens));
  if (!a.vocab_out.empty()) vocab.save(a.vocab_out);

  LabelAssignments labels;
  const LabelAssignments* labels_ptr = nullptr;
  if (!a.labels.empty()) {
    labels = LabelAssignments::load(a.labels, vocab);
    labels_ptr = &labels;
    std::fprintf(stderr, "labels: %zu labeled terms, %llu skipped lines\n",
                 labels.by_term.size(), static_cast<unsigned long long>(labels.skipped_terms));
    if (!a.config.supervised) {
      std::fprintf(stderr, "note: --labels given without --supervised; labels unused\n");
    }
  }

  EmbeddingTrainer trainer(vocab, labels_ptr, a.config);
  const EmbeddingModel model = trainer.train(corpus);
  const UpdateCounters& c = trainer.last_counters();
  std::fprintf(stderr,
               "trained: %llu tokens seen, %llu trained, %llu contexts, "
               "%llu word-unit evals, %llu label-unit evals\n",
               static_cast<unsigned long long>(c.tokens_seen),
               static_cast<unsigned long long>(c.tokens_trained),
               static_cast<unsigned long long>(c.contexts),
               static_cast<unsigned long long>(c.word_unit_evals),
               static_cast<unsigned long long>(c.label_unit_evals));

  if (a.binary) {
    save_embeddings_binary(model, vocab, a.output);
  } else {
    save_embeddings_text(model, vocab, a.output);
  }
}

struct BuildVocabArgs {
  std::string corpus, lexicon, output;
  std::uint64_t min_count = 2;
};

void cmd_build_vocab(const BuildVocabArgs& a) {
  const LexiconTokenizer tok = make_tokenizer(a.lexicon);
  const Vocabulary vocab = build_vocabulary(file_corpus_factory(a.corpus, tok), a.min_count);
  std::fprintf(stderr, "vocabulary: %zu terms, %llu tokens\n", vocab.size(),
               static_cast<unsigned long long>(vocab.total_tokens));
  vocab.save(a.output);
}

struct GenDataArgs {
  std::string relations, names, vocab, output, split = "0.6,0.2,0.2";
  std::uint64_t negatives = 0;  // 0: use ratio
  double negative_ratio = 200.0;
  std::uint64_t min_occurrences = 2;
  std::uint64_t seed = 1;
};

void cmd_gen_data(const GenDataArgs& a) {
  const SplitRatios ratios = parse_split(a.split);
  const Vocabulary vocab = Vocabulary::load(a.vocab);
  const RelationLoad rel = load_relations(a.relations, RelationFilter::synonym_defaults());
  std::fprintf(stderr, "relations: %llu read, %zu kept, %llu filtered out\n",
               static_cast<unsigned long long>(rel.total), rel.kept.size(),
               static_cast<unsigned long long>(rel.dropped));

  const auto names = load_name_map(a.names);
  const ResolvedPositives pos = resolve_positives(rel.kept, names, vocab);
  std::fprintf(stderr,
               "positives: %zu resolved (%llu missing name, %llu out of vocabulary, "
               "%llu self, %llu duplicate)\n",
               pos.pairs.size(), static_cast<unsigned long long>(pos.stats.missing_name),
               static_cast<unsigned long long>(pos.stats.out_of_vocab),
               static_cast<unsigned long long>(pos.stats.self_pairs),
               static_cast<unsigned long long>(pos.stats.duplicates));
  if (pos.pairs.empty()) throw DataError("no positive pairs resolved");

  std::uint64_t neg_count = a.negatives;
  if (neg_count == 0) {
    neg_count = static_cast<std::uint64_t>(
        std::llround(a.negative_ratio * static_cast<double>(pos.pairs.size())));
  }
  Rng rng(mix_seed(a.seed, 0xda7a));
  const std::vector<TermPair> negatives =
      generate_negatives(vocab, neg_count, a.min_occurrences, pos.keys, rng);
  std::fprintf(stderr, "negatives: %zu generated\n", negatives.size());

  const PairDataset ds = make_dataset(pos.pairs, negatives, ratios, a.seed);
  ds.save(a.output);
  for (Split s : {Split::kTrain, Split::kTest, Split::kHoldout}) {
    std::fprintf(stderr, "%s: %zu pairs (%zu positive)\n", std::string(split_name(s)).c_str(),
                 ds.count(s), ds.count(s, 1));
  }
}

struct TrainClassifierArgs {
  std::string data, embeddings, prefixes, output;
  std::string features = "raw,match,sumdiff,product,m2scaled";
  TrainOptions opts;
  bool binary = false;
};

void cmd_train_classifier(const TrainClassifierArgs& a) {
  const FeatureGroups groups = FeatureGroups::parse(a.features);
  const EmbeddingTable emb = EmbeddingTable::load(a.embeddings);
  const PairFeaturizer featurizer(emb.dim(), groups, make_rules(a.prefixes));
  const PairDataset ds = PairDataset::load(a.data);

  std::uint64_t dropped = 0;
  const ExampleSet train = split_examples(ds, Split::kTrain, emb, featurizer, &dropped);
  if (dropped > 0) {
    std::fprintf(stderr, "warning: %llu training pairs lacked embeddings\n",
                 static_cast<unsigned long long>(dropped));
  }
  if (train.size() == 0) throw DataError("train split is empty");

  LinearModel model = train_linear(train, a.opts);
  model.set_layout(emb.dim(), groups);
  const double loss = objective(model, train, a.opts.positive_weight, a.opts.reg_strength);
  const EvalReport r = evaluate(model, train);
  std::fprintf(stderr, "train: %zu examples, loss %.6f, f1 %.4f\n", train.size(), loss, r.f1);
  model.save(a.output, a.binary);
}

struct EvaluateArgs {
  std::string data, embeddings, model, prefixes, split = "test";
};

void cmd_evaluate(const EvaluateArgs& a) {
  const LinearModel model = LinearModel::load(a.model);
  const EmbeddingTable emb = EmbeddingTable::load(a.embeddings);
  if (model.dim != emb.dim()) {
    throw DataError("model dim " + std::to_string(model.dim) + " does not match embedding dim " +
                    std::to_string(emb.dim()));
  }
  const PairFeaturizer featurizer(model.dim, model.groups, make_rules(a.prefixes));
  const PairDataset ds = PairDataset::load(a.data);

  std::uint64_t dropped = 0;
  const ExampleSet examples =
      split_examples(ds, split_from_name(a.split), emb, featurizer, &dropped);
  if (examples.size() == 0) throw DataError("split '" + a.split + "' is empty");
  const EvalReport r = evaluate(model, examples);

  std::printf("split %s: %zu examples (%llu dropped without embeddings)\n", a.split.c_str(),
              examples.size(), static_cast<unsigned long long>(dropped));
  std::printf("              actual +   actual -\n");
  std::printf("predicted +  %9llu  %9llu\n", static_cast<unsigned long long>(r.tp),
              static_cast<unsigned long long>(r.fp));
  std::printf("predicted -  %9llu  %9llu\n", static_cast<unsigned long long>(r.fn),
              static_cast<unsigned long long>(r.tn));
  std::printf("precision %.6f  recall %.6f  f1 %.6f\n", r.precision, r.recall, r.f1);
  std::printf("EVAL\tsplit=%s\tprecision=%.6f\trecall=%.6f\tf1=%.6f\ttp=%llu\tfp=%llu\ttn=%llu\tfn=%llu\n",
              a.split.c_str(), r.precision, r.recall, r.f1,
              static_cast<unsigned long long>(r.tp), static_cast<unsigned long long>(r.fp),
              static_cast<unsigned long long>(r.tn), static_cast<unsigned long long>(r.fn));
}

struct BuildKbArgs {
  std::string embeddings, model, terms, pairs, prefixes, output;
  double threshold = 0.0;
  unsigned threads = 1;
  bool progress = false;
};

void cmd_build_kb(const BuildKbArgs& a) {
  if (a.terms.empty() == a.pairs.empty()) {
    throw UsageError("give exactly one of --terms or --pairs");
  }
  const LinearModel model = LinearModel::load(a.model);
  const EmbeddingTable emb = EmbeddingTable::load(a.embeddings);
  const CandidateSource source = a.terms.empty() ? CandidateSource::from_pair_file(a.pairs)
                                                 : CandidateSource::from_term_file(a.terms);
  ScoreStats stats;
  const SynonymKB kb = score_stream(source, emb, model, make_rules(a.prefixes), a.threshold,
                                    a.threads, &stats, a.progress);
  kb.save(a.output);
  std::fprintf(stderr,
               "scored %llu pairs in %.2fs (%.0f pairs/s), kept %llu, dropped %llu terms / "
               "%llu pairs\n",
               static_cast<unsigned long long>(stats.pairs_scored), stats.seconds,
               stats.pairs_per_sec, static_cast<unsigned long long>(stats.kept),
               static_cast<unsigned long long>(stats.terms_dropped),
               static_cast<unsigned long long>(stats.pairs_dropped));
}

struct KbRecallArgs {
  std::string kb, data, pairs, split = "holdout";
};

void cmd_kb_recall(const KbRecallArgs& a) {
  if (a.data.empty() == a.pairs.empty()) {
    throw UsageError("give exactly one of --data or --pairs");
  }
  const SynonymKB kb = SynonymKB::load(a.kb);
  std::vector<std::pair<std::string, std::string>> heldout;
  if (!a.data.empty()) {
    const PairDataset ds = PairDataset::load(a.data);
    const Split split = split_from_name(a.split);
    for (const PairRecord& r : ds.records) {
      if (r.split == split && r.label > 0) heldout.emplace_back(r.a, r.b);
    }
  } else {
    std::ifstream in(a.pairs);
    if (!in) throw DataError("cannot open " + a.pairs);
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const std::vector<std::string> fields = split_tabs(line);
      if (fields.size() < 2) {
        throw DataError(a.pairs + ":" + std::to_string(line_no) + ": expected 'a TAB b'");
      }
      heldout.emplace_back(fields[0], fields[1]);
    }
  }
  const double recall = recall_against(kb, heldout);
  std::printf("recall %.6f (%zu held-out pairs, %zu kb entries)\n", recall, heldout.size(),
              kb.entries.size());
  std::printf("RECALL\trecall=%.6f\theldout=%zu\tkb=%zu\n", recall, heldout.size(),
              kb.entries.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synonym extraction toolkit: embeddings, pair features, classifier, KB"};
  app.require_subcommand(1);

  // train-embeddings
  TrainEmbeddingsArgs te;
  std::string te_arch = "cbow", te_loss = "hs";
  CLI::App* te_cmd = app.add_subcommand("train-embeddings", "train term embeddings on a corpus");
  te_cmd->set_config("--config");
  te_cmd->add_option("--corpus", te.corpus, "training corpus, one sentence per line")->required();
  te_cmd->add_option("--output", te.output, "embedding file to write")->required();
  te_cmd->add_option("--lexicon", te.lexicon, "multi-word terms to fuse into single tokens");
  te_cmd->add_option("--vocab", te.vocab_in, "load a saved vocabulary instead of counting");
  te_cmd->add_option("--save-vocab", te.vocab_out, "write the vocabulary used");
  te_cmd->add_option("--labels", te.labels, "term label file for supervised mode");
  te_cmd->add_option("--min-count", te.min_count, "drop terms seen fewer times")->capture_default_str();
  te_cmd->add_option("--dim", te.config.dim, "embedding dimensionality")->capture_default_str();
  te_cmd->add_option("--window", te.config.window, "max context half-width")->capture_default_str();
  te_cmd->add_option("--negative", te.config.negative, "negative samples per output")->capture_default_str();
  te_cmd->add_option("--sample", te.config.sample_rate, "subsampling rate, <=0 disables")->capture_default_str();
  te_cmd->add_option("--lr", te.config.initial_lr, "initial learning rate")->capture_default_str();
  te_cmd->add_option("--epochs", te.config.epochs, "passes over the corpus")->capture_default_str();
  te_cmd->add_option("--arch", te_arch, "cbow or skip")->capture_default_str();
  te_cmd->add_option("--loss", te_loss, "hs or neg")->capture_default_str();
  te_cmd->add_flag("--supervised", te.config.supervised, "train label output units too");
  te_cmd->add_option("--seed", te.config.seed, "rng seed")->capture_default_str();
  te_cmd->add_option("--threads", te.config.threads, "worker threads")->capture_default_str();
  te_cmd->add_option("--table-size", te.config.negative_table_size, "negative table slots")->capture_default_str();
  te_cmd->add_flag("--exact-sigmoid", te.config.exact_sigmoid, "skip the sigmoid lookup table");
  te_cmd->add_flag("--binary", te.binary, "write embeddings in binary format");
  te_cmd->add_flag("--verbose", te.config.verbose, "progress lines to stderr");
  te_cmd->callback([&] {
    te.config.arch = parse_arch(te_arch);
    te.config.loss = parse_loss(te_loss);
    cmd_train_embeddings(te);
  });

  // build-vocab
  BuildVocabArgs bv;
  CLI::App* bv_cmd = app.add_subcommand("build-vocab", "count corpus terms into a vocabulary");
  bv_cmd->set_config("--config");
  bv_cmd->add_option("--corpus", bv.corpus, "corpus, one sentence per line")->required();
  bv_cmd->add_option("--output", bv.output, "vocabulary file to write")->required();
  bv_cmd->add_option("--lexicon", bv.lexicon, "multi-word terms to fuse into single tokens");
  bv_cmd->add_option("--min-count", bv.min_count, "drop terms seen fewer times")->capture_default_str();
  bv_cmd->callback([&] { cmd_build_vocab(bv); });

  // gen-data
  GenDataArgs gd;
  CLI::App* gd_cmd =
      app.add_subcommand("gen-data", "build a labeled pair dataset from relation records");
  gd_cmd->set_config("--config");
  gd_cmd->add_option("--relations", gd.relations, "relation file: a TAB b TAB category TAB attribute")
      ->required();
  gd_cmd->add_option("--names", gd.names, "name map: concept TAB preferred name")->required();
  gd_cmd->add_option("--vocab", gd.vocab, "vocabulary file")->required();
  gd_cmd->add_option("--output", gd.output, "pair dataset to write")->required();
  gd_cmd->add_option("--negatives", gd.negatives, "absolute negative count (0: use ratio)")->capture_default_str();
  gd_cmd->add_option("--negative-ratio", gd.negative_ratio, "negatives per positive")->capture_default_str();
  gd_cmd->add_option("--min-occurrences", gd.min_occurrences,
                     "negative terms must occur this often")->capture_default_str();
  gd_cmd->add_option("--split", gd.split, "train,test,holdout fractions")->capture_default_str();
  gd_cmd->add_option("--seed", gd.seed, "rng seed")->capture_default_str();
  gd_cmd->callback([&] { cmd_gen_data(gd); });

  // train-classifier
  TrainClassifierArgs tc;
  CLI::App* tc_cmd =
      app.add_subcommand("train-classifier", "fit the pair classifier on a dataset's train split");
  tc_cmd->set_config("--config");
  tc_cmd->add_option("--data", tc.data, "pair dataset file")->required();
  tc_cmd->add_option("--embeddings", tc.embeddings, "embedding file")->required();
  tc_cmd->add_option("--output", tc.output, "model file to write")->required();
  tc_cmd->add_option("--features", tc.features, "feature groups")->capture_default_str();
  tc_cmd->add_option("--prefixes", tc.prefixes, "antonym prefix list");
  tc_cmd->add_option("--pos-weight", tc.opts.positive_weight, "positive class weight")->capture_default_str();
  tc_cmd->add_option("--reg", tc.opts.reg_strength, "L2 strength")->capture_default_str();
  tc_cmd->add_option("--epochs", tc.opts.epochs, "training passes")->capture_default_str();
  tc_cmd->add_option("--lr", tc.opts.initial_lr, "initial step size")->capture_default_str();
  tc_cmd->add_option("--seed", tc.opts.seed, "shuffle seed")->capture_default_str();
  tc_cmd->add_flag("--full-batch", tc.opts.full_batch, "batch gradient descent instead of SGD");
  tc_cmd->add_flag("--binary", tc.binary, "write weights in binary format");
  tc_cmd->callback([&] { cmd_train_classifier(tc); });

  // evaluate
  EvaluateArgs ev;
  CLI::App* ev_cmd = app.add_subcommand("evaluate", "score a dataset split with a trained model");
  ev_cmd->set_config("--config");
  ev_cmd->add_option("--data", ev.data, "pair dataset file")->required();
  ev_cmd->add_option("--embeddings", ev.embeddings, "embedding file")->required();
  ev_cmd->add_option("--model", ev.model, "model file")->required();
  ev_cmd->add_option("--split", ev.split, "train, test or holdout")->capture_default_str();
  ev_cmd->add_option("--prefixes", ev.prefixes, "antonym prefix list");
  ev_cmd->callback([&] { cmd_evaluate(ev); });

  // build-kb
  BuildKbArgs bk;
  CLI::App* bk_cmd = app.add_subcommand("build-kb", "score candidate pairs into a synonym KB");
  bk_cmd->set_config("--config");
  bk_cmd->add_option("--embeddings", bk.embeddings, "embedding file")->required();
  bk_cmd->add_option("--model", bk.model, "model file")->required();
  bk_cmd->add_option("--output", bk.output, "KB file to write")->required();
  bk_cmd->add_option("--terms", bk.terms, "term list; all unordered pairs are scored");
  bk_cmd->add_option("--pairs", bk.pairs, "explicit pair file: a TAB b");
  bk_cmd->add_option("--threshold", bk.threshold, "keep pairs scoring above this")->capture_default_str();
  bk_cmd->add_option("--threads", bk.threads, "scoring threads")->capture_default_str();
  bk_cmd->add_option("--prefixes", bk.prefixes, "antonym prefix list");
  bk_cmd->add_flag("--progress", bk.progress, "progress lines to stderr");
  bk_cmd->callback([&] { cmd_build_kb(bk); });

  // kb-recall
  KbRecallArgs kr;
  CLI::App* kr_cmd = app.add_subcommand("kb-recall", "held-out recall of a KB file");
  kr_cmd->set_config("--config");
  kr_cmd->add_option("--kb", kr.kb, "KB file")->required();
  kr_cmd->add_option("--data", kr.data, "pair dataset; positives of --split are the reference");
  kr_cmd->add_option("--pairs", kr.pairs, "explicit reference pair file: a TAB b");
  kr_cmd->add_option("--split", kr.split, "dataset split to use")->capture_default_str();
  kr_cmd->callback([&] { cmd_kb_recall(kr); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
