#include "synkb/embedding.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "support/temp.hpp"
#include "synkb/sigmoid.hpp"

using namespace synkb;
using synkb::testsupport::TempDir;

namespace {

Vocabulary toy_vocab(const std::vector<std::uint64_t>& counts) {
  Vocabulary v;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const std::string term = "w" + std::to_string(i);
    v.ids.emplace(term, static_cast<std::uint32_t>(i));
    v.terms.push_back(term);
    v.counts.push_back(counts[i]);
    v.total_tokens += counts[i];
  }
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  return dot(a, b) / (std::sqrt(dot(a, a)) * std::sqrt(dot(b, b)) + 1e-30);
}

}  // namespace

TEST_CASE("sigmoid matches reference values") {
  CHECK(Sigmoid::exact(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(Sigmoid::exact(2.0) == doctest::Approx(0.8807970779778823).epsilon(1e-9));
  CHECK(Sigmoid::exact(-2.0) == doctest::Approx(1.0 - 0.8807970779778823).epsilon(1e-9));
  for (double x : {-30.0, -3.3, -0.7, 0.0, 1.1, 4.2, 25.0}) {
    CHECK(Sigmoid::exact(-x) == doctest::Approx(1.0 - Sigmoid::exact(x)).epsilon(1e-12));
  }
  CHECK(Sigmoid::exact(800.0) == 1.0);
  CHECK(Sigmoid::exact(-800.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("table sigmoid stays within a bin of exact and clamps the tails") {
  Sigmoid table(false);
  const double bin = 2.0 * Sigmoid::kMaxExp / Sigmoid::kTableSize;
  for (double x = -5.99; x < 6.0; x += 0.0371) {
    CHECK(std::fabs(table(x) - Sigmoid::exact(x)) < 0.3 * bin);
  }
  CHECK(table(6.0) == table(100.0));
  CHECK(table(-6.0) == table(-100.0));
  CHECK(table(6.0) > 0.99);
  CHECK(table(-6.0) < 0.01);
}

TEST_CASE("log_sigmoid is finite and accurate far out") {
  CHECK(log_sigmoid(0.0) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  CHECK(log_sigmoid(-800.0) == doctest::Approx(-800.0).epsilon(1e-9));
  CHECK(std::isfinite(log_sigmoid(800.0)));
  CHECK(log_sigmoid(3.0) == doctest::Approx(std::log(Sigmoid::exact(3.0))).epsilon(1e-12));
}

TEST_CASE("indicator is set membership") {
  const std::vector<std::uint32_t> ys{2, 5, 9};
  CHECK(indicator(5, ys) == 1.0);
  CHECK(indicator(2, ys) == 1.0);
  CHECK(indicator(3, ys) == 0.0);
  CHECK(indicator(0, std::vector<std::uint32_t>{}) == 0.0);
}

TEST_CASE("pointwise update from zero parameters moves half a step") {
  const std::vector<double> theta(4, 0.0);
  const std::vector<double> context{1.0, -2.0, 0.5, 0.0};
  std::vector<double> delta_theta(4), accum(4, 0.0);
  pointwise_update(theta, context, 1.0, 0.1, Sigmoid(true), delta_theta, accum);
  // s(0) = 0.5, so delta = 0.1 * 0.5 * context.
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(delta_theta[i] == doctest::Approx(0.05 * context[i]).epsilon(1e-12));
    CHECK(accum[i] == 0.0);  // theta is zero
  }
}

TEST_CASE("pointwise update vanishes at saturation") {
  const std::vector<double> theta{20.0};
  const std::vector<double> context{1.0};
  std::vector<double> delta_theta(1), accum(1, 0.0);
  pointwise_update(theta, context, 1.0, 0.5, Sigmoid(true), delta_theta, accum);
  CHECK(std::fabs(delta_theta[0]) < 1e-8);
}

TEST_CASE("pointwise update is the exact gradient of its log term") {
  Rng rng(31);
  const std::size_t dim = 10;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> theta(dim), context(dim);
    for (auto& v : theta) v = rng.unit() - 0.5;
    for (auto& v : context) v = rng.unit() - 0.5;
    const double target = trial % 2 ? 1.0 : 0.0;
    const double lr = 0.37;

    std::vector<double> delta_theta(dim), accum(dim, 0.0);
    pointwise_update(theta, context, target, lr, Sigmoid(true), delta_theta, accum);

    const double h = 1e-5;
    for (std::size_t i = 0; i < dim; ++i) {
      auto term_at = [&](std::vector<double> th, std::vector<double> cx) {
        LogTermOutput out{th, target};
        return log_term(cx, std::span<const LogTermOutput>(&out, 1));
      };
      auto bump = [&](const std::vector<double>& v, std::size_t k, double eps) {
        auto copy = v;
        copy[k] += eps;
        return copy;
      };
      const double grad_theta =
          (term_at(bump(theta, i, h), context) - term_at(bump(theta, i, -h), context)) /
          (2 * h);
      const double grad_context =
          (term_at(theta, bump(context, i, h)) - term_at(theta, bump(context, i, -h))) /
          (2 * h);
      CHECK(delta_theta[i] == doctest::Approx(lr * grad_theta).epsilon(1e-4));
      CHECK(accum[i] == doctest::Approx(lr * grad_context).epsilon(1e-4));
    }
  }
}

TEST_CASE("cbow plans one mean context per token") {
  const auto vocab = toy_vocab({10, 9, 8, 7, 6});
  TrainingConfig cfg;
  cfg.dim = 4;
  cfg.window = 5;
  cfg.loss = Loss::kHierarchicalSoftmax;
  EmbeddingTrainer trainer(vocab, nullptr, cfg);

  const std::vector<std::uint32_t> sentence{0, 1, 2, 3, 4};
  Rng rng(1);
  TokenPlan plan;
  trainer.plan_token(sentence, 2, 2, rng, plan);
  REQUIRE(plan.count == 1);
  CHECK(plan.contexts[0].sources == std::vector<std::uint32_t>{0, 1, 3, 4});

  // Narrow window at the sentence edge.
  trainer.plan_token(sentence, 0, 1, rng, plan);
  REQUIRE(plan.count == 1);
  CHECK(plan.contexts[0].sources == std::vector<std::uint32_t>{1});

  // A one-token sentence has no context at all.
  const std::vector<std::uint32_t> lonely{3};
  trainer.plan_token(lonely, 0, 5, rng, plan);
  CHECK(plan.empty());
}

TEST_CASE("cbow hierarchical outputs mirror the huffman code") {
  const auto vocab = toy_vocab({10, 9, 8, 7});
  TrainingConfig cfg;
  cfg.dim = 4;
  cfg.loss = Loss::kHierarchicalSoftmax;
  EmbeddingTrainer trainer(vocab, nullptr, cfg);

  const std::vector<std::uint32_t> sentence{0, 1, 2};
  Rng rng(1);
  TokenPlan plan;
  trainer.plan_token(sentence, 1, 2, rng, plan);
  REQUIRE(plan.count == 1);
  const auto& code = trainer.tree()->words[1];
  REQUIRE(plan.contexts[0].outputs.size() == code.bits.size());
  for (std::size_t k = 0; k < code.bits.size(); ++k) {
    const OutputTouch& out = plan.contexts[0].outputs[k];
    CHECK(out.kind == OutputTouch::kTreeNode);
    CHECK(out.id == code.nodes[k]);
    CHECK(out.target == doctest::Approx(1.0 - code.bits[k]));
  }
}

TEST_CASE("negative sampling plans the target plus fresh negatives") {
  const auto vocab = toy_vocab({10, 9, 8, 7, 6, 5});
  TrainingConfig cfg;
  cfg.dim = 4;
  cfg.loss = Loss::kNegativeSampling;
  cfg.negative = 7;
  cfg.negative_table_size = 1000;
  EmbeddingTrainer trainer(vocab, nullptr, cfg);

  const std::vector<std::uint32_t> sentence{0, 1, 2};
  Rng rng(9);
  TokenPlan plan;
  trainer.plan_token(sentence, 1, 2, rng, plan);
  REQUIRE(plan.count == 1);
  const auto& outs = plan.contexts[0].outputs;
  REQUIRE(outs.size() == 8);
  CHECK(outs[0].id == 1);
  CHECK(outs[0].target == 1.0);
  for (std::size_t k = 1; k < outs.size(); ++k) {
    CHECK(outs[k].kind == OutputTouch::kWordOutput);
    CHECK(outs[k].target == 0.0);
    CHECK(outs[k].id != 1);  // never the positive
    CHECK(outs[k].id < vocab.size());
  }
}

TEST_CASE("skip-gram plans one single-source context per window position") {
  const auto vocab = toy_vocab({10, 9, 8, 7, 6});
  TrainingConfig cfg;
  cfg.dim = 4;
  cfg.arch = Arch::kSkipGram;
  cfg.loss = Loss::kHierarchicalSoftmax;
  EmbeddingTrainer trainer(vocab, nullptr, cfg);

  const std::vector<std::uint32_t> sentence{4, 1, 2, 3, 0};
  Rng rng(1);
  TokenPlan plan;
  trainer.plan_token(sentence, 2, 2, rng, plan);
  REQUIRE(plan.count == 4);
  const auto& code = trainer.tree()->words[2];  // outputs belong to the center
  std::vector<std::uint32_t> sources;
  for (std::size_t c = 0; c < plan.count; ++c) {
    REQUIRE(plan.contexts[c].sources.size() == 1);
    sources.push_back(plan.contexts[c].sources[0]);
    REQUIRE(plan.contexts[c].outputs.size() == code.bits.size());
    CHECK(plan.contexts[c].outputs[0].id == code.nodes[0]);
  }
  CHECK(sources == std::vector<std::uint32_t>{4, 1, 3, 0});
}

TEST_CASE("labels join every context plan of a labeled token") {
  const auto vocab = toy_vocab({10, 9, 8});
  TempDir dir("labels");
  const auto path = synkb::testsupport::write_file(
      dir.file("l.tsv"), "#label_count=6\nw1\t0,4\n");
  const auto labels = LabelAssignments::load(path, vocab);

  TrainingConfig cfg;
  cfg.dim = 4;
  cfg.loss = Loss::kHierarchicalSoftmax;
  cfg.supervised = true;
  cfg.arch = Arch::kSkipGram;
  EmbeddingTrainer trainer(vocab, &labels, cfg);

  const std::vector<std::uint32_t> sentence{0, 1, 2};
  Rng rng(1);
  TokenPlan plan;
  trainer.plan_token(sentence, 1, 2, rng, plan);  // center w1 is labeled
  REQUIRE(plan.count == 2);
  for (std::size_t c = 0; c < plan.count; ++c) {
    const auto& outs = plan.contexts[c].outputs;
    std::size_t label_units = 0;
    double positive_targets = 0;
    for (const OutputTouch& out : outs) {
      if (out.kind == OutputTouch::kLabelOutput) {
        ++label_units;
        positive_targets += out.target;
        CHECK(out.target == ((out.id == 0 || out.id == 4) ? 1.0 : 0.0));
      }
    }
    CHECK(label_units == 6);  // all units, not just the positives
    CHECK(positive_targets == 2.0);
  }

  trainer.plan_token(sentence, 0, 2, rng, plan);  // center w0 is unlabeled
  for (std::size_t c = 0; c < plan.count; ++c) {
    for (const OutputTouch& out : plan.contexts[c].outputs) {
      CHECK(out.kind != OutputTouch::kLabelOutput);
    }
  }
}

TEST_CASE("supervision off means no label outputs even with labels loaded") {
  const auto vocab = toy_vocab({10, 9, 8});
  TempDir dir("labels");
  const auto path = synkb::testsupport::write_file(
      dir.file("l.tsv"), "#label_count=6\nw1\t0\n");
  const auto labels = LabelAssignments::load(path, vocab);

  TrainingConfig cfg;
  cfg.dim = 4;
  cfg.loss = Loss::kHierarchicalSoftmax;
  cfg.supervised = false;
  EmbeddingTrainer trainer(vocab, &labels, cfg);
  const std::vector<std::uint32_t> sentence{0, 1, 2};
  Rng rng(1);
  TokenPlan plan;
  trainer.plan_token(sentence, 1, 2, rng, plan);
  for (std::size_t c = 0; c < plan.count; ++c) {
    for (const OutputTouch& out : plan.contexts[c].outputs) {
      CHECK(out.kind != OutputTouch::kLabelOutput);
    }
  }
}

TEST_CASE("a labeled cbow token costs exactly label_count extra unit evals") {
  const auto vocab = toy_vocab({10, 9, 8, 7});
  TempDir dir("labels");
  const auto path = synkb::testsupport::write_file(
      dir.file("l.tsv"), "#label_count=148\nw2\t3,77\n");
  const auto labels = LabelAssignments::load(path, vocab);

  TrainingConfig cfg;
  cfg.dim = 4;
  cfg.loss = Loss::kHierarchicalSoftmax;
  cfg.supervised = true;
  cfg.arch = Arch::kCbow;
  EmbeddingTrainer trainer(vocab, &labels, cfg);
  EmbeddingModel model = trainer.make_model();

  const std::vector<std::uint32_t> sentence{0, 1, 2, 3};
  Rng rng(1);
  TokenPlan plan;
  TrainWorkspace ws;

  UpdateCounters labeled;
  trainer.plan_token(sentence, 2, 2, rng, plan);
  trainer.apply_token(model, plan, 0.025, ws, &labeled);
  CHECK(labeled.label_unit_evals == 148);
  CHECK(labeled.word_unit_evals == trainer.tree()->words[2].bits.size());

  UpdateCounters unlabeled;
  trainer.plan_token(sentence, 1, 2, rng, plan);
  trainer.apply_token(model, plan, 0.025, ws, &unlabeled);
  CHECK(unlabeled.label_unit_evals == 0);
}

TEST_CASE("one context application is one exact gradient step") {
  const auto vocab = toy_vocab({10, 9, 8, 7, 6, 5});
  TrainingConfig cfg;
  cfg.dim = 6;
  cfg.loss = Loss::kHierarchicalSoftmax;
  cfg.exact_sigmoid = true;
  cfg.seed = 4;
  EmbeddingTrainer trainer(vocab, nullptr, cfg);
  EmbeddingModel model = trainer.make_model();

  Rng rng(2);
  for (double& v : model.tree_theta.data) v = rng.unit() - 0.5;
  for (double& v : model.input.data) v = rng.unit() - 0.5;

  const std::vector<std::uint32_t> sentence{0, 1, 2, 3, 4};
  TokenPlan plan;
  trainer.plan_token(sentence, 2, 2, rng, plan);
  REQUIRE(plan.count == 1);
  const ContextPlan& ctx = plan.contexts[0];

  // Objective value before, as a function of the raw parameters.
  auto objective_at = [&](const EmbeddingModel& m) {
    std::vector<double> context(cfg.dim, 0.0);
    for (std::uint32_t s : ctx.sources) {
      for (std::size_t d = 0; d < cfg.dim; ++d) context[d] += m.input.row(s)[d];
    }
    for (double& v : context) v /= static_cast<double>(ctx.sources.size());
    std::vector<LogTermOutput> outs;
    for (const OutputTouch& out : ctx.outputs) {
      outs.push_back({{m.param_row(out.kind, out.id), cfg.dim}, out.target});
    }
    return log_term(context, outs);
  };

  // Numerical gradient with respect to every touched parameter.
  const double h = 1e-6, lr = 1e-3;
  EmbeddingModel expected = model;
  auto grad_into = [&](Matrix& mat, const Matrix& base, std::size_t r, std::size_t d) {
    EmbeddingModel probe = model;
    Matrix& pm = (&mat == &expected.input) ? probe.input : probe.tree_theta;
    pm.row(r)[d] = base.row(r)[d] + h;
    const double up = objective_at(probe);
    pm.row(r)[d] = base.row(r)[d] - h;
    const double down = objective_at(probe);
    mat.row(r)[d] = base.row(r)[d] + lr * (up - down) / (2 * h);
  };
  for (std::uint32_t s : ctx.sources) {
    for (std::size_t d = 0; d < cfg.dim; ++d) grad_into(expected.input, model.input, s, d);
  }
  for (const OutputTouch& out : ctx.outputs) {
    for (std::size_t d = 0; d < cfg.dim; ++d) {
      grad_into(expected.tree_theta, model.tree_theta, out.id, d);
    }
  }

  EmbeddingModel stepped = model;
  TrainWorkspace ws;
  TokenPlan single;
  single.add() = ctx;
  trainer.apply_token(stepped, single, lr, ws);

  for (std::size_t i = 0; i < stepped.input.data.size(); ++i) {
    CHECK(stepped.input.data[i] ==
          doctest::Approx(expected.input.data[i]).epsilon(1e-4));
  }
  for (std::size_t i = 0; i < stepped.tree_theta.data.size(); ++i) {
    CHECK(stepped.tree_theta.data[i] ==
          doctest::Approx(expected.tree_theta.data[i]).epsilon(1e-4));
  }
}

TEST_CASE("fresh models start small and seeded") {
  const auto vocab = toy_vocab({5, 4, 3});
  TrainingConfig cfg;
  cfg.dim = 8;
  cfg.seed = 21;
  EmbeddingTrainer trainer(vocab, nullptr, cfg);
  const auto a = trainer.make_model();
  const auto b = trainer.make_model();
  CHECK(a.input.data == b.input.data);
  for (double v : a.input.data) CHECK(std::fabs(v) <= 0.5 / 8 + 1e-12);
  for (double v : a.tree_theta.data) CHECK(v == 0.0);

  TrainingConfig other = cfg;
  other.seed = 22;
  EmbeddingTrainer trainer2(vocab, nullptr, other);
  CHECK(trainer2.make_model().input.data != a.input.data);
}

TEST_CASE("training rejects impossible setups") {
  const auto vocab = toy_vocab({5, 4});
  TrainingConfig cfg;
  cfg.dim = 4;
  CHECK_THROWS_AS(EmbeddingTrainer(vocab, nullptr,
                                   [] {
                                     TrainingConfig c;
                                     c.dim = 0;
                                     return c;
                                   }()),
                  UsageError);
  {
    TrainingConfig sup = cfg;
    sup.supervised = true;
    CHECK_THROWS_AS(EmbeddingTrainer(vocab, nullptr, sup), UsageError);
  }
  {
    Vocabulary empty;
    CHECK_THROWS_AS(EmbeddingTrainer(empty, nullptr, cfg), DataError);
  }
  {
    EmbeddingTrainer trainer(vocab, nullptr, cfg);
    const auto oov = memory_corpus_factory({{"nothing", "matches"}});
    CHECK_THROWS_AS(trainer.train(oov), DataError);
  }
}

TEST_CASE("single-thread training is reproducible and stays finite") {
  std::vector<std::vector<std::string>> sentences;
  Rng gen(5);
  for (int s = 0; s < 300; ++s) {
    std::vector<std::string> sent;
    for (int i = 0; i < 6; ++i) sent.push_back("w" + std::to_string(gen.below(20)));
    sentences.push_back(std::move(sent));
  }
  const auto factory = memory_corpus_factory(sentences);
  const auto vocab = build_vocabulary(factory, 1);

  TrainingConfig cfg;
  cfg.dim = 12;
  cfg.window = 3;
  cfg.epochs = 2;
  cfg.initial_lr = 0.05;
  cfg.sample_rate = 1e-3;
  cfg.seed = 17;
  for (Loss loss : {Loss::kHierarchicalSoftmax, Loss::kNegativeSampling}) {
    for (Arch arch : {Arch::kCbow, Arch::kSkipGram}) {
      cfg.loss = loss;
      cfg.arch = arch;
      cfg.negative = 5;
      cfg.negative_table_size = 1000;
      EmbeddingTrainer trainer(vocab, nullptr, cfg);
      const auto m1 = trainer.train(factory);
      const auto m2 = EmbeddingTrainer(vocab, nullptr, cfg).train(factory);
      CHECK(m1.input.data == m2.input.data);
      for (double v : m1.input.data) {
        CHECK(std::isfinite(v));
        CHECK(std::fabs(v) < 100.0);
      }
      CHECK(trainer.last_counters().tokens_seen > 0);
      CHECK(trainer.last_counters().contexts > 0);
    }
  }
}

TEST_CASE("subsampling trains fewer tokens than it sees") {
  std::vector<std::vector<std::string>> sentences;
  for (int s = 0; s < 200; ++s) {
    sentences.push_back({"the", "the", "the", "rare" + std::to_string(s % 17), "the"});
  }
  const auto factory = memory_corpus_factory(sentences);
  const auto vocab = build_vocabulary(factory, 1);
  TrainingConfig cfg;
  cfg.dim = 6;
  cfg.sample_rate = 1e-3;
  cfg.seed = 3;
  EmbeddingTrainer trainer(vocab, nullptr, cfg);
  trainer.train(factory);
  const auto& c = trainer.last_counters();
  CHECK(c.tokens_seen == 1000);
  CHECK(c.tokens_trained < c.tokens_seen / 2);  // "the" is heavily dropped
  CHECK(c.tokens_trained > 0);
}

TEST_CASE("interchangeable tokens end up with near-identical embeddings") {
  // Two tokens that appear in identical context distributions, plus decoys
  // with their own contexts. The pair's cosine should beat every
  // decoy-to-other cosine.
  Rng gen(8);
  std::vector<std::vector<std::string>> sentences;
  for (int s = 0; s < 4000; ++s) {
    const int topic = static_cast<int>(gen.below(10));
    std::vector<std::string> sent;
    if (topic == 0) {
      sent.push_back(gen.unit() < 0.5 ? "twin_a" : "twin_b");
    } else {
      sent.push_back("solo" + std::to_string(topic));
    }
    for (int k = 0; k < 4; ++k) {
      sent.push_back("ctx" + std::to_string(topic) + "_" + std::to_string(gen.below(5)));
    }
    sentences.push_back(std::move(sent));
  }
  const auto factory = memory_corpus_factory(sentences);
  const auto vocab = build_vocabulary(factory, 1);

  TrainingConfig cfg;
  cfg.dim = 16;
  cfg.window = 4;
  cfg.sample_rate = 0;
  cfg.epochs = 6;
  cfg.seed = 2;
  cfg.loss = Loss::kHierarchicalSoftmax;
  EmbeddingTrainer trainer(vocab, nullptr, cfg);
  const auto model = trainer.train(factory);

  const auto vec = [&](const std::string& t) {
    return model.input.row_span(vocab.id_of(t));
  };
  const double twins = cosine(vec("twin_a"), vec("twin_b"));
  for (int i = 1; i < 10; ++i) {
    for (int j = i + 1; j < 10; ++j) {
      CHECK(twins > cosine(vec("solo" + std::to_string(i)),
                           vec("solo" + std::to_string(j))));
    }
  }
  CHECK(twins > 0.5);
}

TEST_CASE("label supervision pulls same-cluster terms together") {
  // Label updates land on the labeled center's context words, so the terms
  // must share windows with same-cluster terms for supervision to reach
  // them; the pads keep the windows noisy. The corpus is kept small enough
  // that one plain epoch leaves the clusters under-trained: with more data
  // the co-occurrence signal alone saturates the margin and the supervised
  // gain disappears into the ceiling.
  Rng gen(12);
  std::vector<std::vector<std::string>> sentences;
  const int clusters = 4, per_cluster = 6;
  for (int s = 0; s < 1500; ++s) {
    const int c = static_cast<int>(gen.below(clusters));
    const int t = static_cast<int>(gen.below(per_cluster));
    const int u = static_cast<int>(gen.below(per_cluster));
    sentences.push_back({"term" + std::to_string(c) + "_" + std::to_string(t),
                         "term" + std::to_string(c) + "_" + std::to_string(u),
                         "pad" + std::to_string(gen.below(30)),
                         "pad" + std::to_string(gen.below(30))});
  }
  const auto factory = memory_corpus_factory(sentences);
  const auto vocab = build_vocabulary(factory, 1);

  TempDir dir("sup");
  std::string label_text = "#label_count=4\n";
  for (int c = 0; c < clusters; ++c) {
    for (int t = 0; t < per_cluster; ++t) {
      label_text += "term" + std::to_string(c) + "_" + std::to_string(t) + "\t" +
                    std::to_string(c) + "\n";
    }
  }
  const auto labels = LabelAssignments::load(
      synkb::testsupport::write_file(dir.file("l.tsv"), label_text), vocab);

  TrainingConfig cfg;
  cfg.dim = 16;
  cfg.window = 2;
  cfg.sample_rate = 0;
  cfg.epochs = 1;
  cfg.seed = 6;
  cfg.loss = Loss::kHierarchicalSoftmax;

  // Shared pads drag every vector toward one direction, so absolute cosines
  // run high for both models; the cluster structure shows up as the gap
  // between same-cluster and cross-cluster similarity.
  auto cluster_margin = [&](const EmbeddingModel& model) {
    double intra = 0.0, cross = 0.0;
    int intra_n = 0, cross_n = 0;
    const int total_terms = clusters * per_cluster;
    for (int u = 0; u < total_terms; ++u) {
      for (int v = u + 1; v < total_terms; ++v) {
        const auto a = vocab.id_of("term" + std::to_string(u / per_cluster) + "_" +
                                   std::to_string(u % per_cluster));
        const auto b = vocab.id_of("term" + std::to_string(v / per_cluster) + "_" +
                                   std::to_string(v % per_cluster));
        const double cs = cosine(model.input.row_span(a), model.input.row_span(b));
        if (u / per_cluster == v / per_cluster) {
          intra += cs;
          ++intra_n;
        } else {
          cross += cs;
          ++cross_n;
        }
      }
    }
    return intra / intra_n - cross / cross_n;
  };

  EmbeddingTrainer plain(vocab, nullptr, cfg);
  const double unsup = cluster_margin(plain.train(factory));

  cfg.supervised = true;
  EmbeddingTrainer supervised(vocab, &labels, cfg);
  const double sup = cluster_margin(supervised.train(factory));

  CHECK(sup > unsup + 0.1);
  CHECK(sup > 0.5);
}

TEST_CASE("embedding files round-trip through both formats") {
  const auto factory = memory_corpus_factory(
      {{"alpha", "beta", "gamma", "alpha"}, {"beta", "alpha", "delta"}});
  const auto vocab = build_vocabulary(factory, 1);
  TrainingConfig cfg;
  cfg.dim = 7;
  cfg.seed = 5;
  EmbeddingTrainer trainer(vocab, nullptr, cfg);
  const auto model = trainer.train(factory);

  TempDir dir("emb");
  const auto text_path = dir.file("e.txt");
  const auto bin_path = dir.file("e.bin");
  save_embeddings_text(model, vocab, text_path);
  save_embeddings_binary(model, vocab, bin_path);

  const auto text = EmbeddingTable::load(text_path);
  const auto bin = EmbeddingTable::load(bin_path);
  REQUIRE(text.size() == vocab.size());
  REQUIRE(bin.size() == vocab.size());
  CHECK(text.dim() == 7);

  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const double* original = model.input.row(i);
    const double* from_bin = bin.vector_of(vocab.terms[i]);
    const double* from_text = text.vector_of(vocab.terms[i]);
    REQUIRE(from_bin != nullptr);
    REQUIRE(from_text != nullptr);
    for (std::size_t d = 0; d < 7; ++d) {
      CHECK(from_bin[d] == original[d]);  // binary is exact
      CHECK(from_text[d] ==
            doctest::Approx(original[d]).epsilon(1e-5));  // 6 significant digits
    }
  }
  CHECK(bin.vector_of("nope") == nullptr);
}

TEST_CASE("embedding loader rejects inconsistent files") {
  TempDir dir("emb-bad");
  using synkb::testsupport::write_file;
  CHECK_THROWS_AS(
      EmbeddingTable::load(write_file(dir.file("rows.txt"), "3 2\na 1 2\nb 3 4\n")),
      DataError);
  CHECK_THROWS_AS(
      EmbeddingTable::load(write_file(dir.file("dim.txt"), "1 3\na 1 2\n")),
      DataError);
  CHECK_THROWS_AS(
      EmbeddingTable::load(write_file(dir.file("dup.txt"), "2 1\na 1\na 2\n")),
      DataError);
  CHECK_THROWS_AS(
      EmbeddingTable::load(write_file(dir.file("num.txt"), "1 1\na x\n")),
      DataError);
  CHECK_THROWS_AS(EmbeddingTable::load(write_file(dir.file("hdr.txt"), "what\n")),
                  DataError);
  CHECK_THROWS_AS(EmbeddingTable::load(dir.file("missing.bin")), DataError);
}
