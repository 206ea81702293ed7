#include "synkb/dataset.hpp"

#include <cmath>
#include <set>

#include "doctest.h"
#include "support/temp.hpp"

using namespace synkb;
using synkb::testsupport::TempDir;
using synkb::testsupport::write_file;

namespace {

Vocabulary vocab_of(const std::vector<std::pair<std::string, std::uint64_t>>& entries) {
  Vocabulary v;
  for (const auto& [term, count] : entries) {
    v.ids.emplace(term, static_cast<std::uint32_t>(v.terms.size()));
    v.terms.push_back(term);
    v.counts.push_back(count);
    v.total_tokens += count;
  }
  return v;
}

}  // namespace

TEST_CASE("the synonym filter whitelists fifteen relation kinds") {
  const auto filter = RelationFilter::synonym_defaults();
  CHECK(filter.size() == 15);
  const std::vector<std::pair<std::string, std::string>> expected{
      {"RO", "has_active_ingredient"},
      {"RO", "has_ingredient"},
      {"RO", "has_product_component"},
      {"RO", "has_tradename"},
      {"RO", "refers_to"},
      {"RQ", "has_alias"},
      {"RQ", "replaces"},
      {"SY", ""},
      {"SY", "expanded_form_of"},
      {"SY", "has_expanded_form"},
      {"SY", "has_multi_level_category"},
      {"SY", "has_print_name"},
      {"SY", "has_single_level_category"},
      {"SY", "has_tradename"},
      {"SY", "same_as"},
  };
  CHECK(filter.entries() == expected);
  CHECK(filter.keep("SY", "same_as"));
  CHECK(filter.keep("SY", ""));
  CHECK_FALSE(filter.keep("RO", "location_of"));
  CHECK_FALSE(filter.keep("CHD", "isa"));
  CHECK_FALSE(filter.keep("sy", "same_as"));  // categories are case-sensitive
}

TEST_CASE("relation loading filters and counts") {
  TempDir dir("relations");
  const auto path = write_file(dir.file("r.tsv"),
                               "C1\tC2\tSY\tsame_as\n"
                               "C3\tC4\tRO\tlocation_of\n"
                               "C5\tC6\tSY\t\n"
                               "C5\tC6\tSY\n"  // 3 fields = empty attribute
                               "\n"
                               "C7\tC8\tRQ\thas_alias\n");
  const auto load = load_relations(path, RelationFilter::synonym_defaults());
  CHECK(load.total == 5);
  CHECK(load.dropped == 1);
  REQUIRE(load.kept.size() == 4);
  CHECK(load.kept[0].concept_a == "C1");
  CHECK(load.kept[1].attribute == "");
  CHECK(load.kept[3].category == "RQ");
}

TEST_CASE("malformed relation lines fail with their line number") {
  TempDir dir("relations-bad");
  const auto two_fields = write_file(dir.file("two.tsv"), "C1\tC2\tSY\tx\nC3\tC4\n");
  try {
    load_relations(two_fields, RelationFilter::synonym_defaults());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  const auto empty_field = write_file(dir.file("empty.tsv"), "\tC2\tSY\tx\n");
  CHECK_THROWS_AS(load_relations(empty_field, RelationFilter::synonym_defaults()),
                  DataError);
  CHECK_THROWS_AS(load_relations(dir.file("absent.tsv"), RelationFilter::synonym_defaults()),
                  DataError);
}

TEST_CASE("name maps keep the first occurrence") {
  TempDir dir("names");
  const auto path = write_file(dir.file("n.tsv"),
                               "C1\tAspirin\nC2\tHeart Attack\nC1\tshadowed\n");
  const auto map = load_name_map(path);
  CHECK(map.size() == 2);
  CHECK(map.at("C1") == "Aspirin");
  CHECK(map.at("C2") == "Heart Attack");
  CHECK_THROWS_AS(load_name_map(write_file(dir.file("bad.tsv"), "C1\n")), DataError);
}

TEST_CASE("pair keys canonicalize order and case") {
  CHECK(pair_key_of_surfaces("Heart Attack", "aspirin") ==
        pair_key_of_surfaces("aspirin", "heart attack"));
  CHECK(pair_key("a", "b") != pair_key("b", "a"));  // raw key is directional
  CHECK(pair_key_of_surfaces("b term", "a term") == "a_term\tb_term");
}

TEST_CASE("positive resolution drops the right records") {
  const auto vocab = vocab_of({{"aspirin", 10}, {"acetylsalicylic_acid", 5},
                               {"heart_attack", 8}, {"mi", 4}});
  const std::unordered_map<std::string, std::string> names{
      {"C1", "Aspirin"},
      {"C2", "acetylsalicylic acid"},
      {"C3", "Heart Attack"},
      {"C4", "MI"},
      {"C5", "unseen term"},
      {"C6", "ASPIRIN"},
  };
  const std::vector<RelationRecord> records{
      {"C1", "C2", "SY", "same_as"},   // resolves
      {"C2", "C1", "SY", "same_as"},   // duplicate after canonicalization
      {"C3", "C4", "RQ", "has_alias"}, // resolves
      {"C1", "C9", "SY", "same_as"},   // C9 has no name
      {"C1", "C5", "SY", "same_as"},   // "unseen term" is not in the vocabulary
      {"C1", "C6", "SY", "same_as"},   // same token after folding: self pair
  };
  const auto resolved = resolve_positives(records, names, vocab);
  REQUIRE(resolved.pairs.size() == 2);
  CHECK(resolved.stats.duplicates == 1);
  CHECK(resolved.stats.missing_name == 1);
  CHECK(resolved.stats.out_of_vocab == 1);
  CHECK(resolved.stats.self_pairs == 1);
  // canonical order: token(acetylsalicylic acid) < token(Aspirin)
  CHECK(resolved.pairs[0].a == "acetylsalicylic acid");
  CHECK(resolved.pairs[0].b == "Aspirin");
  CHECK(resolved.keys.count("acetylsalicylic_acid\taspirin") == 1);
  CHECK(resolved.keys.count("heart_attack\tmi") == 1);
}

TEST_CASE("negative pairs respect the occurrence floor and exclusions") {
  const auto vocab = vocab_of({{"a", 9}, {"b", 5}, {"c", 3}, {"d", 2}, {"rare", 1}});
  std::unordered_set<std::string> positives{pair_key("a", "b")};
  Rng rng(31);
  const auto negatives = generate_negatives(vocab, 4, 2, positives, rng);
  REQUIRE(negatives.size() == 4);
  std::set<std::string> seen;
  for (const auto& p : negatives) {
    CHECK(p.a != p.b);
    for (const std::string& t : {p.a, p.b}) {
      const auto id = vocab.id_of(t);
      REQUIRE(id != Vocabulary::npos);
      CHECK(vocab.counts[id] >= 2);
      CHECK(t != "rare");
    }
    const auto key = pair_key_of_surfaces(p.a, p.b);
    CHECK(positives.count(key) == 0);
    CHECK(seen.insert(key).second);  // no repeats
  }
  // 4 eligible terms -> C(4,2) = 6 pairs, minus the excluded positive = 5.
  Rng rng2(31);
  CHECK(generate_negatives(vocab, 5, 2, positives, rng2).size() == 5);
  Rng rng3(31);
  CHECK_THROWS_AS(generate_negatives(vocab, 6, 2, positives, rng3), DataError);
}

TEST_CASE("exhausting every eligible pair works") {
  const auto vocab = vocab_of({{"a", 2}, {"b", 2}, {"c", 2}, {"d", 1}});
  Rng rng(5);
  const auto all = generate_negatives(vocab, 3, 2, {}, rng);
  std::set<std::string> keys;
  for (const auto& p : all) keys.insert(pair_key_of_surfaces(p.a, p.b));
  CHECK(keys == std::set<std::string>{"a\tb", "a\tc", "b\tc"});
}

TEST_CASE("negative generation restores spaces in multiword tokens") {
  const auto vocab = vocab_of({{"heart_attack", 4}, {"aspirin", 4}});
  Rng rng(2);
  const auto negatives = generate_negatives(vocab, 1, 2, {}, rng);
  REQUIRE(negatives.size() == 1);
  CHECK(negatives[0].a == "aspirin");
  CHECK(negatives[0].b == "heart attack");
}

TEST_CASE("negatives are reproducible by seed") {
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  for (int i = 0; i < 50; ++i) entries.push_back({"t" + std::to_string(i), 5});
  const auto vocab = vocab_of(entries);
  Rng a(77), b(77), c(78);
  const auto first = generate_negatives(vocab, 30, 2, {}, a);
  const auto second = generate_negatives(vocab, 30, 2, {}, b);
  const auto third = generate_negatives(vocab, 30, 2, {}, c);
  bool same = true, differs = false;
  for (std::size_t i = 0; i < 30; ++i) {
    same = same && first[i].a == second[i].a && first[i].b == second[i].b;
    differs = differs || first[i].a != third[i].a || first[i].b != third[i].b;
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("count zero asks for nothing") {
  const auto vocab = vocab_of({{"a", 2}, {"b", 2}});
  Rng rng(1);
  CHECK(generate_negatives(vocab, 0, 2, {}, rng).empty());
}

TEST_CASE("ten records split 6/2/2") {
  std::vector<TermPair> positives;
  for (int i = 0; i < 10; ++i) {
    positives.push_back({"p" + std::to_string(i), "q" + std::to_string(i)});
  }
  const auto ds = make_dataset(positives, {}, SplitRatios{}, 3);
  CHECK(ds.records.size() == 10);
  CHECK(ds.count(Split::kTrain) == 6);
  CHECK(ds.count(Split::kTest) == 2);
  CHECK(ds.count(Split::kHoldout) == 2);
  CHECK(ds.count(Split::kTrain, 1) == 6);
  CHECK(ds.count(Split::kTrain, -1) == 0);
}

TEST_CASE("splits are stratified and leak-free at scale") {
  std::vector<TermPair> positives, negatives;
  for (int i = 0; i < 200; ++i) {
    positives.push_back({"p" + std::to_string(i), "pp" + std::to_string(i)});
  }
  for (int i = 0; i < 40'000; ++i) {
    negatives.push_back({"n" + std::to_string(i), "nn" + std::to_string(i)});
  }
  const auto ds = make_dataset(positives, negatives, SplitRatios{}, 9);

  const double global = 200.0 / 40'200.0;
  for (Split s : {Split::kTrain, Split::kTest, Split::kHoldout}) {
    const double pos = static_cast<double>(ds.count(s, 1));
    const double neg = static_cast<double>(ds.count(s, -1));
    CHECK(std::fabs(pos / (pos + neg) - global) <= 0.001);
  }
  CHECK(ds.count(Split::kTrain, 1) == 120);
  CHECK(ds.count(Split::kTest, 1) == 40);
  CHECK(ds.count(Split::kHoldout, 1) == 40);

  std::set<std::string> train_keys, other_keys;
  for (const auto& r : ds.records) {
    (r.split == Split::kTrain ? train_keys : other_keys)
        .insert(pair_key_of_surfaces(r.a, r.b));
  }
  for (const auto& k : train_keys) CHECK(other_keys.count(k) == 0);
  CHECK(train_keys.size() + other_keys.size() == 40'200);
}

TEST_CASE("dataset assembly is seed deterministic") {
  std::vector<TermPair> positives, negatives;
  for (int i = 0; i < 20; ++i) positives.push_back({"p" + std::to_string(i), "x"});
  for (int i = 0; i < 100; ++i) negatives.push_back({"n" + std::to_string(i), "y"});
  const auto a = make_dataset(positives, negatives, SplitRatios{}, 5);
  const auto b = make_dataset(positives, negatives, SplitRatios{}, 5);
  const auto c = make_dataset(positives, negatives, SplitRatios{}, 6);
  REQUIRE(a.records.size() == b.records.size());
  bool same = true;
  bool differs = false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    same = same && a.records[i].a == b.records[i].a &&
           a.records[i].split == b.records[i].split;
    differs = differs || a.records[i].a != c.records[i].a;
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("bad ratios are rejected") {
  const std::vector<TermPair> pairs{{"a", "b"}, {"c", "d"}};
  CHECK_THROWS_AS(make_dataset(pairs, {}, SplitRatios{0.5, 0.2, 0.2}, 1), UsageError);
  CHECK_THROWS_AS(make_dataset(pairs, {}, SplitRatios{1.2, -0.1, -0.1}, 1), UsageError);
}

TEST_CASE("split names round-trip") {
  for (Split s : {Split::kTrain, Split::kTest, Split::kHoldout}) {
    CHECK(split_from_name(split_name(s)) == s);
  }
  CHECK_THROWS_AS(split_from_name("validation"), DataError);
}

TEST_CASE("pair datasets round-trip through disk") {
  PairDataset ds;
  ds.records.push_back({"blood in stool", "blood stool", 1, Split::kTrain});
  ds.records.push_back({"aspirin", "heart attack", -1, Split::kTest});
  ds.records.push_back({"x", "y", -1, Split::kHoldout});

  TempDir dir("dataset");
  const auto path = dir.file("d.tsv");
  ds.save(path);
  const auto loaded = PairDataset::load(path);
  REQUIRE(loaded.records.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(loaded.records[i].a == ds.records[i].a);
    CHECK(loaded.records[i].b == ds.records[i].b);
    CHECK(loaded.records[i].label == ds.records[i].label);
    CHECK(loaded.records[i].split == ds.records[i].split);
  }

  CHECK_THROWS_AS(
      PairDataset::load(write_file(dir.file("label.tsv"), "a\tb\t2\ttrain\n")),
      DataError);
  CHECK_THROWS_AS(
      PairDataset::load(write_file(dir.file("split.tsv"), "a\tb\t1\tdev\n")),
      DataError);
  CHECK_THROWS_AS(PairDataset::load(write_file(dir.file("short.tsv"), "a\tb\n")),
                  DataError);
  const auto plus = PairDataset::load(write_file(dir.file("plus.tsv"), "a\tb\t+1\ttrain\n"));
  CHECK(plus.records[0].label == 1);
}
