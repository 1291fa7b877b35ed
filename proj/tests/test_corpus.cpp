#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "rrdee/corpus.hpp"
#include "rrdee/evaluation.hpp"
#include "test_support.hpp"

using namespace rrdee;
using testsup::make_doc;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& contents) {
    static int counter = 0;
    path = "test_corpus_tmp_" + std::to_string(counter++) + ".jsonl";
    std::ofstream out(path);
    out << contents;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

const char* kThreeDocs = R"({"doc_id":"d1","sentences":["A pledged X shares"],"events":[{"type":"EP","records":[{"role":"Pledger","argument":"A"}]}]}
{"doc_id":"d2","sentences":["B sold Y shares","to C"],"events":[{"type":"EU","records":[{"role":"Seller","argument":"B"},{"role":"Buyer","argument":"C"}]}]}
{"doc_id":"d3","sentences":["D pledged Z shares"],"events":[{"type":"EP","records":[{"role":"Pledger","argument":"D"}]}]}
)";

}  // namespace

TEST_CASE("vocabulary derives one B and one I tag per role plus O") {
  Vocabulary v({"EP", "ER"}, {"Pledger", "Pledgee"}, 8);
  CHECK(v.num_tags() == 5);
  CHECK(v.tags == std::vector<std::string>{"B-Pledger", "I-Pledger", "B-Pledgee",
                                           "I-Pledgee", "O"});
  CHECK(v.tag_id("O") == v.outside_tag());
  CHECK(v.role_of_tag(v.begin_tag(1)) == 1);
  CHECK(v.role_of_tag(v.outside_tag()) == -1);
  CHECK_THROWS_AS(Vocabulary({"EP"}, {"a"}, 0), DataError);
}

TEST_CASE("load_corpus induces a vocabulary from three documents") {
  TempFile f(kThreeDocs);
  LoadedCorpus corpus = load_corpus(f.path);
  CHECK(corpus.docs.size() == 3);
  CHECK(corpus.vocab.num_events() == 2);
  CHECK(corpus.vocab.num_roles() == 3);  // Buyer, Pledger, Seller
  CHECK(corpus.vocab.num_tags() == 2 * 3 + 1);
  // lexicographic orderings
  CHECK(corpus.vocab.events == std::vector<std::string>{"EP", "EU"});
  CHECK(corpus.vocab.roles == std::vector<std::string>{"Buyer", "Pledger", "Seller"});
  CHECK(corpus.vocab.max_sentences == 2);
}

TEST_CASE("load_corpus error paths") {
  SUBCASE("empty file without vocabulary") {
    TempFile f("");
    CHECK_THROWS_WITH_AS(load_corpus(f.path),
                         doctest::Contains("cannot induce vocabulary"), DataError);
  }
  SUBCASE("empty file with vocabulary gives an empty list") {
    TempFile f("");
    Vocabulary v({"EP"}, {"Pledger"}, 4);
    LoadOptions opts;
    opts.vocab = &v;
    LoadedCorpus corpus = load_corpus(f.path, opts);
    CHECK(corpus.docs.empty());
    CHECK(corpus.vocab.num_events() == 1);
  }
  SUBCASE("malformed line names the line number") {
    TempFile f("{\"doc_id\":\"a\",\"sentences\":[\"x\"]}\nnot json\n");
    CHECK_THROWS_WITH_AS(load_corpus(f.path), doctest::Contains("line 2"), DataError);
  }
  SUBCASE("duplicate doc_id") {
    TempFile f(
        "{\"doc_id\":\"a\",\"sentences\":[\"x\"]}\n"
        "{\"doc_id\":\"a\",\"sentences\":[\"y\"]}\n");
    CHECK_THROWS_WITH_AS(load_corpus(f.path), doctest::Contains("duplicate doc_id"),
                         DataError);
  }
  SUBCASE("unknown role against a supplied vocabulary") {
    TempFile f(kThreeDocs);
    Vocabulary v({"EP", "EU"}, {"Pledger"}, 4);
    LoadOptions opts;
    opts.vocab = &v;
    CHECK_THROWS_WITH_AS(load_corpus(f.path, opts), doctest::Contains("Seller"),
                         DataError);
  }
}

TEST_CASE("tokenizers") {
  CHECK(tokenize("A pledged  X", Tokenizer::kWhitespace) ==
        std::vector<std::string>{"A", "pledged", "X"});
  CHECK(tokenize("\xe8\xb4\xa8\xe6\x8a\xbc AB", Tokenizer::kCharacter) ==
        std::vector<std::string>{"\xe8\xb4\xa8", "\xe6\x8a\xbc", "A", "B"});
  CHECK(join_tokens({"a", "b"}, Tokenizer::kWhitespace) == "a b");
  CHECK(join_tokens({"\xe8\xb4\xa8", "\xe6\x8a\xbc"}, Tokenizer::kCharacter) ==
        "\xe8\xb4\xa8\xe6\x8a\xbc");
}

TEST_CASE("derive_bio_tags single-token match") {
  Vocabulary v({"EP"}, {"Pledger"}, 4);
  Document doc = make_doc("d", {"A pledged X shares"}, {{"EP", {{"Pledger", "A"}}}});
  auto derived = derive_bio_tags(doc, v, Tokenizer::kWhitespace);
  CHECK(derived.tags[0] == std::vector<int>{v.begin_tag(0), v.outside_tag(),
                                            v.outside_tag(), v.outside_tag()});
  CHECK(derived.unmatched_records == 0);
}

TEST_CASE("derive_bio_tags multi-token span") {
  Vocabulary v({"EP"}, {"r"}, 4);
  Document doc = make_doc("d", {"w0 w1 big corp w4"}, {{"EP", {{"r", "big corp"}}}});
  auto derived = derive_bio_tags(doc, v, Tokenizer::kWhitespace);
  const int O = v.outside_tag();
  CHECK(derived.tags[0] == std::vector<int>{O, O, v.begin_tag(0), v.inside_tag(0), O});
}

TEST_CASE("derive_bio_tags overlap resolution on a 10-token sentence") {
  // Candidates: "e f g" (tokens 4..6) and "g h" (tokens 6..7) overlap on
  // token 6. Longest-match-first places the triple and blocks the pair;
  // hand enumeration of the candidate spans agrees.
  Vocabulary v({"EP"}, {"ra", "rb"}, 4);
  Document doc = make_doc("d", {"a b c d e f g h i j"},
                          {{"EP", {{"rb", "g h"}, {"ra", "e f g"}}}});
  auto derived = derive_bio_tags(doc, v, Tokenizer::kWhitespace);
  const int O = v.outside_tag();
  std::vector<int> expect{O, O, O, O, v.begin_tag(0), v.inside_tag(0),
                          v.inside_tag(0), O, O, O};
  CHECK(derived.tags[0] == expect);

  SUBCASE("equal-length overlaps resolve leftmost-first") {
    Document doc2 = make_doc("d2", {"a b c d e f g h i j"},
                             {{"EP", {{"rb", "c d"}, {"ra", "d e"}}}});
    auto derived2 = derive_bio_tags(doc2, v, Tokenizer::kWhitespace);
    std::vector<int> expect2{O, O, v.begin_tag(1), v.inside_tag(1), O, O, O, O, O, O};
    CHECK(derived2.tags[0] == expect2);
  }
  SUBCASE("identical spans resolve by role order") {
    Document doc3 = make_doc("d3", {"a b c d e f g h i j"},
                             {{"EP", {{"rb", "c d"}, {"ra", "c d"}}}});
    auto derived3 = derive_bio_tags(doc3, v, Tokenizer::kWhitespace);
    std::vector<int> expect3{O, O, v.begin_tag(0), v.inside_tag(0), O, O, O, O, O, O};
    CHECK(derived3.tags[0] == expect3);
  }
}

TEST_CASE("derive_bio_tags collects warnings for unmatchable arguments") {
  Vocabulary v({"EP"}, {"r"}, 4);
  Document doc = make_doc("d", {"a b c"}, {{"EP", {{"r", "missing"}}}});
  auto derived = derive_bio_tags(doc, v, Tokenizer::kWhitespace);
  CHECK(derived.unmatched_records == 1);
  CHECK(derived.warnings.size() == 1);
  CHECK(derived.tags[0] == std::vector<int>(3, v.outside_tag()));
}

TEST_CASE("derive then span-decode recovers the matchable records") {
  SyntheticSpec spec = make_separable_spec(3, 4, 5);
  auto docs = generate_synthetic_corpus(spec, 40, 99);
  for (const auto& doc : docs) {
    auto derived = derive_bio_tags(doc, spec.vocab, Tokenizer::kWhitespace);
    auto decoded = decode_spans(derived.tags, doc.sentences, spec.vocab,
                                Tokenizer::kWhitespace);
    std::set<std::pair<std::string, std::string>> got;
    for (const auto& rec : decoded) got.insert({rec.role, rec.argument});
    std::set<std::pair<std::string, std::string>> expect;
    for (const auto& table : doc.gold_tables) {
      for (const auto& rec : table.records) expect.insert({rec.role, rec.argument});
    }
    CHECK(got == expect);
  }
}

TEST_CASE("derive_bio_tags in character mode tags every occurrence") {
  Vocabulary v({"EP"}, {"Pledgee", "Pledger"}, 2);
  // tokens: 质 押 人 A 质 押 ; "质押" occurs twice, "A" once
  Document doc;
  doc.doc_id = "zh";
  doc.raw_sentences = {"\xe8\xb4\xa8\xe6\x8a\xbc\xe4\xba\xba" "A" "\xe8\xb4\xa8\xe6\x8a\xbc"};
  doc.sentences = {tokenize(doc.raw_sentences[0], Tokenizer::kCharacter)};
  doc.gold_tables = {{"EP",
                      {{"Pledger", "A"},
                       {"Pledgee", "\xe8\xb4\xa8\xe6\x8a\xbc"}}}};
  auto derived = derive_bio_tags(doc, v, Tokenizer::kCharacter);
  const int O = v.outside_tag();
  CHECK(derived.tags[0] == std::vector<int>{v.begin_tag(0), v.inside_tag(0), O,
                                            v.begin_tag(1), v.begin_tag(0),
                                            v.inside_tag(0)});
}

TEST_CASE("parallel gold-tag annotation equals the sequential result") {
  SyntheticSpec spec = make_separable_spec(3, 4, 4);
  auto docs_seq = generate_synthetic_corpus(spec, 30, 8);
  auto docs_par = docs_seq;
  for (auto& d : docs_seq) d.gold_tags.reset();
  for (auto& d : docs_par) d.gold_tags.reset();

  std::vector<std::string> w1, w4;
  annotate_gold_tags(docs_seq, spec.vocab, Tokenizer::kWhitespace, &w1, 1);
  annotate_gold_tags(docs_par, spec.vocab, Tokenizer::kWhitespace, &w4, 4);
  CHECK(w1 == w4);
  for (size_t i = 0; i < docs_seq.size(); ++i) {
    CHECK(*docs_seq[i].gold_tags == *docs_par[i].gold_tags);
  }
}

TEST_CASE("tag sequences stay length-aligned with sentences") {
  SyntheticSpec spec = make_separable_spec(2, 3, 4);
  auto docs = generate_synthetic_corpus(spec, 10, 3);
  for (const auto& doc : docs) {
    REQUIRE(doc.gold_tags.has_value());
    REQUIRE(doc.gold_tags->size() == doc.sentences.size());
    for (size_t s = 0; s < doc.sentences.size(); ++s) {
      CHECK((*doc.gold_tags)[s].size() == doc.sentences[s].size());
    }
  }
}

TEST_CASE("split_corpus 10 docs at 8:1:1") {
  std::vector<Document> docs;
  for (int i = 0; i < 10; ++i) {
    docs.push_back(make_doc("d" + std::to_string(i), {"x"}, {{"EP", {}}}));
  }
  SplitResult split = split_corpus(docs, {0.8, 0.1, 0.1}, 5);
  CHECK(split.train.size() == 8);
  CHECK(split.dev.size() == 1);
  CHECK(split.test.size() == 1);

  SUBCASE("same seed gives the identical partition") {
    SplitResult again = split_corpus(docs, {0.8, 0.1, 0.1}, 5);
    auto ids = [](const std::vector<Document>& v) {
      std::vector<std::string> out;
      for (const auto& d : v) out.push_back(d.doc_id);
      return out;
    };
    CHECK(ids(again.train) == ids(split.train));
    CHECK(ids(again.dev) == ids(split.dev));
    CHECK(ids(again.test) == ids(split.test));
  }
}

TEST_CASE("split_corpus stratifies per event type") {
  std::vector<Document> docs;
  auto add = [&docs](const std::string& type, int count) {
    for (int i = 0; i < count; ++i) {
      docs.push_back(make_doc(type + std::to_string(i), {"x"}, {{type, {}}}));
    }
  };
  add("A", 60);
  add("B", 30);
  add("C", 10);
  SplitResult split = split_corpus(docs, {0.8, 0.1, 0.1}, 17);

  auto count_type = [](const std::vector<Document>& v, const std::string& t) {
    int n = 0;
    for (const auto& d : v) n += d.gold_tables[0].event_type == t ? 1 : 0;
    return n;
  };
  CHECK(std::abs(count_type(split.train, "A") - 48) <= 1);
  CHECK(std::abs(count_type(split.dev, "A") - 6) <= 1);
  CHECK(std::abs(count_type(split.test, "A") - 6) <= 1);
  CHECK(std::abs(count_type(split.train, "B") - 24) <= 1);
  CHECK(std::abs(count_type(split.dev, "B") - 3) <= 1);
  CHECK(std::abs(count_type(split.test, "B") - 3) <= 1);
  CHECK(std::abs(count_type(split.train, "C") - 8) <= 1);
  CHECK(std::abs(count_type(split.dev, "C") - 1) <= 1);
  CHECK(std::abs(count_type(split.test, "C") - 1) <= 1);

  // disjoint and exhaustive
  std::set<std::string> ids;
  for (const auto* part : {&split.train, &split.dev, &split.test}) {
    for (const auto& d : *part) CHECK(ids.insert(d.doc_id).second);
  }
  CHECK(ids.size() == docs.size());
}

TEST_CASE("split_corpus pushes tiny strata into train with a warning") {
  std::vector<Document> docs;
  docs.push_back(make_doc("a0", {"x"}, {{"A", {}}}));
  docs.push_back(make_doc("a1", {"x"}, {{"A", {}}}));
  docs.push_back(make_doc("b0", {"x"}, {{"B", {}}}));
  SplitResult split = split_corpus(docs, {0.8, 0.1, 0.1}, 1);
  CHECK(split.train.size() == 3);
  CHECK(split.warnings.size() == 2);
  CHECK_THROWS_AS(split_corpus(docs, {0.5, 0.1, 0.1}, 1), DataError);
}

TEST_CASE("synthetic generator with a degenerate profile") {
  SyntheticSpec spec = make_separable_spec(1, 1, 3);
  // role0 always lands in sentence 0 under the cyclic profile
  auto docs = generate_synthetic_corpus(spec, 50, 21);
  CHECK(docs.size() == 50);
  for (const auto& doc : docs) {
    const auto& rec = doc.gold_tables[0].records[0];
    CHECK(testsup::oracle_first_sentence(doc, testsup::split_ws(rec.argument)) == 0);
  }
  CHECK(generate_synthetic_corpus(spec, 0, 21).empty());
}

TEST_CASE("synthetic generator rejects unnormalized profiles") {
  SyntheticSpec spec = make_separable_spec(1, 1, 3);
  spec.profiles["EV0"]["role0"] = {0.5, 0.2, 0.2};
  CHECK_THROWS_WITH_AS(generate_synthetic_corpus(spec, 2, 0),
                       doctest::Contains("not normalized"), DataError);
}

TEST_CASE("synthetic position frequencies converge to the planted profile") {
  SyntheticSpec spec = make_separable_spec(1, 1, 4);
  spec.profiles["EV0"]["role0"] = {0.25, 0.25, 0.25, 0.25};

  auto empirical = [&spec](int n_docs, uint64_t seed) {
    auto docs = generate_synthetic_corpus(spec, n_docs, seed);
    std::vector<double> freq(4, 0.0);
    for (const auto& doc : docs) {
      const auto& rec = doc.gold_tables[0].records[0];
      int s = testsup::oracle_first_sentence(doc, testsup::split_ws(rec.argument));
      REQUIRE(s >= 0);
      freq[s] += 1.0;
    }
    for (double& f : freq) f /= n_docs;
    return freq;
  };

  auto freq = empirical(4000, 123);
  for (double f : freq) CHECK(std::abs(f - 0.25) < 0.03);

  // total-variation distance to the plant shrinks with corpus size
  auto tv = [](const std::vector<double>& f) {
    double d = 0;
    for (double x : f) d += std::abs(x - 0.25);
    return d / 2;
  };
  CHECK(tv(empirical(4000, 9)) < tv(empirical(50, 9)) + 1e-9);
}

TEST_CASE("corpus files round-trip") {
  SyntheticSpec spec = make_separable_spec(2, 3, 4);
  auto docs = generate_synthetic_corpus(spec, 8, 77);
  TempFile f("");
  save_corpus(f.path, docs);
  LoadedCorpus loaded = load_corpus(f.path);
  REQUIRE(loaded.docs.size() == docs.size());
  for (size_t i = 0; i < docs.size(); ++i) {
    CHECK(loaded.docs[i].doc_id == docs[i].doc_id);
    CHECK(loaded.docs[i].sentences == docs[i].sentences);
    REQUIRE(loaded.docs[i].gold_tables.size() == docs[i].gold_tables.size());
    for (size_t t = 0; t < docs[i].gold_tables.size(); ++t) {
      CHECK(loaded.docs[i].gold_tables[t].event_type ==
            docs[i].gold_tables[t].event_type);
      CHECK(loaded.docs[i].gold_tables[t].records == docs[i].gold_tables[t].records);
    }
  }
}
