#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "rrdee/evaluation.hpp"
#include "test_support.hpp"

using namespace rrdee;
using testsup::make_doc;

TEST_CASE("bio span decoding assembles records") {
  Vocabulary v({"EP"}, {"r"}, 4);
  Document doc = make_doc("d", {"a b c"}, {});
  std::vector<std::vector<int>> tags{
      {v.begin_tag(0), v.inside_tag(0), v.outside_tag()}};
  EventTable table = assemble_event_table(doc, tags, "EP", v, Tokenizer::kWhitespace);
  REQUIRE(table.records.size() == 1);
  CHECK(table.records[0].role == "r");
  CHECK(table.records[0].argument == "a b");
  CHECK(table.event_type == "EP");
}

TEST_CASE("identical spans in two sentences deduplicate") {
  Vocabulary v({"EP"}, {"r"}, 4);
  Document doc = make_doc("d", {"x y", "x y"}, {});
  std::vector<std::vector<int>> tags{{v.begin_tag(0), v.outside_tag()},
                                     {v.begin_tag(0), v.outside_tag()}};
  EventTable table = assemble_event_table(doc, tags, "EP", v, Tokenizer::kWhitespace);
  CHECK(table.records.size() == 1);
  CHECK(table.records[0].argument == "x");
}

TEST_CASE("mixed three-sentence document matches hand span enumeration") {
  Vocabulary v({"EP"}, {"ra", "rb"}, 4);
  Document doc = make_doc("d", {"t0 t1 t2", "u0 u1", "v0 v1 v2 v3"}, {});
  const int O = v.outside_tag();
  std::vector<std::vector<int>> tags{
      {v.begin_tag(0), v.inside_tag(0), O},
      {O, v.begin_tag(1)},
      {v.begin_tag(1), O, v.begin_tag(0), v.inside_tag(0)}};
  auto records = decode_spans(tags, doc.sentences, v, Tokenizer::kWhitespace);
  // hand enumeration: (ra,"t0 t1"), (rb,"u1"), (rb,"v0"), (ra,"v2 v3")
  REQUIRE(records.size() == 4);
  CHECK(records[0] == EventRecord{"ra", "t0 t1"});
  CHECK(records[1] == EventRecord{"rb", "u1"});
  CHECK(records[2] == EventRecord{"rb", "v0"});
  CHECK(records[3] == EventRecord{"ra", "v2 v3"});

  SUBCASE("adjacent B tags start fresh spans") {
    std::vector<std::vector<int>> adj{{v.begin_tag(0), v.begin_tag(0), O}};
    auto recs = decode_spans(adj, {doc.sentences[0]}, v, Tokenizer::kWhitespace);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].argument == "t0");
    CHECK(recs[1].argument == "t1");
  }
}

TEST_CASE("match_records hand cases") {
  EventTable gold{"EP",
                  {{"ra", "x"}, {"ra", "y"}, {"rb", "z"}, {"rb", "w"}}};

  SUBCASE("identical tables") {
    MatchResult m = match_records(gold, gold);
    CHECK(m.total().tp == 4);
    CHECK(m.total().fp == 0);
    CHECK(m.total().fn == 0);
  }
  SUBCASE("two of three predictions match a four-record table") {
    EventTable pred{"EP", {{"ra", "x"}, {"rb", "z"}, {"rb", "nope"}}};
    MatchResult m = match_records(pred, gold);
    CHECK(m.total().tp == 2);
    CHECK(m.total().fp == 1);
    CHECK(m.total().fn == 2);
  }
  SUBCASE("duplicate predictions consume a gold record once") {
    EventTable single{"EP", {{"ra", "x"}}};
    EventTable pred{"EP", {{"ra", "x"}, {"ra", "x"}, {"ra", "x"}}};
    MatchResult m = match_records(pred, single);
    CHECK(m.total().tp == 1);
    CHECK(m.total().fp == 2);
    CHECK(m.total().fn == 0);
  }
  SUBCASE("type mismatch counts everything as errors") {
    EventTable pred{"ER", {{"ra", "x"}}};
    MatchResult m = match_records(pred, gold);
    CHECK(m.total().tp == 0);
    CHECK(m.total().fp == 1);
    CHECK(m.total().fn == 4);
    CHECK(m.per_type.at("ER").fp == 1);
    CHECK(m.per_type.at("EP").fn == 4);
  }
}

TEST_CASE("greedy matching equals maximum bipartite matching") {
  std::mt19937_64 rng(53);
  std::uniform_int_distribution<int> size(0, 5);
  std::uniform_int_distribution<int> pick(0, 2);
  const std::vector<std::string> roles{"ra", "rb"};
  const std::vector<std::string> args{"x", "y", "z"};

  for (int trial = 0; trial < 500; ++trial) {
    EventTable pred{"E", {}}, gold{"E", {}};
    for (int i = size(rng); i > 0; --i) {
      pred.records.push_back({roles[pick(rng) % 2], args[pick(rng)]});
    }
    for (int i = size(rng); i > 0; --i) {
      gold.records.push_back({roles[pick(rng) % 2], args[pick(rng)]});
    }
    MatchResult m = match_records(pred, gold);
    long best = testsup::oracle_max_matching(pred.records, gold.records);
    CHECK(m.total().tp == best);
    // count identities
    CHECK(m.total().tp + m.total().fp == static_cast<long>(pred.records.size()));
    CHECK(m.total().tp + m.total().fn == static_cast<long>(gold.records.size()));
    // swap symmetry
    MatchResult swapped = match_records(gold, pred);
    CHECK(swapped.total().tp == m.total().tp);
    CHECK(swapped.total().fp == m.total().fn);
    CHECK(swapped.total().fn == m.total().fp);
  }
}

TEST_CASE("match_document aligns same-type tables to maximize tp") {
  EventTable gold_a{"E", {{"r", "x"}, {"r", "y"}}};
  EventTable gold_b{"E", {{"r", "z"}}};
  EventTable pred{"E", {{"r", "z"}}};
  MatchResult m = match_document({pred}, {gold_a, gold_b});
  // aligning with gold_b gives tp=1; gold_a's records stay as misses
  CHECK(m.total().tp == 1);
  CHECK(m.total().fp == 0);
  CHECK(m.total().fn == 2);

  SUBCASE("cross-type tables never share credit") {
    EventTable other{"F", {{"r", "z"}}};
    MatchResult cross = match_document({other}, {gold_b});
    CHECK(cross.total().tp == 0);
    CHECK(cross.total().fp == 1);
    CHECK(cross.total().fn == 1);
  }
}

TEST_CASE("precision, recall, F1") {
  SUBCASE("hand numbers") {
    Prf scores = prf({2, 1, 2});
    CHECK(scores.p == doctest::Approx(0.6667).epsilon(1e-4));
    CHECK(scores.r == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(scores.f1 == doctest::Approx(0.5714).epsilon(1e-4));
  }
  SUBCASE("perfect") {
    Prf scores = prf({7, 0, 0});
    CHECK(scores.p == 1.0);
    CHECK(scores.r == 1.0);
    CHECK(scores.f1 == 1.0);
  }
  SUBCASE("zero denominators yield zero by convention") {
    Prf scores = prf({0, 0, 0});
    CHECK(scores.p == 0.0);
    CHECK(scores.r == 0.0);
    CHECK(scores.f1 == 0.0);
  }
  SUBCASE("harmonic-mean identity") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> c(0, 20);
    for (int trial = 0; trial < 200; ++trial) {
      Prf s = prf({c(rng), c(rng), c(rng)});
      if (s.p + s.r > 0) {
        CHECK(s.f1 * (s.p + s.r) == doctest::Approx(2.0 * s.p * s.r).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("event classification F1") {
  const std::vector<std::string> types{"A", "B"};

  SUBCASE("all correct single-type predictions") {
    std::vector<std::vector<std::string>> preds{{"A"}, {"B"}, {"A"}};
    std::vector<std::vector<std::string>> golds{{"A"}, {"B"}, {"A"}};
    ClassificationScores s = event_classification_f1(preds, golds, types, false);
    CHECK(s.per_type.at("A").f1 == doctest::Approx(1.0));
    CHECK(s.per_type.at("B").f1 == doctest::Approx(1.0));
    CHECK(s.macro.f1 == doctest::Approx(1.0));
  }
  SUBCASE("two right, two swapped gives 0.5 per type") {
    std::vector<std::vector<std::string>> preds{{"A"}, {"B"}, {"B"}, {"A"}};
    std::vector<std::vector<std::string>> golds{{"A"}, {"B"}, {"A"}, {"B"}};
    ClassificationScores s = event_classification_f1(preds, golds, types, false);
    CHECK(s.per_type.at("A").f1 == doctest::Approx(0.5));
    CHECK(s.per_type.at("B").f1 == doctest::Approx(0.5));
    CHECK(s.macro.f1 == doctest::Approx(0.5));
  }
  SUBCASE("multi-event restriction") {
    std::vector<std::vector<std::string>> preds{{"A", "B"}, {"A"}};
    std::vector<std::vector<std::string>> golds{{"A", "B"}, {"A"}};
    ClassificationScores s = event_classification_f1(preds, golds, types, true);
    CHECK(s.num_docs == 1);
    CHECK(s.macro.f1 == doctest::Approx(1.0));
  }
  SUBCASE("multi-event restriction over single-type documents errors") {
    std::vector<std::vector<std::string>> preds{{"A"}};
    std::vector<std::vector<std::string>> golds{{"A"}};
    CHECK_THROWS_WITH_AS(event_classification_f1(preds, golds, types, true),
                         doctest::Contains("no multi-event documents"), DataError);
  }
}

TEST_CASE("report rendering and JSON") {
  MatchResult m;
  m.per_type["A"] = {2, 1, 2};
  m.per_type["B"] = {3, 0, 0};
  ClassificationScores clf;
  clf.per_type["A"] = {1, 1, 1};
  clf.per_type["B"] = {1, 1, 1};
  clf.macro = {1, 1, 1};
  clf.num_docs = 5;
  EvalReport report = build_report(m, clf);

  CHECK(report.per_type.at("A").f1 == doctest::Approx(0.5714).epsilon(1e-4));
  CHECK(report.per_type.at("B").f1 == doctest::Approx(1.0));
  CHECK(report.average.f1 == doctest::Approx((0.5714 + 1.0) / 2).epsilon(1e-4));

  auto j = report.to_json();
  CHECK(j["per_type"]["A"]["tp"] == 2);
  CHECK(j["average"]["f1"].get<double>() ==
        doctest::Approx(report.average.f1));
  CHECK(j["event_classification"]["macro_f1"].get<double>() == doctest::Approx(1.0));

  std::string table = report.render_table();
  CHECK(table.find("Avg") != std::string::npos);
  CHECK(table.find("A (P/R/F1)") != std::string::npos);
}
