#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rrdee/corpus.hpp"

namespace rrdee {

// BIO span decode: every maximal B-x (I-x)* run becomes one record.
std::vector<EventRecord> decode_spans(
    const std::vector<std::vector<int>>& tags,
    const std::vector<std::vector<std::string>>& sentences, const Vocabulary& vocab,
    Tokenizer mode);

// Decoded spans across all sentences, deduplicated on (role, argument),
// paired with the predicted event type.
EventTable assemble_event_table(const Document& doc,
                                const std::vector<std::vector<int>>& tags,
                                const std::string& event_type,
                                const Vocabulary& vocab, Tokenizer mode);

struct Counts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

struct MatchResult {
  std::map<std::string, Counts> per_type;

  Counts total() const;
  MatchResult& operator+=(const MatchResult& o);
};

// Greedy without-replacement matching on exact (role, argument) equality.
// Records are only eligible when the tables' event types are equal;
// otherwise everything is FP/FN.
MatchResult match_records(const EventTable& pred, const EventTable& gold);

// One document, possibly several tables per side. Same-type tables are
// aligned by the tp-maximizing exhaustive assignment.
MatchResult match_document(const std::vector<EventTable>& pred,
                           const std::vector<EventTable>& gold);

struct Prf {
  double p = 0;
  double r = 0;
  double f1 = 0;
};

// Zero denominators yield zero by convention.
Prf prf(const Counts& counts);

struct ClassificationScores {
  std::map<std::string, Prf> per_type;
  Prf macro;
  int num_docs = 0;
};

// Per-type one-vs-rest F1 over documents; optionally restricted to
// documents with at least two gold types.
ClassificationScores event_classification_f1(
    const std::vector<std::vector<std::string>>& pred_types,
    const std::vector<std::vector<std::string>>& gold_types,
    const std::vector<std::string>& type_order, bool multi_event_only);

struct EvalReport {
  std::map<std::string, Counts> per_type_counts;
  std::map<std::string, Prf> per_type;
  Prf average;  // macro over types with any activity
  ClassificationScores classification;

  nlohmann::ordered_json to_json() const;
  std::string render_table() const;  // aligned text, Table-2-like layout
};

EvalReport build_report(const MatchResult& records,
                        const ClassificationScores& classification);

}  // namespace rrdee
