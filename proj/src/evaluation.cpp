#include "rrdee/evaluation.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

namespace rrdee {

std::vector<EventRecord> decode_spans(
    const std::vector<std::vector<int>>& tags,
    const std::vector<std::vector<std::string>>& sentences, const Vocabulary& vocab,
    Tokenizer mode) {
  std::vector<EventRecord> records;
  for (size_t s = 0; s < tags.size(); ++s) {
    const auto& seq = tags[s];
    const auto& sent = sentences[s];
    size_t t = 0;
    while (t < seq.size()) {
      const int tag = seq[t];
      if (tag >= 0 && tag < vocab.num_entity_tags() && Vocabulary::is_begin(tag)) {
        const int role = vocab.role_of_tag(tag);
        size_t end = t + 1;
        while (end < seq.size() && seq[end] == vocab.inside_tag(role)) ++end;
        std::vector<std::string> span(sent.begin() + t, sent.begin() + end);
        records.push_back({vocab.roles[role], join_tokens(span, mode)});
        t = end;
      } else {
        ++t;
      }
    }
  }
  return records;
}

EventTable assemble_event_table(const Document& doc,
                                const std::vector<std::vector<int>>& tags,
                                const std::string& event_type,
                                const Vocabulary& vocab, Tokenizer mode) {
  EventTable table;
  table.event_type = event_type;
  std::set<std::pair<std::string, std::string>> seen;
  for (auto& rec : decode_spans(tags, doc.sentences, vocab, mode)) {
    if (seen.insert({rec.role, rec.argument}).second) {
      table.records.push_back(std::move(rec));
    }
  }
  return table;
}

Counts MatchResult::total() const {
  Counts sum;
  for (const auto& [type, c] : per_type) sum += c;
  return sum;
}

MatchResult& MatchResult::operator+=(const MatchResult& o) {
  for (const auto& [type, c] : o.per_type) per_type[type] += c;
  return *this;
}

MatchResult match_records(const EventTable& pred, const EventTable& gold) {
  MatchResult out;
  if (pred.event_type != gold.event_type) {
    out.per_type[pred.event_type].fp += static_cast<long>(pred.records.size());
    out.per_type[gold.event_type].fn += static_cast<long>(gold.records.size());
    return out;
  }
  // Greedy without replacement on exact equality: per (role, argument) key
  // the matched count is min(pred occurrences, gold occurrences), which is
  // also the maximum matching.
  std::map<std::pair<std::string, std::string>, long> remaining;
  for (const auto& rec : gold.records) ++remaining[{rec.role, rec.argument}];
  Counts c;
  for (const auto& rec : pred.records) {
    auto it = remaining.find({rec.role, rec.argument});
    if (it != remaining.end() && it->second > 0) {
      --it->second;
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  c.fn = static_cast<long>(gold.records.size()) - c.tp;
  out.per_type[pred.event_type] = c;
  return out;
}

namespace {

// tp-maximizing assignment of pred tables to gold tables of one type.
Counts align_same_type(const std::vector<const EventTable*>& pred,
                       const std::vector<const EventTable*>& gold) {
  const size_t np = pred.size();
  const size_t ng = gold.size();
  std::vector<std::vector<Counts>> pair_counts(np, std::vector<Counts>(ng));
  for (size_t i = 0; i < np; ++i) {
    for (size_t j = 0; j < ng; ++j) {
      pair_counts[i][j] = match_records(*pred[i], *gold[j]).total();
    }
  }

  // Permute the smaller side exhaustively (document table counts are small).
  std::vector<int> order(std::max(np, ng));
  std::iota(order.begin(), order.end(), 0);
  long best_tp = -1;
  Counts best;
  do {
    Counts acc;
    std::vector<bool> pred_used(np, false), gold_used(ng, false);
    for (size_t k = 0; k < order.size(); ++k) {
      size_t i, j;
      if (np <= ng) {
        i = k;
        j = static_cast<size_t>(order[k]);
      } else {
        i = static_cast<size_t>(order[k]);
        j = k;
      }
      if (i >= np || j >= ng) continue;
      acc += pair_counts[i][j];
      pred_used[i] = gold_used[j] = true;
    }
    for (size_t i = 0; i < np; ++i) {
      if (!pred_used[i]) acc.fp += static_cast<long>(pred[i]->records.size());
    }
    for (size_t j = 0; j < ng; ++j) {
      if (!gold_used[j]) acc.fn += static_cast<long>(gold[j]->records.size());
    }
    if (acc.tp > best_tp) {
      best_tp = acc.tp;
      best = acc;
    }
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

}  // namespace

MatchResult match_document(const std::vector<EventTable>& pred,
                           const std::vector<EventTable>& gold) {
  std::map<std::string, std::vector<const EventTable*>> pred_by_type, gold_by_type;
  for (const auto& t : pred) pred_by_type[t.event_type].push_back(&t);
  for (const auto& t : gold) gold_by_type[t.event_type].push_back(&t);

  std::set<std::string> types;
  for (const auto& [type, _] : pred_by_type) types.insert(type);
  for (const auto& [type, _] : gold_by_type) types.insert(type);

  MatchResult out;
  for (const auto& type : types) {
    auto pit = pred_by_type.find(type);
    auto git = gold_by_type.find(type);
    if (pit == pred_by_type.end()) {
      Counts c;
      for (const EventTable* t : git->second) {
        c.fn += static_cast<long>(t->records.size());
      }
      out.per_type[type] += c;
    } else if (git == gold_by_type.end()) {
      Counts c;
      for (const EventTable* t : pit->second) {
        c.fp += static_cast<long>(t->records.size());
      }
      out.per_type[type] += c;
    } else {
      out.per_type[type] += align_same_type(pit->second, git->second);
    }
  }
  return out;
}

Prf prf(const Counts& counts) {
  Prf out;
  out.p = counts.tp + counts.fp > 0
              ? static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fp)
              : 0.0;
  out.r = counts.tp + counts.fn > 0
              ? static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fn)
              : 0.0;
  out.f1 = out.p + out.r > 0 ? 2.0 * out.p * out.r / (out.p + out.r) : 0.0;
  return out;
}

ClassificationScores event_classification_f1(
    const std::vector<std::vector<std::string>>& pred_types,
    const std::vector<std::vector<std::string>>& gold_types,
    const std::vector<std::string>& type_order, bool multi_event_only) {
  if (pred_types.size() != gold_types.size()) {
    throw DataError("event_classification_f1: prediction/gold lists not aligned");
  }
  std::vector<size_t> selected;
  for (size_t d = 0; d < gold_types.size(); ++d) {
    std::set<std::string> uniq(gold_types[d].begin(), gold_types[d].end());
    if (!multi_event_only || uniq.size() >= 2) selected.push_back(d);
  }
  if (selected.empty()) {
    throw DataError("no multi-event documents");
  }

  ClassificationScores out;
  out.num_docs = static_cast<int>(selected.size());
  double f1_sum = 0, p_sum = 0, r_sum = 0;
  for (const auto& type : type_order) {
    Counts c;
    for (size_t d : selected) {
      const bool in_pred = std::find(pred_types[d].begin(), pred_types[d].end(),
                                     type) != pred_types[d].end();
      const bool in_gold = std::find(gold_types[d].begin(), gold_types[d].end(),
                                     type) != gold_types[d].end();
      if (in_pred && in_gold) ++c.tp;
      else if (in_pred) ++c.fp;
      else if (in_gold) ++c.fn;
    }
    Prf scores = prf(c);
    out.per_type[type] = scores;
    f1_sum += scores.f1;
    p_sum += scores.p;
    r_sum += scores.r;
  }
  const double n = static_cast<double>(type_order.size());
  out.macro = {p_sum / n, r_sum / n, f1_sum / n};
  return out;
}

EvalReport build_report(const MatchResult& records,
                        const ClassificationScores& classification) {
  EvalReport report;
  report.per_type_counts = records.per_type;
  double p_sum = 0, r_sum = 0, f_sum = 0;
  int active = 0;
  for (const auto& [type, counts] : records.per_type) {
    Prf scores = prf(counts);
    report.per_type[type] = scores;
    if (counts.tp + counts.fp + counts.fn > 0) {
      p_sum += scores.p;
      r_sum += scores.r;
      f_sum += scores.f1;
      ++active;
    }
  }
  if (active > 0) {
    report.average = {p_sum / active, r_sum / active, f_sum / active};
  }
  report.classification = classification;
  return report;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json types;
  for (const auto& [type, scores] : per_type) {
    const Counts& c = per_type_counts.at(type);
    types[type] = {{"p", scores.p},   {"r", scores.r},   {"f1", scores.f1},
                   {"tp", c.tp},      {"fp", c.fp},      {"fn", c.fn}};
  }
  j["per_type"] = types;
  j["average"] = {{"p", average.p}, {"r", average.r}, {"f1", average.f1}};
  nlohmann::ordered_json clf;
  for (const auto& [type, scores] : classification.per_type) {
    clf[type] = {{"f1", scores.f1}};
  }
  j["event_classification"] = {{"per_type", clf},
                               {"macro_f1", classification.macro.f1},
                               {"num_docs", classification.num_docs}};
  return j;
}

std::string EvalReport::render_table() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1);
  os << std::left << std::setw(14) << "";
  for (const auto& [type, _] : per_type) {
    os << std::setw(18) << (type + " (P/R/F1)");
  }
  os << std::setw(18) << "Avg (P/R/F1)" << "\n";
  os << std::left << std::setw(14) << "records";
  auto cell = [&os](const Prf& s) {
    std::ostringstream c;
    c << std::fixed << std::setprecision(1) << s.p * 100 << "/" << s.r * 100 << "/"
      << s.f1 * 100;
    os << std::setw(18) << c.str();
  };
  for (const auto& [_, scores] : per_type) cell(scores);
  cell(average);
  os << "\n";
  return os.str();
}

}  // namespace rrdee
