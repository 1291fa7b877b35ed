#include "rrdee/role_rank.hpp"

#include <optional>

#include "rrdee/tensor_io.hpp"

namespace rrdee {

namespace {

// Sentence index of the first locatable occurrence of an argument.
std::optional<int> first_occurrence_sentence(const Document& doc,
                                             const std::string& argument,
                                             Tokenizer mode) {
  auto hits = find_occurrences(doc.sentences, tokenize(argument, mode));
  if (hits.empty()) return std::nullopt;
  return hits.front().sentence;
}

}  // namespace

RoleRankDistribution build_rrd(const std::vector<Document>& train_docs,
                               const Vocabulary& vocab) {
  const int n = vocab.max_sentences;
  const int nr = vocab.num_roles();

  RoleRankDistribution out;
  out.slices.assign(vocab.num_events(), Eigen::MatrixXd::Ones(n, nr));

  for (int e = 0; e < vocab.num_events(); ++e) {
    auto& counts = out.slices[e];
    for (const auto& doc : train_docs) {
      for (const auto& table : doc.gold_tables) {
        if (table.event_type != vocab.events[e]) continue;
        for (const auto& rec : table.records) {
          int role = vocab.role_id(rec.role);
          if (role < 0) throw DataError("unknown role in gold table: " + rec.role);
          auto sent = first_occurrence_sentence(doc, rec.argument,
                                                Tokenizer::kWhitespace);
          if (!sent || *sent >= n) continue;
          counts(*sent, role) += 1.0;
        }
      }
    }
    for (int r = 0; r < nr; ++r) {
      counts.col(r) /= counts.col(r).sum();
    }
  }
  return out;
}

const Eigen::MatrixXd& slice(const RoleRankDistribution& p, const Vocabulary& vocab,
                             const std::string& event) {
  int e = vocab.event_id(event);
  if (e < 0 || e >= p.num_events()) throw DataError("unknown event type: " + event);
  return p.slices[e];
}

TagRoleTransition build_tag_role_transition(const std::vector<Document>& train_docs,
                                            const Vocabulary& vocab) {
  const int nt = vocab.num_entity_tags();
  const int nr = vocab.num_roles();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(nt, nr);

  for (const auto& doc : train_docs) {
    std::vector<std::vector<int>> tags;
    if (doc.gold_tags) {
      tags = *doc.gold_tags;
    } else {
      tags = derive_bio_tags(doc, vocab, Tokenizer::kWhitespace).tags;
    }
    // A token counts toward (t, r) when its tag is t and it lies inside an
    // occurrence of a record with role r.
    for (const auto& table : doc.gold_tables) {
      for (const auto& rec : table.records) {
        int role = vocab.role_id(rec.role);
        if (role < 0) continue;
        auto hits = find_occurrences(doc.sentences,
                                     tokenize(rec.argument, Tokenizer::kWhitespace));
        for (const auto& span : hits) {
          if (span.sentence >= static_cast<int>(tags.size())) continue;
          for (int k = 0; k < span.length; ++k) {
            int t = tags[span.sentence][span.start + k];
            if (t >= 0 && t < nt) counts(t, role) += 1.0;
          }
        }
      }
    }
  }

  TagRoleTransition w;
  w.values = counts;
  for (int t = 0; t < nt; ++t) {
    double total = counts.row(t).sum();
    if (total > 0) {
      w.values.row(t) /= total;
    } else {
      // Unseen tag: deterministic BIO mapping B-x/I-x -> x.
      w.values.row(t).setZero();
      w.values(t, vocab.role_of_tag(t)) = 1.0;
    }
  }
  return w;
}

RoleEventTransition build_role_event_transition(
    const std::vector<Document>& train_docs, const Vocabulary& vocab) {
  const int nr = vocab.num_roles();
  const int ne = vocab.num_events();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(nr, ne);

  for (const auto& doc : train_docs) {
    for (const auto& table : doc.gold_tables) {
      int e = vocab.event_id(table.event_type);
      if (e < 0) continue;
      for (const auto& rec : table.records) {
        int role = vocab.role_id(rec.role);
        if (role >= 0) counts(role, e) += 1.0;
      }
    }
  }

  RoleEventTransition w;
  w.values = counts;
  for (int r = 0; r < nr; ++r) {
    double total = counts.row(r).sum();
    if (total > 0) {
      w.values.row(r) /= total;
    } else {
      w.values.row(r).setConstant(1.0 / ne);
    }
  }
  return w;
}

Eigen::MatrixXd count_tag_positions(const std::vector<std::vector<int>>& tags,
                                    const Vocabulary& vocab) {
  const int n = vocab.max_sentences;
  const int nt = vocab.num_entity_tags();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, nt);

  const int limit = std::min<int>(n, static_cast<int>(tags.size()));
  for (int i = 0; i < limit; ++i) {
    for (int t : tags[i]) {
      if (t >= 0 && t < nt && Vocabulary::is_begin(t)) counts(i, t) += 1.0;
    }
  }
  for (int t = 0; t < nt; ++t) {
    double total = counts.col(t).sum();
    if (total > 0) counts.col(t) /= total;
  }
  return counts;
}

Eigen::MatrixXd tags_to_roles(const Eigen::MatrixXd& tag_positions,
                              const TagRoleTransition& w) {
  if (tag_positions.cols() != w.values.rows()) {
    throw DataError("tags_to_roles: inner dimensions disagree");
  }
  return tag_positions * w.values;
}

RrdArtifact build_rrd_artifact(const std::vector<Document>& train_docs,
                               const Vocabulary& vocab) {
  RrdArtifact a;
  a.vocab = vocab;
  a.rrd = build_rrd(train_docs, vocab);
  a.tag_role = build_tag_role_transition(train_docs, vocab);
  a.role_event = build_role_event_transition(train_docs, vocab);
  return a;
}

void save_rrd_artifact(const std::string& path, const RrdArtifact& a) {
  Container c;
  c.meta["kind"] = "rrd";
  c.meta["version"] = 1;
  c.meta["events"] = a.vocab.events;
  c.meta["roles"] = a.vocab.roles;
  c.meta["N"] = a.vocab.max_sentences;
  for (int e = 0; e < a.rrd.num_events(); ++e) {
    c.arrays.push_back(NamedArray::from_matrix("P/" + a.vocab.events[e],
                                               a.rrd.slices[e]));
  }
  c.arrays.push_back(NamedArray::from_matrix("W", a.tag_role.values));
  c.arrays.push_back(NamedArray::from_matrix("Wp", a.role_event.values));
  save_container(path, c);
}

RrdArtifact load_rrd_artifact(const std::string& path) {
  Container c = load_container(path);
  if (!c.meta.contains("kind") || c.meta["kind"] != "rrd") {
    throw DataError(path + " is not a role-rank artifact");
  }
  RrdArtifact a;
  a.vocab = Vocabulary(c.meta["events"].get<std::vector<std::string>>(),
                       c.meta["roles"].get<std::vector<std::string>>(),
                       c.meta["N"].get<int>());
  for (const auto& ev : a.vocab.events) {
    Eigen::MatrixXd s = c.array("P/" + ev).to_matrix();
    if (s.rows() != a.vocab.max_sentences || s.cols() != a.vocab.num_roles()) {
      throw DataError("artifact slice shape mismatch for event " + ev);
    }
    a.rrd.slices.push_back(std::move(s));
  }
  a.tag_role.values = c.array("W").to_matrix();
  if (a.tag_role.values.rows() != a.vocab.num_entity_tags() ||
      a.tag_role.values.cols() != a.vocab.num_roles()) {
    throw DataError("artifact W shape mismatch");
  }
  a.role_event.values = c.array("Wp").to_matrix();
  if (a.role_event.values.rows() != a.vocab.num_roles() ||
      a.role_event.values.cols() != a.vocab.num_events()) {
    throw DataError("artifact W' shape mismatch");
  }
  return a;
}

}  // namespace rrdee
