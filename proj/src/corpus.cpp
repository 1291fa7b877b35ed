#include "rrdee/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace rrdee {

using json = nlohmann::ordered_json;

std::vector<std::string> Document::gold_types() const {
  std::vector<std::string> types;
  for (const auto& table : gold_tables) {
    if (std::find(types.begin(), types.end(), table.event_type) == types.end()) {
      types.push_back(table.event_type);
    }
  }
  return types;
}

Vocabulary::Vocabulary(std::vector<std::string> events_,
                       std::vector<std::string> roles_, int max_sentences_)
    : events(std::move(events_)),
      roles(std::move(roles_)),
      max_sentences(max_sentences_) {
  tags.reserve(2 * roles.size() + 1);
  for (const auto& r : roles) {
    tags.push_back("B-" + r);
    tags.push_back("I-" + r);
  }
  tags.push_back("O");
  validate();
}

namespace {

int index_of(const std::vector<std::string>& xs, const std::string& x) {
  auto it = std::find(xs.begin(), xs.end(), x);
  return it == xs.end() ? -1 : static_cast<int>(it - xs.begin());
}

}  // namespace

int Vocabulary::event_id(const std::string& e) const { return index_of(events, e); }
int Vocabulary::role_id(const std::string& r) const { return index_of(roles, r); }
int Vocabulary::tag_id(const std::string& t) const { return index_of(tags, t); }

int Vocabulary::role_of_tag(int tag) const {
  if (tag < 0 || tag >= num_entity_tags()) return -1;
  return tag / 2;
}

void Vocabulary::validate() const {
  if (max_sentences < 1) throw DataError("vocabulary: N must be >= 1");
  if (tags.size() != 2 * roles.size() + 1) {
    throw DataError("vocabulary: tag set must be B-/I- per role plus O");
  }
  std::set<std::string> uniq(roles.begin(), roles.end());
  if (uniq.size() != roles.size()) throw DataError("vocabulary: duplicate role");
  std::set<std::string> uev(events.begin(), events.end());
  if (uev.size() != events.size()) throw DataError("vocabulary: duplicate event type");
}

Vocabulary load_vocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("vocabulary file " + path + ": " + e.what());
  }
  if (!j.contains("events") || !j.contains("roles") || !j.contains("N")) {
    throw DataError("vocabulary file " + path + ": needs events, roles, N");
  }
  return Vocabulary(j["events"].get<std::vector<std::string>>(),
                    j["roles"].get<std::vector<std::string>>(), j["N"].get<int>());
}

void save_vocabulary(const std::string& path, const Vocabulary& vocab) {
  json j;
  j["events"] = vocab.events;
  j["roles"] = vocab.roles;
  j["N"] = vocab.max_sentences;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary file: " + path);
  out << j.dump(2) << "\n";
}

std::vector<std::string> tokenize(const std::string& text, Tokenizer mode) {
  std::vector<std::string> tokens;
  if (mode == Tokenizer::kWhitespace) {
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
  }
  // Character mode: one token per UTF-8 code point, whitespace dropped.
  size_t i = 0;
  while (i < text.size()) {
    unsigned char lead = static_cast<unsigned char>(text[i]);
    size_t len = 1;
    if (lead >= 0xF0) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    len = std::min(len, text.size() - i);
    std::string cp = text.substr(i, len);
    i += len;
    if (cp.size() == 1 && std::isspace(static_cast<unsigned char>(cp[0]))) continue;
    tokens.push_back(cp);
  }
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens, Tokenizer mode) {
  const char* sep = mode == Tokenizer::kWhitespace ? " " : "";
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += sep;
    out += tokens[i];
  }
  return out;
}

namespace {

Document parse_document(const json& j, int line_no, Tokenizer mode) {
  auto fail = [line_no](const std::string& msg) {
    throw DataError("line " + std::to_string(line_no) + ": " + msg);
  };
  if (!j.is_object()) fail("document must be a JSON object");
  if (!j.contains("doc_id") || !j["doc_id"].is_string()) fail("missing doc_id");
  if (!j.contains("sentences") || !j["sentences"].is_array()) fail("missing sentences");

  Document doc;
  doc.doc_id = j["doc_id"].get<std::string>();
  for (const auto& s : j["sentences"]) {
    if (!s.is_string()) fail("sentences must be strings");
    doc.raw_sentences.push_back(s.get<std::string>());
    doc.sentences.push_back(tokenize(s.get<std::string>(), mode));
  }
  if (doc.sentences.empty()) fail("document has no sentences");

  if (j.contains("events")) {
    if (!j["events"].is_array()) fail("events must be an array");
    for (const auto& ev : j["events"]) {
      if (!ev.contains("type") || !ev["type"].is_string()) fail("event missing type");
      EventTable table;
      table.event_type = ev["type"].get<std::string>();
      if (ev.contains("records")) {
        for (const auto& rec : ev["records"]) {
          if (!rec.contains("role") || !rec.contains("argument")) {
            fail("record needs role and argument");
          }
          EventRecord r{rec["role"].get<std::string>(),
                        rec["argument"].get<std::string>()};
          if (r.argument.empty()) fail("empty argument for role " + r.role);
          table.records.push_back(std::move(r));
        }
      }
      doc.gold_tables.push_back(std::move(table));
    }
  }
  return doc;
}

}  // namespace

LoadedCorpus load_corpus(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);

  LoadedCorpus out;
  std::set<std::string> seen_ids;
  std::string line;
  int line_no = 0;
  size_t max_sent = 0;
  std::set<std::string> event_set, role_set;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    Document doc = parse_document(j, line_no, opts.tokenizer);
    if (!seen_ids.insert(doc.doc_id).second) {
      throw DataError("line " + std::to_string(line_no) + ": duplicate doc_id " +
                      doc.doc_id);
    }
    max_sent = std::max(max_sent, doc.sentences.size());
    for (const auto& table : doc.gold_tables) {
      if (opts.vocab) {
        if (opts.vocab->event_id(table.event_type) < 0) {
          throw DataError("line " + std::to_string(line_no) +
                          ": unknown event type " + table.event_type);
        }
        for (const auto& rec : table.records) {
          if (opts.vocab->role_id(rec.role) < 0) {
            throw DataError("line " + std::to_string(line_no) + ": unknown role " +
                            rec.role);
          }
        }
      } else {
        event_set.insert(table.event_type);
        for (const auto& rec : table.records) role_set.insert(rec.role);
      }
    }
    out.docs.push_back(std::move(doc));
  }

  if (opts.vocab) {
    out.vocab = *opts.vocab;
  } else {
    if (out.docs.empty()) {
      throw DataError("cannot induce vocabulary from empty corpus: " + path);
    }
    int n = opts.max_sentences_override > 0
                ? opts.max_sentences_override
                : std::min<int>(static_cast<int>(max_sent), opts.induced_cap);
    out.vocab = Vocabulary(
        std::vector<std::string>(event_set.begin(), event_set.end()),
        std::vector<std::string>(role_set.begin(), role_set.end()), std::max(n, 1));
  }
  return out;
}

void save_corpus(const std::string& path, const std::vector<Document>& docs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file: " + path);
  for (const auto& doc : docs) {
    json j;
    j["doc_id"] = doc.doc_id;
    j["sentences"] = doc.raw_sentences;
    json events = json::array();
    for (const auto& table : doc.gold_tables) {
      json ev;
      ev["type"] = table.event_type;
      json records = json::array();
      for (const auto& rec : table.records) {
        records.push_back({{"role", rec.role}, {"argument", rec.argument}});
      }
      ev["records"] = records;
      events.push_back(ev);
    }
    j["events"] = events;
    out << j.dump() << "\n";
  }
}

std::vector<SpanMatch> find_occurrences(
    const std::vector<std::vector<std::string>>& sentences,
    const std::vector<std::string>& arg_tokens) {
  std::vector<SpanMatch> hits;
  if (arg_tokens.empty()) return hits;
  const int len = static_cast<int>(arg_tokens.size());
  for (int si = 0; si < static_cast<int>(sentences.size()); ++si) {
    const auto& sent = sentences[si];
    for (int start = 0; start + len <= static_cast<int>(sent.size()); ++start) {
      bool match = true;
      for (int k = 0; k < len; ++k) {
        if (sent[start + k] != arg_tokens[k]) {
          match = false;
          break;
        }
      }
      if (match) hits.push_back({si, start, len});
    }
  }
  return hits;
}

TagDerivation derive_bio_tags(const Document& doc, const Vocabulary& vocab,
                              Tokenizer mode) {
  TagDerivation out;
  out.tags.resize(doc.sentences.size());
  for (size_t s = 0; s < doc.sentences.size(); ++s) {
    out.tags[s].assign(doc.sentences[s].size(), vocab.outside_tag());
  }

  // Candidate = one occurrence of one record's argument.
  struct Candidate {
    SpanMatch span;
    int role;
  };
  std::vector<Candidate> candidates;
  // Dedup (role, argument) pairs so repeated records don't double-place.
  std::set<std::pair<int, std::string>> seen;
  for (const auto& table : doc.gold_tables) {
    for (const auto& rec : table.records) {
      int role = vocab.role_id(rec.role);
      if (role < 0) throw DataError("unknown role in gold table: " + rec.role);
      if (!seen.insert({role, rec.argument}).second) continue;
      auto occurrences = find_occurrences(doc.sentences, tokenize(rec.argument, mode));
      if (occurrences.empty()) {
        ++out.unmatched_records;
        out.warnings.push_back("doc " + doc.doc_id + ": argument \"" + rec.argument +
                               "\" (role " + rec.role + ") not found");
        continue;
      }
      for (const auto& span : occurrences) candidates.push_back({span, role});
    }
  }

  // Longest match first, then leftmost (sentence, start), then role order.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (a.span.length != b.span.length)
                       return a.span.length > b.span.length;
                     if (a.span.sentence != b.span.sentence)
                       return a.span.sentence < b.span.sentence;
                     if (a.span.start != b.span.start) return a.span.start < b.span.start;
                     return a.role < b.role;
                   });

  for (const auto& cand : candidates) {
    auto& tags = out.tags[cand.span.sentence];
    bool free = true;
    for (int k = 0; k < cand.span.length; ++k) {
      if (tags[cand.span.start + k] != vocab.outside_tag()) {
        free = false;
        break;
      }
    }
    if (!free) continue;
    tags[cand.span.start] = vocab.begin_tag(cand.role);
    for (int k = 1; k < cand.span.length; ++k) {
      tags[cand.span.start + k] = vocab.inside_tag(cand.role);
    }
  }
  return out;
}

int annotate_gold_tags(std::vector<Document>& docs, const Vocabulary& vocab,
                       Tokenizer mode, std::vector<std::string>* warnings,
                       int workers) {
  std::vector<TagDerivation> derived(docs.size());
  workers = std::max(1, std::min<int>(workers, static_cast<int>(docs.size())));
  if (workers == 1) {
    for (size_t i = 0; i < docs.size(); ++i) {
      derived[i] = derive_bio_tags(docs[i], vocab, mode);
    }
  } else {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (size_t i = next.fetch_add(1); i < docs.size(); i = next.fetch_add(1)) {
          derived[i] = derive_bio_tags(docs[i], vocab, mode);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  int unmatched = 0;
  for (size_t i = 0; i < docs.size(); ++i) {
    unmatched += derived[i].unmatched_records;
    if (warnings) {
      warnings->insert(warnings->end(), derived[i].warnings.begin(),
                       derived[i].warnings.end());
    }
    docs[i].gold_tags = std::move(derived[i].tags);
  }
  return unmatched;
}

SplitResult split_corpus(const std::vector<Document>& docs,
                         const std::array<double, 3>& ratios, uint64_t seed) {
  double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) {
    throw DataError("split ratios must sum to 1");
  }

  // Strata keyed by the document's sorted gold type signature; multi-event
  // documents form their own strata.
  std::map<std::string, std::vector<int>> strata;
  for (int i = 0; i < static_cast<int>(docs.size()); ++i) {
    auto types = docs[i].gold_types();
    std::sort(types.begin(), types.end());
    std::string key;
    for (const auto& t : types) key += t + "|";
    strata[key].push_back(i);
  }

  int parts = 0;
  for (double r : ratios) parts += r > 0 ? 1 : 0;

  SplitResult out;
  std::mt19937_64 rng(seed);
  for (auto& [key, idxs] : strata) {
    std::shuffle(idxs.begin(), idxs.end(), rng);
    const int n = static_cast<int>(idxs.size());
    if (n < parts) {
      for (int i : idxs) out.train.push_back(docs[i]);
      out.warnings.push_back("stratum \"" + key + "\" has only " +
                             std::to_string(n) + " documents; all assigned to train");
      continue;
    }
    // Largest-remainder allocation.
    std::array<int, 3> alloc{};
    std::array<double, 3> frac{};
    int assigned = 0;
    for (int p = 0; p < 3; ++p) {
      double exact = ratios[p] * n;
      alloc[p] = static_cast<int>(std::floor(exact));
      frac[p] = exact - alloc[p];
      assigned += alloc[p];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return frac[a] > frac[b]; });
    for (int k = 0; assigned < n; ++k) {
      ++alloc[order[k % 3]];
      ++assigned;
    }
    int pos = 0;
    for (int i = 0; i < alloc[0]; ++i) out.train.push_back(docs[idxs[pos++]]);
    for (int i = 0; i < alloc[1]; ++i) out.dev.push_back(docs[idxs[pos++]]);
    for (int i = 0; i < alloc[2]; ++i) out.test.push_back(docs[idxs[pos++]]);
  }
  return out;
}

SyntheticSpec make_separable_spec(int num_events, int num_roles, int n,
                                  int lexicon_size) {
  std::vector<std::string> events, roles;
  for (int e = 0; e < num_events; ++e) events.push_back("EV" + std::to_string(e));
  for (int r = 0; r < num_roles; ++r) roles.push_back("role" + std::to_string(r));

  SyntheticSpec spec;
  spec.vocab = Vocabulary(events, roles, n);
  spec.lexicon_size = lexicon_size;
  // Event e places role r deterministically in sentence (r + e) mod N, so the
  // planted styles are pairwise far apart.
  for (int e = 0; e < num_events; ++e) {
    for (int r = 0; r < num_roles; ++r) {
      std::vector<double> dist(n, 0.0);
      dist[(r + e) % n] = 1.0;
      spec.profiles[events[e]][roles[r]] = dist;
    }
  }
  return spec;
}

namespace {

void check_profiles(const SyntheticSpec& spec) {
  const int n = spec.vocab.max_sentences;
  for (const auto& ev : spec.vocab.events) {
    auto pit = spec.profiles.find(ev);
    if (pit == spec.profiles.end()) {
      throw DataError("synthetic spec: no profile for event " + ev);
    }
    for (const auto& role : spec.vocab.roles) {
      auto rit = pit->second.find(role);
      if (rit == pit->second.end()) {
        throw DataError("synthetic spec: event " + ev + " missing role " + role);
      }
      const auto& dist = rit->second;
      if (static_cast<int>(dist.size()) != n) {
        throw DataError("synthetic spec: profile for " + ev + "/" + role +
                        " must have N entries");
      }
      double sum = 0;
      for (double p : dist) sum += p;
      if (std::abs(sum - 1.0) > 1e-9) {
        throw DataError("synthetic spec: profile for " + ev + "/" + role +
                        " is not normalized");
      }
    }
  }
}

int sample_categorical(const std::vector<double>& dist, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double u = uni(rng);
  double acc = 0;
  for (int i = 0; i < static_cast<int>(dist.size()); ++i) {
    acc += dist[i];
    if (u <= acc) return i;
  }
  return static_cast<int>(dist.size()) - 1;
}

}  // namespace

std::vector<Document> generate_synthetic_corpus(const SyntheticSpec& spec,
                                                int n_docs, uint64_t seed) {
  check_profiles(spec);
  const int n_sent =
      spec.sentences_per_doc > 0 ? spec.sentences_per_doc : spec.vocab.max_sentences;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> filler_id(0, spec.filler_vocab_size - 1);
  std::uniform_int_distribution<int> filler_count(spec.min_filler_tokens,
                                                  spec.max_filler_tokens);
  std::uniform_int_distribution<int> lex(0, spec.lexicon_size - 1);

  std::vector<Document> docs;
  docs.reserve(n_docs);
  for (int d = 0; d < n_docs; ++d) {
    const int num_events = spec.vocab.num_events();
    std::vector<int> event_ids{d % num_events};  // round-robin keeps types balanced
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    if (num_events > 1 && uni(rng) < spec.multi_event_fraction) {
      event_ids.push_back((event_ids[0] + 1) % num_events);
    }

    std::vector<std::vector<std::string>> sentences(n_sent);
    // Spans already holding entity tokens; inserts may not land inside one.
    std::vector<std::vector<std::pair<int, int>>> occupied(n_sent);
    for (auto& sent : sentences) {
      int count = filler_count(rng);
      for (int i = 0; i < count; ++i) {
        sent.push_back("f" + std::to_string(filler_id(rng)));
      }
    }

    Document doc;
    doc.doc_id = "synth-" + std::to_string(d);
    for (int eid : event_ids) {
      const auto& event = spec.vocab.events[eid];
      EventTable table;
      table.event_type = event;
      for (const auto& role : spec.vocab.roles) {
        int pos = sample_categorical(spec.profiles.at(event).at(role), rng);
        pos = std::min(pos, n_sent - 1);
        int ent = lex(rng);
        std::vector<std::string> ent_tokens;
        for (int k = 0; k < spec.entity_tokens; ++k) {
          std::string tok = role + "_e" + std::to_string(ent);
          if (spec.entity_tokens > 1) tok += static_cast<char>('a' + k);
          ent_tokens.push_back(tok);
        }
        auto& sent = sentences[pos];
        auto& spans = occupied[pos];
        std::uniform_int_distribution<int> at(0, static_cast<int>(sent.size()));
        int offset = at(rng);
        auto splits_entity = [&spans](int p) {
          for (auto [s, e] : spans) {
            if (p > s && p < e) return true;
          }
          return false;
        };
        while (splits_entity(offset)) offset = at(rng);
        const int len = static_cast<int>(ent_tokens.size());
        sent.insert(sent.begin() + offset, ent_tokens.begin(), ent_tokens.end());
        for (auto& [s, e] : spans) {
          if (s >= offset) {
            s += len;
            e += len;
          }
        }
        spans.emplace_back(offset, offset + len);
        table.records.push_back({role, join_tokens(ent_tokens, Tokenizer::kWhitespace)});
      }
      doc.gold_tables.push_back(std::move(table));
    }

    doc.sentences = sentences;
    for (const auto& sent : sentences) {
      doc.raw_sentences.push_back(join_tokens(sent, Tokenizer::kWhitespace));
    }
    TagDerivation derived = derive_bio_tags(doc, spec.vocab, Tokenizer::kWhitespace);
    doc.gold_tags = std::move(derived.tags);
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace rrdee
