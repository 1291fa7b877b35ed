#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rrdee {

// Raised for anything wrong with input data (files, schemas, vocabularies).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One (role, argument) pair of an event table.
struct EventRecord {
  std::string role;
  std::string argument;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

// An event type plus its records. Records may be empty.
struct EventTable {
  std::string event_type;
  std::vector<EventRecord> records;
};

// A document: tokenized sentences plus gold annotation.
// `gold_tags` holds per-sentence tag ids over the vocabulary tag set; it is
// absent until derive_bio_tags has run (or a test sets it directly).
struct Document {
  std::string doc_id;
  std::vector<std::string> raw_sentences;
  std::vector<std::vector<std::string>> sentences;
  std::vector<EventTable> gold_tables;
  std::optional<std::vector<std::vector<int>>> gold_tags;

  // Unique gold event types, in first-appearance order.
  std::vector<std::string> gold_types() const;
};

// Fixed, persisted orderings for event types, roles and BIO tags.
// Tag layout: B-r and I-r for each role in order, O last, so |Y| = 2|R|+1.
struct Vocabulary {
  std::vector<std::string> events;
  std::vector<std::string> roles;
  int max_sentences = 1;  // N: sentence positions tracked per document

  std::vector<std::string> tags;  // derived from roles

  Vocabulary() = default;
  Vocabulary(std::vector<std::string> events_, std::vector<std::string> roles_,
             int max_sentences_);

  int num_events() const { return static_cast<int>(events.size()); }
  int num_roles() const { return static_cast<int>(roles.size()); }
  int num_tags() const { return static_cast<int>(tags.size()); }
  int num_entity_tags() const { return 2 * num_roles(); }

  int event_id(const std::string& e) const;  // -1 when unknown
  int role_id(const std::string& r) const;
  int tag_id(const std::string& t) const;

  int outside_tag() const { return num_entity_tags(); }
  int begin_tag(int role) const { return 2 * role; }
  int inside_tag(int role) const { return 2 * role + 1; }
  static bool is_begin(int tag) { return tag % 2 == 0; }  // entity tags only
  int role_of_tag(int tag) const;  // -1 for O

  void validate() const;
};

Vocabulary load_vocabulary(const std::string& path);
void save_vocabulary(const std::string& path, const Vocabulary& vocab);

enum class Tokenizer { kWhitespace, kCharacter };

std::vector<std::string> tokenize(const std::string& text, Tokenizer mode);
std::string join_tokens(const std::vector<std::string>& tokens, Tokenizer mode);

struct LoadOptions {
  Tokenizer tokenizer = Tokenizer::kWhitespace;
  const Vocabulary* vocab = nullptr;  // induce lexicographically when null
  int max_sentences_override = 0;    // >0 pins N when inducing
  int induced_cap = 64;              // induced N never exceeds this
};

struct LoadedCorpus {
  std::vector<Document> docs;
  Vocabulary vocab;
};

// Reads a JSON Lines corpus file. Errors carry the offending line number.
LoadedCorpus load_corpus(const std::string& path, const LoadOptions& opts = {});
void save_corpus(const std::string& path, const std::vector<Document>& docs);

// Occurrence of an argument as a contiguous token span.
struct SpanMatch {
  int sentence = 0;
  int start = 0;
  int length = 0;
};

std::vector<SpanMatch> find_occurrences(
    const std::vector<std::vector<std::string>>& sentences,
    const std::vector<std::string>& arg_tokens);

struct TagDerivation {
  std::vector<std::vector<int>> tags;
  int unmatched_records = 0;
  std::vector<std::string> warnings;
};

// BIO tags for every locatable occurrence of every gold argument.
// Overlaps resolve longest-match-first, then leftmost, then role order.
TagDerivation derive_bio_tags(const Document& doc, const Vocabulary& vocab,
                              Tokenizer mode);

// Runs derive_bio_tags over the corpus and stores the result on each
// document. Returns the total count of unmatchable records. Documents are
// independent, so `workers` > 1 fans the work out; warnings keep document
// order either way.
int annotate_gold_tags(std::vector<Document>& docs, const Vocabulary& vocab,
                       Tokenizer mode, std::vector<std::string>* warnings = nullptr,
                       int workers = 1);

struct SplitResult {
  std::vector<Document> train, dev, test;
  std::vector<std::string> warnings;
};

// Stratified (by gold type signature), seed-deterministic 3-way split.
SplitResult split_corpus(const std::vector<Document>& docs,
                         const std::array<double, 3>& ratios, uint64_t seed);

// Planted writing-style profile: per event type, a categorical distribution
// over sentence positions for every role.
struct SyntheticSpec {
  Vocabulary vocab;
  // profiles[event][role] = distribution over positions 0..N-1, sums to 1.
  std::map<std::string, std::map<std::string, std::vector<double>>> profiles;
  int sentences_per_doc = 0;  // 0 = vocab.max_sentences
  int filler_vocab_size = 50;
  int min_filler_tokens = 4;
  int max_filler_tokens = 8;
  int lexicon_size = 20;      // entity strings per role
  int entity_tokens = 1;      // tokens per entity string
  double multi_event_fraction = 0.0;
};

// Cyclically-shifted one-hot profiles: strongly separable styles for |E|
// event types over the shared role set.
SyntheticSpec make_separable_spec(int num_events, int num_roles, int n,
                                  int lexicon_size = 20);

std::vector<Document> generate_synthetic_corpus(const SyntheticSpec& spec,
                                                int n_docs, uint64_t seed);

}  // namespace rrdee
