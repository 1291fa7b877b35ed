#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "rrdee/corpus.hpp"
#include "rrdee/event_classifier.hpp"
#include "rrdee/role_rank.hpp"
#include "rrdee/supervision.hpp"
#include "rrdee/tagger.hpp"

namespace rrdee {

// Token-id mapping built from training tokens; id 0 is the UNK entry.
struct TokenVocab {
  std::vector<std::string> id_to_token;  // [0] = "<unk>"
  std::unordered_map<std::string, int> token_to_id;

  static TokenVocab build(const std::vector<Document>& docs);
  static TokenVocab from_tokens(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(id_to_token.size()); }
  int id(const std::string& token) const;
  std::vector<std::vector<int>> encode(const Document& doc) const;
};

struct ModelConfig {
  TaggerConfig tagger;
  ClassifierConfig classifier;
  bool share_embeddings = true;
  int clf_embed_dim = 0;  // separate table width; 0 = tagger embed_dim
};

// Everything trainable, plus the vocabularies that fix tensor axes.
struct Model {
  ModelConfig cfg;
  Vocabulary vocab;
  TokenVocab tokens;
  Tokenizer tokenizer = Tokenizer::kWhitespace;

  nn::Embedding embed;            // tagger table (shared by default)
  nn::Embedding clf_embed;        // used only when share_embeddings is false
  Tagger tagger;
  EventClassifier classifier;
  FusionParameters fusion;

  Model() = default;
  Model(const ModelConfig& cfg, const Vocabulary& vocab, TokenVocab tokens,
        Tokenizer tokenizer, uint64_t seed);

  nn::Embedding& classifier_embedding();
  const nn::Embedding& classifier_embedding() const;

  nn::ParamList params();
  nn::ParamList tagger_params();       // encoder + emission + CRF (no embedding)
  nn::ParamList supervision_params();  // classifier + fusion
};

// Full pipeline output for one document.
struct DocPrediction {
  std::vector<std::vector<int>> tags;
  Eigen::MatrixXd observed;       // P' (N x |R|)
  Eigen::VectorXd likelihood;     // l
  Eigen::VectorXd fused;          // A
  Eigen::VectorXd logits;         // V
  Eigen::VectorXd revised;        // softmax(l .* A .* V)
  std::string event_type;         // argmax, ties to the first event
  EventTable table;

  // Thresholded multi-type reading: argmax plus every type with
  // probability strictly above tau.
  std::vector<std::string> types_above(double tau, const Vocabulary& vocab) const;
};

DocPrediction predict_document(const Model& model, const RrdArtifact& art,
                               const Document& doc);

// Checkpoint: parameter groups + vocabulary + config + epoch + RNG state.
void save_checkpoint(const std::string& path, Model& model, int epoch,
                     const std::string& rng_state, const std::string& rrd_ref,
                     const nlohmann::ordered_json& extra_config = {});
struct LoadedCheckpoint {
  Model model;
  int epoch = 0;
  std::string rng_state;
  std::string rrd_ref;
  nlohmann::ordered_json extra_config;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace rrdee
