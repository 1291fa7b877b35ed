#include "rrdee/model.hpp"

#include <algorithm>
#include <set>

#include "rrdee/evaluation.hpp"
#include "rrdee/tensor_io.hpp"

namespace rrdee {

TokenVocab TokenVocab::build(const std::vector<Document>& docs) {
  std::set<std::string> uniq;
  for (const auto& doc : docs) {
    for (const auto& sent : doc.sentences) {
      uniq.insert(sent.begin(), sent.end());
    }
  }
  std::vector<std::string> tokens{"<unk>"};
  tokens.insert(tokens.end(), uniq.begin(), uniq.end());
  return from_tokens(std::move(tokens));
}

TokenVocab TokenVocab::from_tokens(std::vector<std::string> tokens) {
  TokenVocab v;
  v.id_to_token = std::move(tokens);
  for (int i = 0; i < static_cast<int>(v.id_to_token.size()); ++i) {
    v.token_to_id.emplace(v.id_to_token[i], i);
  }
  return v;
}

int TokenVocab::id(const std::string& token) const {
  auto it = token_to_id.find(token);
  return it == token_to_id.end() ? 0 : it->second;
}

std::vector<std::vector<int>> TokenVocab::encode(const Document& doc) const {
  std::vector<std::vector<int>> out;
  out.reserve(doc.sentences.size());
  for (const auto& sent : doc.sentences) {
    std::vector<int> ids;
    ids.reserve(sent.size());
    for (const auto& tok : sent) ids.push_back(id(tok));
    out.push_back(std::move(ids));
  }
  return out;
}

Model::Model(const ModelConfig& cfg_, const Vocabulary& vocab_, TokenVocab tokens_,
             Tokenizer tokenizer_, uint64_t seed)
    : cfg(cfg_),
      vocab(vocab_),
      tokens(std::move(tokens_)),
      tokenizer(tokenizer_),
      embed(tokens.size(), cfg_.tagger.embed_dim),
      tagger(cfg_.tagger, vocab_),
      classifier(cfg_.classifier,
                 cfg_.share_embeddings
                     ? cfg_.tagger.embed_dim
                     : (cfg_.clf_embed_dim > 0 ? cfg_.clf_embed_dim
                                               : cfg_.tagger.embed_dim),
                 vocab_.num_events()),
      fusion(vocab_.num_events(), vocab_.max_sentences) {
  nn::Rng rng(seed);
  nn::uniform_init(embed.table, rng, 0.1);
  if (!cfg.share_embeddings) {
    const int dim = cfg.clf_embed_dim > 0 ? cfg.clf_embed_dim : cfg.tagger.embed_dim;
    clf_embed = nn::Embedding(tokens.size(), dim);
    clf_embed.table.name = "clf_embedding";
    nn::uniform_init(clf_embed.table, rng, 0.1);
  }
  tagger.init(rng);
  classifier.init(rng);
  fusion.init(rng);
}

nn::Embedding& Model::classifier_embedding() {
  return cfg.share_embeddings ? embed : clf_embed;
}
const nn::Embedding& Model::classifier_embedding() const {
  return cfg.share_embeddings ? embed : clf_embed;
}

nn::ParamList Model::params() {
  nn::ParamList out{&embed.table};
  if (!cfg.share_embeddings) out.push_back(&clf_embed.table);
  for (nn::Param* p : tagger.params()) out.push_back(p);
  for (nn::Param* p : classifier.params()) out.push_back(p);
  for (nn::Param* p : fusion.params()) out.push_back(p);
  return out;
}

nn::ParamList Model::tagger_params() { return tagger.params(); }

nn::ParamList Model::supervision_params() {
  nn::ParamList out = classifier.params();
  for (nn::Param* p : fusion.params()) out.push_back(p);
  return out;
}

std::vector<std::string> DocPrediction::types_above(double tau,
                                                    const Vocabulary& vocab) const {
  std::vector<std::string> out{event_type};
  for (int e = 0; e < vocab.num_events(); ++e) {
    if (revised(e) > tau && vocab.events[e] != event_type) {
      out.push_back(vocab.events[e]);
    }
  }
  return out;
}

DocPrediction predict_document(const Model& model, const RrdArtifact& art,
                               const Document& doc) {
  DocPrediction pred;
  auto token_ids = model.tokens.encode(doc);
  pred.tags = model.tagger.decode_document(model.embed, token_ids);

  Eigen::MatrixXd tag_positions = count_tag_positions(pred.tags, model.vocab);
  pred.observed = tags_to_roles(tag_positions, art.tag_role);
  pred.likelihood = correct_annotation_likelihood(pred.observed, art.rrd);
  pred.fused = attention_fusion(pred.observed, art, model.fusion);
  pred.logits = model.classifier.forward(model.classifier_embedding(), token_ids);
  pred.revised = revised_event_scores(pred.likelihood, pred.fused, pred.logits);

  int best = 0;
  for (int e = 1; e < model.vocab.num_events(); ++e) {
    if (pred.revised(e) > pred.revised(best)) best = e;
  }
  pred.event_type = model.vocab.events[best];
  pred.table = assemble_event_table(doc, pred.tags, pred.event_type, model.vocab,
                                    model.tokenizer);
  return pred;
}

namespace {

nlohmann::ordered_json model_config_json(const ModelConfig& cfg) {
  return {{"embed_dim", cfg.tagger.embed_dim},
          {"hidden_dim", cfg.tagger.hidden_dim},
          {"layers", cfg.tagger.layers},
          {"dropout", cfg.tagger.dropout},
          {"crf_loss", cfg.tagger.crf_loss},
          {"conv_channels", cfg.classifier.conv_channels},
          {"kernel", cfg.classifier.kernel},
          {"max_tokens", cfg.classifier.max_tokens},
          {"share_embeddings", cfg.share_embeddings},
          {"clf_embed_dim", cfg.clf_embed_dim}};
}

ModelConfig model_config_from_json(const nlohmann::ordered_json& j) {
  ModelConfig cfg;
  cfg.tagger.embed_dim = j["embed_dim"].get<int>();
  cfg.tagger.hidden_dim = j["hidden_dim"].get<int>();
  cfg.tagger.layers = j["layers"].get<int>();
  cfg.tagger.dropout = j["dropout"].get<double>();
  cfg.tagger.crf_loss = j["crf_loss"].get<bool>();
  cfg.classifier.conv_channels = j["conv_channels"].get<int>();
  cfg.classifier.kernel = j["kernel"].get<int>();
  cfg.classifier.max_tokens = j["max_tokens"].get<int>();
  cfg.share_embeddings = j["share_embeddings"].get<bool>();
  cfg.clf_embed_dim = j["clf_embed_dim"].get<int>();
  return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, Model& model, int epoch,
                     const std::string& rng_state, const std::string& rrd_ref,
                     const nlohmann::ordered_json& extra_config) {
  Container c;
  c.meta["kind"] = "checkpoint";
  c.meta["version"] = 1;
  c.meta["epoch"] = epoch;
  c.meta["rng_state"] = rng_state;
  c.meta["rrd_ref"] = rrd_ref;
  c.meta["model_config"] = model_config_json(model.cfg);
  c.meta["extra_config"] = extra_config;
  c.meta["events"] = model.vocab.events;
  c.meta["roles"] = model.vocab.roles;
  c.meta["N"] = model.vocab.max_sentences;
  c.meta["tokens"] = model.tokens.id_to_token;
  c.meta["tokenizer"] =
      model.tokenizer == Tokenizer::kWhitespace ? "whitespace" : "character";

  for (nn::Param* p : model.params()) {
    c.arrays.push_back(NamedArray::from_matrix(p->name, p->value));
  }
  save_container(path, c);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  Container c = load_container(path);
  if (!c.meta.contains("kind") || c.meta["kind"] != "checkpoint") {
    throw DataError(path + " is not a checkpoint");
  }
  LoadedCheckpoint out;
  out.epoch = c.meta["epoch"].get<int>();
  out.rng_state = c.meta["rng_state"].get<std::string>();
  out.rrd_ref = c.meta["rrd_ref"].get<std::string>();
  out.extra_config = c.meta["extra_config"];

  ModelConfig cfg = model_config_from_json(c.meta["model_config"]);
  Vocabulary vocab(c.meta["events"].get<std::vector<std::string>>(),
                   c.meta["roles"].get<std::vector<std::string>>(),
                   c.meta["N"].get<int>());
  TokenVocab tokens =
      TokenVocab::from_tokens(c.meta["tokens"].get<std::vector<std::string>>());
  Tokenizer tok = c.meta["tokenizer"] == "character" ? Tokenizer::kCharacter
                                                     : Tokenizer::kWhitespace;
  out.model = Model(cfg, vocab, std::move(tokens), tok, /*seed=*/0);
  for (nn::Param* p : out.model.params()) {
    Eigen::MatrixXd value = c.array(p->name).to_matrix();
    if (value.rows() != p->value.rows() || value.cols() != p->value.cols()) {
      throw DataError("checkpoint parameter " + p->name + " has wrong shape");
    }
    p->value = std::move(value);
  }
  return out;
}

}  // namespace rrdee
