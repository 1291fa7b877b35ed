#pragma once

#include <vector>

#include "rrdee/corpus.hpp"
#include "rrdee/nn.hpp"

namespace rrdee {

// Linear-chain CRF over BIO tags with virtual start/stop states.
// Structurally invalid transitions (O -> I-x, B-x -> I-y, start -> I-x)
// carry an additive -inf-equivalent mask, so decoded paths are always
// BIO-valid and masked transitions receive exactly zero gradient.
struct Crf {
  nn::Param trans;        // (K+2) x (K+2), start = K, stop = K+1
  Eigen::MatrixXd mask;   // 0 where allowed, kNegInf where banned
  int num_tags = 0;

  static constexpr double kNegInf = -1e30;

  Crf() = default;
  explicit Crf(const Vocabulary& vocab);

  int start() const { return num_tags; }
  int stop() const { return num_tags + 1; }
  double edge(int from, int to) const { return trans.value(from, to) + mask(from, to); }

  std::vector<int> viterbi(const Eigen::MatrixXd& emissions) const;
  double log_partition(const Eigen::MatrixXd& emissions) const;
  double path_score(const Eigen::MatrixXd& emissions, const std::vector<int>& path) const;

  // Negative log-likelihood of the gold path. Accumulates the transition
  // gradient and writes the emission gradient.
  double nll(const Eigen::MatrixXd& emissions, const std::vector<int>& gold,
             Eigen::MatrixXd* d_emissions);
};

struct TaggerConfig {
  int embed_dim = 128;
  int hidden_dim = 768;  // total over both directions
  int layers = 4;
  double dropout = 0.5;
  bool crf_loss = true;  // false = literal per-token cross-entropy
};

// Sentence-level sequence labeler: embeddings -> stacked BiLSTM -> per-tag
// emissions -> CRF.
struct Tagger {
  TaggerConfig cfg;
  nn::BiLstmStack encoder;
  nn::Linear emission;
  Crf crf;

  Tagger() = default;
  Tagger(const TaggerConfig& cfg, const Vocabulary& vocab);

  void init(nn::Rng& rng);
  nn::ParamList params();

  // Viterbi decode of every sentence (eval mode, deterministic).
  std::vector<std::vector<int>> decode_document(const nn::Embedding& embed,
                                                const std::vector<std::vector<int>>& token_ids) const;

  // Emission scores for one sentence in eval mode.
  Eigen::MatrixXd emissions_for(const nn::Embedding& embed,
                                const std::vector<int>& token_ids) const;

  struct TaggedDocument {
    std::vector<std::vector<int>> tags;
    std::vector<Eigen::MatrixXd> emissions;  // per sentence, T x |Y|
  };

  // Decoded tags together with the raw per-token tag scores.
  TaggedDocument tag_sentences(const nn::Embedding& embed,
                               const std::vector<std::vector<int>>& token_ids) const;

  // L1 over a document's sentences against gold tags; backpropagates into
  // the tagger parameters and the embedding. `grad_scale` multiplies the
  // loss gradient seed (the (1-lambda) joint weight).
  double document_loss(nn::Embedding& embed, const std::vector<std::vector<int>>& token_ids,
                       const std::vector<std::vector<int>>& gold_tags, bool training,
                       nn::Rng* rng, double grad_scale);
};

}  // namespace rrdee
