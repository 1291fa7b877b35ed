#pragma once

#include <vector>

#include "rrdee/corpus.hpp"
#include "rrdee/nn.hpp"

namespace rrdee {

struct ClassifierConfig {
  int conv_channels = 128;
  int kernel = 3;
  int max_tokens = 1024;
};

// Document-level event scorer: concatenated token stream -> two ReLU conv
// layers -> max-pool over positions -> affine to |E| logits.
struct EventClassifier {
  ClassifierConfig cfg;
  nn::Conv1d conv1, conv2;
  nn::Linear proj;

  EventClassifier() = default;
  EventClassifier(const ClassifierConfig& cfg, int embed_dim, int num_events);

  void init(nn::Rng& rng);
  nn::ParamList params();

  struct Cache {
    std::vector<int> token_ids;
    Eigen::MatrixXd x;            // T x D embeddings
    Eigen::MatrixXd pre1, act1;   // conv1 pre/post ReLU
    Eigen::MatrixXd pre2, act2;   // conv2 pre/post ReLU
    Eigen::VectorXd pooled;       // C
    std::vector<long> arg_max;    // pooling winners per channel
  };

  // Logits V for one document. Throws on documents with no tokens.
  Eigen::VectorXd forward(const nn::Embedding& embed,
                          const std::vector<std::vector<int>>& token_ids,
                          Cache* cache = nullptr) const;

  void backward(nn::Embedding& embed, const Cache& cache,
                const Eigen::VectorXd& d_logits);
};

}  // namespace rrdee
