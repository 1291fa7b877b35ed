#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "rrdee/nn.hpp"
#include "rrdee/role_rank.hpp"

namespace rrdee {

// Similarity between an observed role-rank matrix and a reference slice.
// Cosine is the default; anything with the same signature plugs in.
using SimilarityFn =
    std::function<double(const Eigen::MatrixXd&, const Eigen::MatrixXd&)>;

// Frobenius cosine: flatten-and-dot over matrix entries, 0 when either
// side has zero norm.
double frobenius_cosine(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Correct-annotation likelihood per event type: l_e = sim(P', P_e).
Eigen::VectorXd correct_annotation_likelihood(const Eigen::MatrixXd& p_obs,
                                              const RoleRankDistribution& p,
                                              const SimilarityFn& sim = frobenius_cosine);

// Q = P' W'  (N x |E|).
Eigen::MatrixXd role_event_projection(const Eigen::MatrixXd& p_obs,
                                      const RoleEventTransition& wp);

// a_e = row_softmax(P' P_e^T / sqrt(|R|)) Q  (N x |E|).
Eigen::MatrixXd event_attention(const Eigen::MatrixXd& p_obs,
                                const Eigen::MatrixXd& p_e, const Eigen::MatrixXd& q);

// Row-major flatten of each a_e, concatenated in event order.
Eigen::VectorXd concat_attention(const std::vector<Eigen::MatrixXd>& per_event);

// The trainable linear head producing the fused attention vector A.
struct FusionParameters {
  nn::Param weight;  // |E| x (|E| * N * |E|)
  nn::Param bias;    // |E| x 1

  FusionParameters() = default;
  FusionParameters(int num_events, int max_sentences);

  int num_events() const { return static_cast<int>(weight.value.rows()); }
  long input_size() const { return weight.value.cols(); }

  void init(nn::Rng& rng);
  nn::ParamList params() { return {&weight, &bias}; }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  // Accumulates grads for a given concat input; x is a constant here.
  void backward(const Eigen::VectorXd& x, const Eigen::VectorXd& d_fused);
};

// Convenience: run Eqs. 5-7 for one document.
Eigen::VectorXd attention_fusion(const Eigen::MatrixXd& p_obs, const RrdArtifact& art,
                                 const FusionParameters& fusion,
                                 Eigen::VectorXd* concat_out = nullptr);

// softmax(l .* A .* V): the revised event distribution.
Eigen::VectorXd revised_event_scores(const Eigen::VectorXd& likelihood,
                                     const Eigen::VectorXd& fused,
                                     const Eigen::VectorXd& logits);

// Cross-entropy of the revised distribution against an oracle target that
// sums to 1. On return, d_logits and d_fused hold the analytic gradients
// (likelihood is a constant of the current tagging).
double revised_cross_entropy(const Eigen::VectorXd& likelihood,
                             const Eigen::VectorXd& fused,
                             const Eigen::VectorXd& logits,
                             const Eigen::VectorXd& target,
                             Eigen::VectorXd* d_logits = nullptr,
                             Eigen::VectorXd* d_fused = nullptr);

}  // namespace rrdee
