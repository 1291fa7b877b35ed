#include "rrdee/supervision.hpp"

#include <cmath>

namespace rrdee {

double frobenius_cosine(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DataError("similarity: shape mismatch");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.cwiseProduct(b).sum() / (na * nb);
}

Eigen::VectorXd correct_annotation_likelihood(const Eigen::MatrixXd& p_obs,
                                              const RoleRankDistribution& p,
                                              const SimilarityFn& sim) {
  Eigen::VectorXd l(p.num_events());
  for (int e = 0; e < p.num_events(); ++e) {
    l(e) = sim(p_obs, p.slices[e]);
  }
  return l;
}

Eigen::MatrixXd role_event_projection(const Eigen::MatrixXd& p_obs,
                                      const RoleEventTransition& wp) {
  if (p_obs.cols() != wp.values.rows()) {
    throw DataError("role_event_projection: inner dimensions disagree");
  }
  return p_obs * wp.values;
}

Eigen::MatrixXd event_attention(const Eigen::MatrixXd& p_obs,
                                const Eigen::MatrixXd& p_e, const Eigen::MatrixXd& q) {
  if (p_obs.rows() != p_e.rows() || p_obs.cols() != p_e.cols() ||
      q.rows() != p_obs.rows()) {
    throw DataError("event_attention: shape mismatch");
  }
  const double scale = std::sqrt(static_cast<double>(p_obs.cols()));
  Eigen::MatrixXd scores = p_obs * p_e.transpose() / scale;
  return nn::row_softmax(scores) * q;
}

Eigen::VectorXd concat_attention(const std::vector<Eigen::MatrixXd>& per_event) {
  long total = 0;
  for (const auto& a : per_event) total += a.size();
  Eigen::VectorXd x(total);
  long pos = 0;
  for (const auto& a : per_event) {
    for (long r = 0; r < a.rows(); ++r) {
      for (long c = 0; c < a.cols(); ++c) x(pos++) = a(r, c);
    }
  }
  return x;
}

FusionParameters::FusionParameters(int num_events, int max_sentences)
    : weight("fusion.weight", num_events,
             static_cast<long>(num_events) * max_sentences * num_events),
      bias("fusion.bias", num_events, 1) {}

void FusionParameters::init(nn::Rng& rng) {
  nn::uniform_init(weight, rng, 0.01);
  // Bias of one makes the fused vector start as the multiplicative identity
  // in l .* A .* V, so the classifier path has gradient from the first step.
  bias.value.setOnes();
}

Eigen::VectorXd FusionParameters::forward(const Eigen::VectorXd& x) const {
  if (x.size() != weight.value.cols()) {
    throw DataError("fusion: concatenated attention has wrong size");
  }
  return weight.value * x + bias.value.col(0);
}

void FusionParameters::backward(const Eigen::VectorXd& x,
                                const Eigen::VectorXd& d_fused) {
  weight.grad += d_fused * x.transpose();
  bias.grad.col(0) += d_fused;
}

Eigen::VectorXd attention_fusion(const Eigen::MatrixXd& p_obs, const RrdArtifact& art,
                                 const FusionParameters& fusion,
                                 Eigen::VectorXd* concat_out) {
  Eigen::MatrixXd q = role_event_projection(p_obs, art.role_event);
  std::vector<Eigen::MatrixXd> per_event;
  per_event.reserve(art.rrd.num_events());
  for (int e = 0; e < art.rrd.num_events(); ++e) {
    per_event.push_back(event_attention(p_obs, art.rrd.slices[e], q));
  }
  Eigen::VectorXd x = concat_attention(per_event);
  if (concat_out) *concat_out = x;
  return fusion.forward(x);
}

Eigen::VectorXd revised_event_scores(const Eigen::VectorXd& likelihood,
                                     const Eigen::VectorXd& fused,
                                     const Eigen::VectorXd& logits) {
  if (likelihood.size() != fused.size() || fused.size() != logits.size()) {
    throw DataError("revised_event_scores: vector lengths disagree");
  }
  if (!likelihood.allFinite() || !fused.allFinite() || !logits.allFinite()) {
    throw DataError("revised_event_scores: non-finite input");
  }
  Eigen::VectorXd z = likelihood.cwiseProduct(fused).cwiseProduct(logits);
  return nn::softmax(z);
}

double revised_cross_entropy(const Eigen::VectorXd& likelihood,
                             const Eigen::VectorXd& fused,
                             const Eigen::VectorXd& logits,
                             const Eigen::VectorXd& target,
                             Eigen::VectorXd* d_logits, Eigen::VectorXd* d_fused) {
  Eigen::VectorXd probs = revised_event_scores(likelihood, fused, logits);
  double loss = 0.0;
  for (long e = 0; e < target.size(); ++e) {
    if (target(e) > 0) loss -= target(e) * std::log(probs(e));
  }
  Eigen::VectorXd dz = probs - target;
  if (d_logits) *d_logits = dz.cwiseProduct(likelihood).cwiseProduct(fused);
  if (d_fused) *d_fused = dz.cwiseProduct(likelihood).cwiseProduct(logits);
  return loss;
}

}  // namespace rrdee
