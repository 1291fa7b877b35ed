#include "rrdee/event_classifier.hpp"

namespace rrdee {

using Eigen::MatrixXd;
using Eigen::VectorXd;

EventClassifier::EventClassifier(const ClassifierConfig& cfg_, int embed_dim,
                                 int num_events)
    : cfg(cfg_),
      conv1("clf.conv1", embed_dim, cfg_.conv_channels, cfg_.kernel),
      conv2("clf.conv2", cfg_.conv_channels, cfg_.conv_channels, cfg_.kernel),
      proj("clf.proj", cfg_.conv_channels, num_events) {}

void EventClassifier::init(nn::Rng& rng) {
  conv1.init(rng);
  conv2.init(rng);
  proj.init(rng);
}

nn::ParamList EventClassifier::params() {
  nn::ParamList out = conv1.params();
  for (nn::Param* p : conv2.params()) out.push_back(p);
  for (nn::Param* p : proj.params()) out.push_back(p);
  return out;
}

VectorXd EventClassifier::forward(const nn::Embedding& embed,
                                  const std::vector<std::vector<int>>& token_ids,
                                  Cache* cache) const {
  std::vector<int> stream;
  for (const auto& sent : token_ids) {
    for (int id : sent) {
      if (static_cast<int>(stream.size()) >= cfg.max_tokens) break;
      stream.push_back(id);
    }
  }
  if (stream.empty()) throw DataError("event classifier: empty document");

  MatrixXd x = embed.lookup(stream);
  MatrixXd pre1 = conv1.forward(x);
  MatrixXd act1 = pre1.cwiseMax(0.0);
  MatrixXd pre2 = conv2.forward(act1);
  MatrixXd act2 = pre2.cwiseMax(0.0);

  const int channels = cfg.conv_channels;
  VectorXd pooled(channels);
  std::vector<long> arg_max(channels);
  for (int ch = 0; ch < channels; ++ch) {
    long best = 0;
    for (long t = 1; t < act2.rows(); ++t) {
      if (act2(t, ch) > act2(best, ch)) best = t;  // ties keep earliest
    }
    arg_max[ch] = best;
    pooled(ch) = act2(best, ch);
  }
  VectorXd logits = proj.forward_vec(pooled);

  if (cache) {
    cache->token_ids = std::move(stream);
    cache->x = std::move(x);
    cache->pre1 = std::move(pre1);
    cache->act1 = std::move(act1);
    cache->pre2 = std::move(pre2);
    cache->act2 = std::move(act2);
    cache->pooled = std::move(pooled);
    cache->arg_max = std::move(arg_max);
  }
  return logits;
}

void EventClassifier::backward(nn::Embedding& embed, const Cache& cache,
                               const VectorXd& d_logits) {
  VectorXd d_pooled = proj.backward_vec(cache.pooled, d_logits);

  MatrixXd d_act2 = MatrixXd::Zero(cache.act2.rows(), cache.act2.cols());
  for (int ch = 0; ch < d_pooled.size(); ++ch) {
    d_act2(cache.arg_max[ch], ch) = d_pooled(ch);
  }
  MatrixXd d_pre2 =
      d_act2.cwiseProduct((cache.pre2.array() > 0.0).cast<double>().matrix());
  MatrixXd d_act1 = conv2.backward(cache.act1, d_pre2);
  MatrixXd d_pre1 =
      d_act1.cwiseProduct((cache.pre1.array() > 0.0).cast<double>().matrix());
  MatrixXd dx = conv1.backward(cache.x, d_pre1);
  embed.backward(cache.token_ids, dx);
}

}  // namespace rrdee
