#include "rrdee/tagger.hpp"

#include <cmath>

namespace rrdee {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Crf::Crf(const Vocabulary& vocab)
    : trans("crf.trans", vocab.num_tags() + 2, vocab.num_tags() + 2),
      num_tags(vocab.num_tags()) {
  const int k = num_tags;
  mask = MatrixXd::Zero(k + 2, k + 2);
  for (int to = 0; to < k; ++to) {
    if (to >= vocab.num_entity_tags() || Vocabulary::is_begin(to)) continue;
    // `to` is I-x: only B-x and I-x may precede.
    const int role = vocab.role_of_tag(to);
    for (int from = 0; from < k + 2; ++from) {
      const bool ok = from == vocab.begin_tag(role) || from == vocab.inside_tag(role);
      if (!ok) mask(from, to) = kNegInf;
    }
  }
  // start is never a destination, stop never a source.
  for (int i = 0; i < k + 2; ++i) {
    mask(i, start()) = kNegInf;
    mask(stop(), i) = kNegInf;
  }
}

std::vector<int> Crf::viterbi(const MatrixXd& emissions) const {
  const long t_len = emissions.rows();
  const int k = num_tags;
  if (t_len == 0) return {};

  MatrixXd score(t_len, k);
  Eigen::MatrixXi back(t_len, k);
  for (int j = 0; j < k; ++j) {
    score(0, j) = edge(start(), j) + emissions(0, j);
  }
  for (long t = 1; t < t_len; ++t) {
    for (int j = 0; j < k; ++j) {
      double best = score(t - 1, 0) + edge(0, j);
      int arg = 0;
      for (int i = 1; i < k; ++i) {
        double s = score(t - 1, i) + edge(i, j);
        if (s > best) {  // strict: ties keep the lowest tag index
          best = s;
          arg = i;
        }
      }
      score(t, j) = best + emissions(t, j);
      back(t, j) = arg;
    }
  }
  double best = score(t_len - 1, 0) + edge(0, stop());
  int last = 0;
  for (int j = 1; j < k; ++j) {
    double s = score(t_len - 1, j) + edge(j, stop());
    if (s > best) {
      best = s;
      last = j;
    }
  }
  std::vector<int> path(t_len);
  path[t_len - 1] = last;
  for (long t = t_len - 1; t > 0; --t) {
    path[t - 1] = back(t, path[t]);
  }
  return path;
}

double Crf::log_partition(const MatrixXd& emissions) const {
  const long t_len = emissions.rows();
  const int k = num_tags;
  if (t_len == 0) return 0.0;

  VectorXd alpha(k);
  for (int j = 0; j < k; ++j) alpha(j) = edge(start(), j) + emissions(0, j);
  VectorXd scores(k);
  for (long t = 1; t < t_len; ++t) {
    VectorXd next(k);
    for (int j = 0; j < k; ++j) {
      for (int i = 0; i < k; ++i) scores(i) = alpha(i) + edge(i, j);
      next(j) = nn::log_sum_exp(scores) + emissions(t, j);
    }
    alpha = next;
  }
  for (int j = 0; j < k; ++j) scores(j) = alpha(j) + edge(j, stop());
  return nn::log_sum_exp(scores);
}

double Crf::path_score(const MatrixXd& emissions, const std::vector<int>& path) const {
  if (path.empty()) return 0.0;
  double s = edge(start(), path[0]) + emissions(0, path[0]);
  for (size_t t = 1; t < path.size(); ++t) {
    s += edge(path[t - 1], path[t]) + emissions(static_cast<long>(t), path[t]);
  }
  s += edge(path.back(), stop());
  return s;
}

double Crf::nll(const MatrixXd& emissions, const std::vector<int>& gold,
                MatrixXd* d_emissions) {
  const long t_len = emissions.rows();
  const int k = num_tags;
  if (d_emissions) *d_emissions = MatrixXd::Zero(t_len, k);
  if (t_len == 0) return 0.0;

  // Forward and backward log messages.
  MatrixXd alpha(t_len, k), beta(t_len, k);
  VectorXd scores(k);
  for (int j = 0; j < k; ++j) alpha(0, j) = edge(start(), j) + emissions(0, j);
  for (long t = 1; t < t_len; ++t) {
    for (int j = 0; j < k; ++j) {
      for (int i = 0; i < k; ++i) scores(i) = alpha(t - 1, i) + edge(i, j);
      alpha(t, j) = nn::log_sum_exp(scores) + emissions(t, j);
    }
  }
  for (int i = 0; i < k; ++i) beta(t_len - 1, i) = edge(i, stop());
  for (long t = t_len - 2; t >= 0; --t) {
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        scores(j) = edge(i, j) + emissions(t + 1, j) + beta(t + 1, j);
      }
      beta(t, i) = nn::log_sum_exp(scores);
    }
  }
  for (int j = 0; j < k; ++j) scores(j) = alpha(t_len - 1, j) + edge(j, stop());
  const double log_z = nn::log_sum_exp(scores);
  const double gold_score = path_score(emissions, gold);

  if (d_emissions) {
    // Unary marginals minus gold indicators.
    for (long t = 0; t < t_len; ++t) {
      for (int j = 0; j < k; ++j) {
        (*d_emissions)(t, j) = std::exp(alpha(t, j) + beta(t, j) - log_z);
      }
      (*d_emissions)(t, gold[t]) -= 1.0;
    }
    // Pairwise marginals minus gold transition counts.
    for (int j = 0; j < k; ++j) {
      trans.grad(start(), j) += std::exp(alpha(0, j) + beta(0, j) - log_z);
      trans.grad(j, stop()) +=
          std::exp(alpha(t_len - 1, j) + edge(j, stop()) - log_z);
    }
    trans.grad(start(), gold[0]) -= 1.0;
    trans.grad(gold[t_len - 1], stop()) -= 1.0;
    for (long t = 0; t + 1 < t_len; ++t) {
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
          const double lp = alpha(t, i) + edge(i, j) + emissions(t + 1, j) +
                            beta(t + 1, j) - log_z;
          trans.grad(i, j) += std::exp(lp);
        }
      }
      trans.grad(gold[t], gold[t + 1]) -= 1.0;
    }
  }
  return log_z - gold_score;
}

Tagger::Tagger(const TaggerConfig& cfg_, const Vocabulary& vocab)
    : cfg(cfg_),
      encoder("tagger.encoder", cfg_.layers, cfg_.embed_dim, cfg_.hidden_dim,
              cfg_.dropout),
      emission("tagger.emission", cfg_.hidden_dim, vocab.num_tags()),
      crf(vocab) {}

void Tagger::init(nn::Rng& rng) {
  encoder.init(rng);
  emission.init(rng);
  crf.trans.value.setZero();
}

nn::ParamList Tagger::params() {
  nn::ParamList out = encoder.params();
  for (nn::Param* p : emission.params()) out.push_back(p);
  out.push_back(&crf.trans);
  return out;
}

MatrixXd Tagger::emissions_for(const nn::Embedding& embed,
                               const std::vector<int>& token_ids) const {
  MatrixXd x = embed.lookup(token_ids);
  MatrixXd h = encoder.forward(x, /*training=*/false, nullptr, nullptr);
  return emission.forward(h);
}

std::vector<std::vector<int>> Tagger::decode_document(
    const nn::Embedding& embed, const std::vector<std::vector<int>>& token_ids) const {
  std::vector<std::vector<int>> out;
  out.reserve(token_ids.size());
  for (const auto& sent : token_ids) {
    if (sent.empty()) {
      out.emplace_back();
      continue;
    }
    out.push_back(crf.viterbi(emissions_for(embed, sent)));
  }
  return out;
}

Tagger::TaggedDocument Tagger::tag_sentences(
    const nn::Embedding& embed, const std::vector<std::vector<int>>& token_ids) const {
  TaggedDocument out;
  out.tags.reserve(token_ids.size());
  out.emissions.reserve(token_ids.size());
  for (const auto& sent : token_ids) {
    if (sent.empty()) {
      out.tags.emplace_back();
      out.emissions.emplace_back(0, crf.num_tags);
      continue;
    }
    out.emissions.push_back(emissions_for(embed, sent));
    out.tags.push_back(crf.viterbi(out.emissions.back()));
  }
  return out;
}

double Tagger::document_loss(nn::Embedding& embed,
                             const std::vector<std::vector<int>>& token_ids,
                             const std::vector<std::vector<int>>& gold_tags,
                             bool training, nn::Rng* rng, double grad_scale) {
  if (token_ids.size() != gold_tags.size()) {
    throw DataError("document_loss: sentence/tag counts disagree");
  }
  double total = 0.0;
  for (size_t s = 0; s < token_ids.size(); ++s) {
    const auto& sent = token_ids[s];
    const auto& gold = gold_tags[s];
    if (sent.size() != gold.size()) {
      throw DataError("document_loss: sentence and tags are not length-aligned");
    }
    if (sent.empty()) continue;

    MatrixXd x = embed.lookup(sent);
    nn::BiLstmStack::Cache cache;
    MatrixXd h = encoder.forward(x, training, rng, &cache);
    MatrixXd em = emission.forward(h);

    MatrixXd d_em;
    if (cfg.crf_loss) {
      // Transition grads are accumulated unscaled inside nll; rescale the
      // contribution just made.
      MatrixXd before = crf.trans.grad;
      total += crf.nll(em, gold, &d_em);
      if (grad_scale != 1.0) {
        crf.trans.grad = before + grad_scale * (crf.trans.grad - before);
      }
    } else {
      d_em = MatrixXd::Zero(em.rows(), em.cols());
      for (long t = 0; t < em.rows(); ++t) {
        VectorXd p = nn::softmax(em.row(t).transpose());
        total -= std::log(p(gold[t]));
        d_em.row(t) = p.transpose();
        d_em(t, gold[t]) -= 1.0;
      }
    }
    if (grad_scale == 0.0) continue;
    d_em *= grad_scale;
    MatrixXd dh = emission.backward(h, d_em);
    MatrixXd dx = encoder.backward(cache, dh);
    embed.backward(sent, dx);
  }
  return total;
}

}  // namespace rrdee
