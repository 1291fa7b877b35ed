#include "rrdee/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "rrdee/evaluation.hpp"

namespace rrdee {

void TrainConfig::validate() const {
  if (lambda < 0.0 || lambda > 1.0) throw TrainingError("lambda must be in [0,1]");
  if (lr <= 0.0) throw TrainingError("learning rate must be positive");
  if (batch_size < 1) throw TrainingError("batch size must be >= 1");
  if (epochs < 0) throw TrainingError("epochs must be >= 0");
}

double event_identification_loss(const Eigen::VectorXd& likelihood,
                                 const Eigen::VectorXd& fused,
                                 const Eigen::VectorXd& logits,
                                 const Eigen::VectorXd& target,
                                 Eigen::VectorXd* d_logits,
                                 Eigen::VectorXd* d_fused) {
  return revised_cross_entropy(likelihood, fused, logits, target, d_logits, d_fused);
}

Eigen::VectorXd event_target(const Document& doc, const Vocabulary& vocab) {
  auto types = doc.gold_types();
  std::vector<int> ids;
  for (const auto& t : types) {
    int e = vocab.event_id(t);
    if (e >= 0) ids.push_back(e);
  }
  if (ids.empty()) return {};
  Eigen::VectorXd target = Eigen::VectorXd::Zero(vocab.num_events());
  for (int e : ids) target(e) = 1.0 / static_cast<double>(ids.size());
  return target;
}

double joint_loss(double l1, double l2, double lambda) {
  return (1.0 - lambda) * l1 + lambda * l2;
}

Prf evaluate_records(const Model& model, const RrdArtifact& art,
                     const std::vector<Document>& docs) {
  MatchResult all;
  for (const auto& doc : docs) {
    DocPrediction pred = predict_document(model, art, doc);
    all += match_document({pred.table}, doc.gold_tables);
  }
  double p = 0, r = 0, f = 0;
  int active = 0;
  for (const auto& [type, counts] : all.per_type) {
    if (counts.tp + counts.fp + counts.fn == 0) continue;
    Prf scores = prf(counts);
    p += scores.p;
    r += scores.r;
    f += scores.f1;
    ++active;
  }
  if (active == 0) return {};
  return {p / active, r / active, f / active};
}

namespace {

// One document's contribution to the joint loss and all gradients.
// P' comes from the current tagger's hard decode and is a constant of the
// step, so the L2 gradient reaches only V and the fusion parameters.
struct StepLosses {
  double l1 = 0;
  double l2 = 0;
};

StepLosses document_step(Model& model, const RrdArtifact& art, const Document& doc,
                         const std::vector<std::vector<int>>& token_ids,
                         double lambda, nn::Rng& rng,
                         std::vector<std::string>* warnings) {
  StepLosses out;
  if (!doc.gold_tags) {
    throw TrainingError("document " + doc.doc_id + " has no gold tags");
  }

  out.l1 = model.tagger.document_loss(model.embed, token_ids, *doc.gold_tags,
                                      /*training=*/true, &rng, 1.0 - lambda);

  if (lambda > 0.0) {
    Eigen::VectorXd target = event_target(doc, model.vocab);
    if (target.size() == 0) {
      if (warnings) {
        warnings->push_back("doc " + doc.doc_id +
                            " has no gold event type; skipped in L2");
      }
      return out;
    }
    auto tags = model.tagger.decode_document(model.embed, token_ids);
    Eigen::MatrixXd tag_positions = count_tag_positions(tags, model.vocab);
    Eigen::MatrixXd observed = tags_to_roles(tag_positions, art.tag_role);
    Eigen::VectorXd likelihood = correct_annotation_likelihood(observed, art.rrd);
    Eigen::VectorXd concat;
    Eigen::VectorXd fused = attention_fusion(observed, art, model.fusion, &concat);

    EventClassifier::Cache clf_cache;
    Eigen::VectorXd logits =
        model.classifier.forward(model.classifier_embedding(), token_ids, &clf_cache);

    Eigen::VectorXd d_logits, d_fused;
    out.l2 = event_identification_loss(likelihood, fused, logits, target, &d_logits,
                                       &d_fused);
    model.classifier.backward(model.classifier_embedding(), clf_cache,
                              lambda * d_logits);
    model.fusion.backward(concat, lambda * d_fused);
  }
  return out;
}

}  // namespace

TrainResult train(Model& model, const TrainConfig& cfg,
                  const std::vector<Document>& train_docs,
                  const std::vector<Document>& dev_docs, const RrdArtifact& art) {
  cfg.validate();
  if (train_docs.empty()) throw TrainingError("empty training set");

  nn::Rng rng(cfg.seed);
  nn::ParamList params = model.params();
  nn::Adam adam(params, cfg.lr);

  std::vector<std::vector<std::vector<int>>> encoded;
  encoded.reserve(train_docs.size());
  for (const auto& doc : train_docs) encoded.push_back(model.tokens.encode(doc));

  std::vector<int> order(train_docs.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  // Without a dev set there is no selection criterion: the final epoch wins
  // and early stopping is off.
  const bool track_best = !dev_docs.empty();
  std::vector<Eigen::MatrixXd> best_values;
  double best_f1 = -1.0;
  int best_epoch = 0;
  int stale = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine);
    double epoch_l1 = 0, epoch_l2 = 0;

    for (size_t begin = 0; begin < order.size();
         begin += static_cast<size_t>(cfg.batch_size)) {
      const size_t end =
          std::min(order.size(), begin + static_cast<size_t>(cfg.batch_size));
      nn::zero_grads(params);
      double batch_l1 = 0, batch_l2 = 0;
      std::vector<std::string> batch_ids;
      for (size_t k = begin; k < end; ++k) {
        const int idx = order[k];
        batch_ids.push_back(train_docs[idx].doc_id);
        StepLosses losses =
            document_step(model, art, train_docs[idx], encoded[idx], cfg.lambda, rng,
                          epoch == 1 ? &result.warnings : nullptr);
        batch_l1 += losses.l1;
        batch_l2 += losses.l2;
      }
      if (!std::isfinite(batch_l1) || !std::isfinite(batch_l2)) {
        std::ostringstream os;
        os << "non-finite loss (L1=" << batch_l1 << ", L2=" << batch_l2
           << ") in epoch " << epoch << ", batch docs:";
        for (const auto& id : batch_ids) os << " " << id;
        throw TrainingError(os.str());
      }
      nn::clip_global_norm(params, cfg.clip_norm);
      adam.step(params);
      epoch_l1 += batch_l1;
      epoch_l2 += batch_l2;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.l1 = epoch_l1;
    stats.l2 = epoch_l2;
    stats.loss = joint_loss(epoch_l1, epoch_l2, cfg.lambda);
    if (!dev_docs.empty()) {
      Prf dev = evaluate_records(model, art, dev_docs);
      stats.dev_p = dev.p;
      stats.dev_r = dev.r;
      stats.dev_f1 = dev.f1;
    }
    result.history.push_back(stats);

    if (!track_best) {
      best_epoch = epoch;
      continue;
    }
    if (stats.dev_f1 > best_f1 || best_values.empty()) {
      best_f1 = stats.dev_f1;
      best_epoch = epoch;
      stale = 0;
      best_values.clear();
      for (nn::Param* p : params) best_values.push_back(p->value);
    } else if (++stale >= cfg.patience && cfg.early_stopping) {
      break;
    }
  }

  if (track_best && !best_values.empty()) {
    for (size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
  }
  result.best_epoch = best_epoch;
  result.best_dev_f1 = std::max(best_f1, 0.0);
  result.rng_state = rng.state();
  return result;
}

std::vector<double> lambda_grid(double start, double end, double step) {
  std::vector<double> grid;
  for (int i = 0;; ++i) {
    double v = start + i * step;
    if (v > end + 1e-12) break;
    grid.push_back(std::min(v, end));
  }
  return grid;
}

std::vector<SweepRow> sweep_lambda(const ModelConfig& model_cfg,
                                   const TrainConfig& base,
                                   const std::vector<double>& grid,
                                   const std::vector<Document>& train_docs,
                                   const std::vector<Document>& dev_docs,
                                   const RrdArtifact& art, Tokenizer tokenizer) {
  if (grid.empty()) throw TrainingError("empty lambda grid");
  std::vector<SweepRow> rows;
  TokenVocab tokens = TokenVocab::build(train_docs);
  for (double lambda : grid) {
    SweepRow row;
    row.lambda = lambda;
    try {
      Model model(model_cfg, art.vocab, tokens, tokenizer, base.seed);
      TrainConfig cfg = base;
      cfg.lambda = lambda;
      train(model, cfg, train_docs, dev_docs, art);
      Prf scores = evaluate_records(model, art, dev_docs);
      row.p = scores.p;
      row.r = scores.r;
      row.f1 = scores.f1;
    } catch (const std::exception&) {
      row.failed = true;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "lambda,precision,recall,f1\n";
  os << std::fixed << std::setprecision(4);
  for (const auto& row : rows) {
    os << row.lambda;
    if (row.failed) {
      os << ",nan,nan,nan\n";
    } else {
      os << "," << row.p << "," << row.r << "," << row.f1 << "\n";
    }
  }
  return os.str();
}

}  // namespace rrdee
