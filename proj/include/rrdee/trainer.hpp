#pragma once

#include <string>
#include <vector>

#include "rrdee/evaluation.hpp"
#include "rrdee/model.hpp"
#include "rrdee/role_rank.hpp"

namespace rrdee {

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double lambda = 0.60;
  double lr = 1e-4;
  int batch_size = 32;
  int epochs = 20;
  uint64_t seed = 42;
  int patience = 5;       // epochs without dev-F1 improvement before stopping
  bool early_stopping = true;
  double clip_norm = 5.0;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double l1 = 0;
  double l2 = 0;
  double loss = 0;
  double dev_p = 0;
  double dev_r = 0;
  double dev_f1 = 0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_dev_f1 = 0;
  std::string rng_state;              // at the end of training
  std::vector<std::string> warnings;  // e.g. documents skipped in L2
};

// L2 for one document given the supervision terms. Writes the gradient
// seeds for the classifier logits and the fused attention vector.
double event_identification_loss(const Eigen::VectorXd& likelihood,
                                 const Eigen::VectorXd& fused,
                                 const Eigen::VectorXd& logits,
                                 const Eigen::VectorXd& target,
                                 Eigen::VectorXd* d_logits = nullptr,
                                 Eigen::VectorXd* d_fused = nullptr);

// Oracle event distribution: uniform over the document's gold types.
// Empty vector when the document has no gold type.
Eigen::VectorXd event_target(const Document& doc, const Vocabulary& vocab);

double joint_loss(double l1, double l2, double lambda);

// Macro-averaged record-extraction metrics of the full pipeline.
Prf evaluate_records(const Model& model, const RrdArtifact& art,
                     const std::vector<Document>& docs);

// Joint training of the tagging and event-identification losses. Documents
// must carry gold tags (annotate_gold_tags). The model keeps the best-dev
// parameters on return.
TrainResult train(Model& model, const TrainConfig& cfg,
                  const std::vector<Document>& train_docs,
                  const std::vector<Document>& dev_docs, const RrdArtifact& art);

struct SweepRow {
  double lambda = 0;
  double p = 0;
  double r = 0;
  double f1 = 0;
  bool failed = false;
};

std::vector<double> lambda_grid(double start, double end, double step);

// One train+evaluate per lambda with a shared seed; failures are marked
// and the sweep continues.
std::vector<SweepRow> sweep_lambda(const ModelConfig& model_cfg,
                                   const TrainConfig& base,
                                   const std::vector<double>& grid,
                                   const std::vector<Document>& train_docs,
                                   const std::vector<Document>& dev_docs,
                                   const RrdArtifact& art, Tokenizer tokenizer);

std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace rrdee
