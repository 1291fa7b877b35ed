#include "rrdee/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rrdee/corpus.hpp"
#include "rrdee/evaluation.hpp"
#include "rrdee/model.hpp"
#include "rrdee/role_rank.hpp"
#include "rrdee/tensor_io.hpp"
#include "rrdee/trainer.hpp"

namespace rrdee {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kUsageError = 1;
constexpr int kDataError = 2;
constexpr int kTrainError = 3;

// Everything configurable from flags or the --config JSON file. Flags win:
// config values are applied as defaults before parsing.
struct Options {
  std::string config_path;

  std::string train_path, dev_path, data_path, pred_path, gold_path;
  std::string rrd_path, checkpoint_path, vocab_path;
  std::string out_path;
  std::string tokenizer = "whitespace";
  uint64_t seed = 42;
  int workers = 1;
  int max_sentences = 0;

  // model
  int embed_dim = 128;
  int hidden_dim = 768;
  int layers = 4;
  double dropout = 0.5;
  bool token_ce = false;
  int conv_channels = 128;
  int max_tokens = 1024;
  bool separate_embeddings = false;

  // training
  double lambda = 0.60;
  double lr = 1e-4;
  int batch_size = 32;
  int epochs = 20;
  int patience = 5;
  bool no_early_stopping = false;

  // sweep
  double grid_start = 0.50;
  double grid_end = 0.66;
  double grid_step = 0.02;

  // evaluate
  double type_threshold = 0.0;  // 0 = 1/|E|
  bool multi_event_only = false;

  // gen-synthetic
  int gen_docs = 300;
  int gen_events = 3;
  int gen_roles = 4;
  int gen_sentences = 4;
  int gen_lexicon = 20;
  double gen_multi_event = 0.0;
};

Tokenizer parse_tokenizer(const std::string& name) {
  if (name == "whitespace" || name == "ws") return Tokenizer::kWhitespace;
  if (name == "character" || name == "char") return Tokenizer::kCharacter;
  throw DataError("unknown tokenizer: " + name + " (use whitespace|character)");
}

void apply_config_file(Options& opt) {
  if (opt.config_path.empty()) return;
  std::ifstream in(opt.config_path);
  if (!in) throw DataError("cannot open config file: " + opt.config_path);
  json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config file " + opt.config_path + ": " + e.what());
  }
  auto set_if = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
  };
  set_if("tokenizer", opt.tokenizer);
  set_if("seed", opt.seed);
  set_if("workers", opt.workers);
  set_if("max_sentences", opt.max_sentences);
  set_if("embed_dim", opt.embed_dim);
  set_if("hidden_dim", opt.hidden_dim);
  set_if("layers", opt.layers);
  set_if("dropout", opt.dropout);
  set_if("token_ce", opt.token_ce);
  set_if("conv_channels", opt.conv_channels);
  set_if("max_tokens", opt.max_tokens);
  set_if("separate_embeddings", opt.separate_embeddings);
  set_if("lambda", opt.lambda);
  set_if("lr", opt.lr);
  set_if("batch_size", opt.batch_size);
  set_if("epochs", opt.epochs);
  set_if("patience", opt.patience);
  set_if("no_early_stopping", opt.no_early_stopping);
  set_if("grid_start", opt.grid_start);
  set_if("grid_end", opt.grid_end);
  set_if("grid_step", opt.grid_step);
  set_if("type_threshold", opt.type_threshold);
}

ModelConfig model_config(const Options& opt) {
  ModelConfig cfg;
  cfg.tagger.embed_dim = opt.embed_dim;
  cfg.tagger.hidden_dim = opt.hidden_dim;
  cfg.tagger.layers = opt.layers;
  cfg.tagger.dropout = opt.dropout;
  cfg.tagger.crf_loss = !opt.token_ce;
  cfg.classifier.conv_channels = opt.conv_channels;
  cfg.classifier.max_tokens = opt.max_tokens;
  cfg.share_embeddings = !opt.separate_embeddings;
  return cfg;
}

TrainConfig train_config(const Options& opt) {
  TrainConfig cfg;
  cfg.lambda = opt.lambda;
  cfg.lr = opt.lr;
  cfg.batch_size = opt.batch_size;
  cfg.epochs = opt.epochs;
  cfg.seed = opt.seed;
  cfg.patience = opt.patience;
  cfg.early_stopping = !opt.no_early_stopping;
  return cfg;
}

json train_config_json(const TrainConfig& cfg) {
  return {{"lambda", cfg.lambda},     {"lr", cfg.lr},
          {"batch_size", cfg.batch_size}, {"epochs", cfg.epochs},
          {"seed", cfg.seed},         {"patience", cfg.patience},
          {"early_stopping", cfg.early_stopping}};
}

std::vector<Document> load_annotated(const std::string& path, const Vocabulary& vocab,
                                     Tokenizer tok, int workers) {
  LoadOptions lopts;
  lopts.tokenizer = tok;
  lopts.vocab = &vocab;
  LoadedCorpus corpus = load_corpus(path, lopts);
  int unmatched = annotate_gold_tags(corpus.docs, vocab, tok, nullptr, workers);
  if (unmatched > 0) {
    std::cerr << "warning: " << unmatched << " gold records in " << path
              << " have no locatable argument\n";
  }
  return corpus.docs;
}

void ensure_parent_dir(const std::string& path) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

int cmd_gen_synthetic(const Options& opt) {
  SyntheticSpec spec = make_separable_spec(opt.gen_events, opt.gen_roles,
                                           opt.gen_sentences, opt.gen_lexicon);
  spec.multi_event_fraction = opt.gen_multi_event;
  auto docs = generate_synthetic_corpus(spec, opt.gen_docs, opt.seed);
  ensure_parent_dir(opt.out_path);
  save_corpus(opt.out_path, docs);
  save_vocabulary(opt.out_path + ".vocab.json", spec.vocab);
  std::cout << "wrote " << docs.size() << " documents to " << opt.out_path << "\n";
  return kOk;
}

int cmd_preprocess(const Options& opt) {
  Tokenizer tok = parse_tokenizer(opt.tokenizer);
  LoadOptions lopts;
  lopts.tokenizer = tok;
  Vocabulary vocab;
  if (!opt.vocab_path.empty()) {
    vocab = load_vocabulary(opt.vocab_path);
    lopts.vocab = &vocab;
  }
  lopts.max_sentences_override = opt.max_sentences;
  LoadedCorpus corpus = load_corpus(opt.train_path, lopts);
  std::vector<std::string> warnings;
  annotate_gold_tags(corpus.docs, corpus.vocab, tok, &warnings, opt.workers);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

  RrdArtifact artifact = build_rrd_artifact(corpus.docs, corpus.vocab);
  ensure_parent_dir(opt.out_path);
  save_rrd_artifact(opt.out_path, artifact);

  const Vocabulary& v = artifact.vocab;
  std::cout << "P: " << v.num_events() << " x " << v.max_sentences << " x "
            << v.num_roles() << "\n"
            << "W: " << v.num_entity_tags() << " x " << v.num_roles() << "\n"
            << "W': " << v.num_roles() << " x " << v.num_events() << "\n"
            << "wrote " << opt.out_path << "\n";
  return kOk;
}

int cmd_train(const Options& opt) {
  Tokenizer tok = parse_tokenizer(opt.tokenizer);
  RrdArtifact artifact = load_rrd_artifact(opt.rrd_path);
  auto train_docs = load_annotated(opt.train_path, artifact.vocab, tok, opt.workers);
  std::vector<Document> dev_docs;
  if (!opt.dev_path.empty()) {
    dev_docs = load_annotated(opt.dev_path, artifact.vocab, tok, opt.workers);
  }

  TokenVocab tokens = TokenVocab::build(train_docs);
  Model model(model_config(opt), artifact.vocab, std::move(tokens), tok, opt.seed);
  TrainConfig cfg = train_config(opt);
  TrainResult result = train(model, cfg, train_docs, dev_docs, artifact);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";

  fs::create_directories(opt.out_path);
  const std::string ck_path = (fs::path(opt.out_path) / "checkpoint.bin").string();
  save_checkpoint(ck_path, model, result.best_epoch, result.rng_state, opt.rrd_path,
                  train_config_json(cfg));

  std::ofstream log(fs::path(opt.out_path) / "train_log.jsonl");
  for (const auto& s : result.history) {
    json line = {{"epoch", s.epoch}, {"L1", s.l1},       {"L2", s.l2},
                 {"L", s.loss},      {"dev_p", s.dev_p}, {"dev_r", s.dev_r},
                 {"dev_f1", s.dev_f1}};
    log << line.dump() << "\n";
  }
  std::cout << "best epoch " << result.best_epoch << " (dev F1 " << std::fixed
            << std::setprecision(4) << result.best_dev_f1 << "); wrote " << ck_path
            << "\n";
  return kOk;
}

EvalReport evaluate_tables(const std::vector<std::vector<EventTable>>& preds,
                           const std::vector<std::vector<EventTable>>& golds,
                           const std::vector<std::string>& type_order,
                           bool multi_event_only) {
  MatchResult records;
  std::vector<std::vector<std::string>> pred_types, gold_types;
  for (size_t d = 0; d < preds.size(); ++d) {
    records += match_document(preds[d], golds[d]);
    std::vector<std::string> pt, gt;
    for (const auto& t : preds[d]) pt.push_back(t.event_type);
    for (const auto& t : golds[d]) gt.push_back(t.event_type);
    pred_types.push_back(pt);
    gold_types.push_back(gt);
  }
  ClassificationScores clf =
      event_classification_f1(pred_types, gold_types, type_order, multi_event_only);
  return build_report(records, clf);
}

int cmd_evaluate(const Options& opt) {
  EvalReport report;
  if (!opt.pred_path.empty()) {
    // File mode: compare prediction tables against gold tables by doc_id.
    Tokenizer tok = parse_tokenizer(opt.tokenizer);
    LoadOptions lopts;
    lopts.tokenizer = tok;
    LoadedCorpus gold = load_corpus(opt.gold_path, lopts);
    LoadOptions popts;
    popts.tokenizer = tok;
    popts.vocab = &gold.vocab;
    LoadedCorpus pred = load_corpus(opt.pred_path, popts);
    std::map<std::string, const Document*> by_id;
    for (const auto& doc : pred.docs) by_id[doc.doc_id] = &doc;

    std::vector<std::vector<EventTable>> preds, golds;
    for (const auto& doc : gold.docs) {
      golds.push_back(doc.gold_tables);
      auto it = by_id.find(doc.doc_id);
      preds.push_back(it == by_id.end() ? std::vector<EventTable>{}
                                        : it->second->gold_tables);
    }
    report = evaluate_tables(preds, golds, gold.vocab.events, opt.multi_event_only);
  } else {
    LoadedCheckpoint ck = load_checkpoint(opt.checkpoint_path);
    RrdArtifact artifact = load_rrd_artifact(opt.rrd_path);
    LoadOptions lopts;
    lopts.tokenizer = ck.model.tokenizer;
    lopts.vocab = &artifact.vocab;
    LoadedCorpus data = load_corpus(opt.data_path, lopts);

    const double tau = opt.type_threshold > 0
                           ? opt.type_threshold
                           : 1.0 / artifact.vocab.num_events();
    MatchResult records;
    std::vector<std::vector<std::string>> pred_types, gold_types;
    for (const auto& doc : data.docs) {
      DocPrediction pred = predict_document(ck.model, artifact, doc);
      records += match_document({pred.table}, doc.gold_tables);
      pred_types.push_back(pred.types_above(tau, artifact.vocab));
      gold_types.push_back(doc.gold_types());
    }
    ClassificationScores clf = event_classification_f1(
        pred_types, gold_types, artifact.vocab.events, opt.multi_event_only);
    report = build_report(records, clf);
  }

  std::cout << report.render_table();
  std::cout << "event classification macro F1: " << std::fixed
            << std::setprecision(4) << report.classification.macro.f1 << "\n";
  if (!opt.out_path.empty()) {
    ensure_parent_dir(opt.out_path);
    std::ofstream out(opt.out_path);
    out << report.to_json().dump(2) << "\n";
    std::cout << "wrote " << opt.out_path << "\n";
  }
  return kOk;
}

int cmd_extract(const Options& opt) {
  LoadedCheckpoint ck = load_checkpoint(opt.checkpoint_path);
  RrdArtifact artifact = load_rrd_artifact(opt.rrd_path);
  LoadOptions lopts;
  lopts.tokenizer = ck.model.tokenizer;
  lopts.vocab = &artifact.vocab;
  LoadedCorpus data = load_corpus(opt.data_path, lopts);

  std::vector<Document> out_docs;
  for (const auto& doc : data.docs) {
    DocPrediction pred = predict_document(ck.model, artifact, doc);
    Document out = doc;
    out.gold_tables = {pred.table};
    out.gold_tags.reset();
    out_docs.push_back(std::move(out));
  }
  ensure_parent_dir(opt.out_path);
  save_corpus(opt.out_path, out_docs);
  std::cout << "wrote " << out_docs.size() << " event tables to " << opt.out_path
            << "\n";
  return kOk;
}

int cmd_sweep(const Options& opt) {
  Tokenizer tok = parse_tokenizer(opt.tokenizer);
  RrdArtifact artifact = load_rrd_artifact(opt.rrd_path);
  auto train_docs = load_annotated(opt.train_path, artifact.vocab, tok, opt.workers);
  auto dev_docs = load_annotated(opt.dev_path, artifact.vocab, tok, opt.workers);

  auto grid = lambda_grid(opt.grid_start, opt.grid_end, opt.grid_step);
  auto rows = sweep_lambda(model_config(opt), train_config(opt), grid, train_docs,
                           dev_docs, artifact, tok);
  ensure_parent_dir(opt.out_path);
  std::ofstream out(opt.out_path);
  out << sweep_csv(rows);
  std::cout << "wrote " << rows.size() << " rows to " << opt.out_path << "\n";
  return kOk;
}

void write_rrd_csv(const std::string& path, const RoleRankDistribution& rrd,
                   const Vocabulary& vocab, int event_id) {
  std::ofstream out(path);
  out << "sentence_index";
  for (const auto& role : vocab.roles) out << "," << role;
  out << "\n" << std::fixed << std::setprecision(6);
  const Eigen::MatrixXd& s = rrd.slices[event_id];
  for (int i = 0; i < s.rows(); ++i) {
    out << i;
    for (int r = 0; r < s.cols(); ++r) out << "," << s(i, r);
    out << "\n";
  }
}

int cmd_plot_rrd(const Options& opt) {
  RrdArtifact artifact = load_rrd_artifact(opt.rrd_path);
  fs::create_directories(opt.out_path);
  for (int e = 0; e < artifact.vocab.num_events(); ++e) {
    const std::string path =
        (fs::path(opt.out_path) / ("rrd_gold_" + artifact.vocab.events[e] + ".csv"))
            .string();
    write_rrd_csv(path, artifact.rrd, artifact.vocab, e);
  }

  if (!opt.checkpoint_path.empty()) {
    if (opt.data_path.empty()) {
      throw DataError("plot-rrd: --data is required with --checkpoint");
    }
    LoadedCheckpoint ck = load_checkpoint(opt.checkpoint_path);
    LoadOptions lopts;
    lopts.tokenizer = ck.model.tokenizer;
    lopts.vocab = &artifact.vocab;
    LoadedCorpus data = load_corpus(opt.data_path, lopts);

    // Predicted-side distribution: the same counting, run over predicted
    // tables instead of gold ones.
    std::vector<Document> shadow;
    for (const auto& doc : data.docs) {
      DocPrediction pred = predict_document(ck.model, artifact, doc);
      Document s = doc;
      s.gold_tables = {pred.table};
      shadow.push_back(std::move(s));
    }
    RoleRankDistribution pred_rrd = build_rrd(shadow, artifact.vocab);
    for (int e = 0; e < artifact.vocab.num_events(); ++e) {
      const std::string path =
          (fs::path(opt.out_path) / ("rrd_pred_" + artifact.vocab.events[e] + ".csv"))
              .string();
      write_rrd_csv(path, pred_rrd, artifact.vocab, e);
    }
  }
  std::cout << "wrote role-rank CSVs to " << opt.out_path << "\n";
  return kOk;
}

std::string find_config_path(int argc, const char* const* argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") return argv[i + 1];
  }
  return {};
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  Options opt;
  try {
    opt.config_path = find_config_path(argc, argv);
    apply_config_file(opt);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }

  CLI::App app{"Document-level event extraction with role-rank statistics"};
  app.require_subcommand(1);

  auto add_common = [&opt](CLI::App* cmd) {
    cmd->add_option("--config", opt.config_path, "JSON config file (flags win)");
    cmd->add_option("--seed", opt.seed, "random seed");
    cmd->add_option("--workers", opt.workers, "preprocessing parallelism");
  };
  auto add_model_flags = [&opt](CLI::App* cmd) {
    cmd->add_option("--embed-dim", opt.embed_dim, "token embedding width");
    cmd->add_option("--hidden-dim", opt.hidden_dim, "total BiLSTM hidden width");
    cmd->add_option("--layers", opt.layers, "stacked BiLSTM layers");
    cmd->add_option("--dropout", opt.dropout, "dropout between encoder layers");
    cmd->add_flag("--token-ce", opt.token_ce,
                  "literal per-token cross-entropy instead of CRF likelihood");
    cmd->add_option("--conv-channels", opt.conv_channels, "classifier channels");
    cmd->add_option("--max-tokens", opt.max_tokens, "classifier input truncation");
    cmd->add_flag("--separate-embeddings", opt.separate_embeddings,
                  "classifier gets its own embedding table");
    cmd->add_option("--tokenizer", opt.tokenizer, "whitespace|character");
  };
  auto add_train_flags = [&opt](CLI::App* cmd) {
    cmd->add_option("--lambda", opt.lambda, "event-identification loss weight");
    cmd->add_option("--lr", opt.lr, "learning rate");
    cmd->add_option("--batch", opt.batch_size, "batch size");
    cmd->add_option("--epochs", opt.epochs, "training epochs");
    cmd->add_option("--patience", opt.patience, "early-stopping patience");
    cmd->add_flag("--no-early-stopping", opt.no_early_stopping,
                  "always run all epochs");
  };

  CLI::App* gen = app.add_subcommand("gen-synthetic",
                                     "generate a corpus with planted styles");
  gen->add_option("--out", opt.out_path, "output JSONL")->required();
  gen->add_option("--docs", opt.gen_docs, "number of documents");
  gen->add_option("--events", opt.gen_events, "event types");
  gen->add_option("--roles", opt.gen_roles, "roles");
  gen->add_option("--sentences", opt.gen_sentences, "sentences per document (N)");
  gen->add_option("--lexicon", opt.gen_lexicon, "entities per role");
  gen->add_option("--multi-event", opt.gen_multi_event,
                  "fraction of two-event documents");
  add_common(gen);

  CLI::App* prep = app.add_subcommand("preprocess-rrd",
                                      "build the role-rank artifact (P, W, W')");
  prep->add_option("--train", opt.train_path, "training corpus")->required();
  prep->add_option("--out", opt.out_path, "artifact file")->required();
  prep->add_option("--vocab", opt.vocab_path, "vocabulary JSON");
  prep->add_option("--max-sentences", opt.max_sentences, "pin N when inducing");
  prep->add_option("--tokenizer", opt.tokenizer, "whitespace|character");
  add_common(prep);

  CLI::App* tr = app.add_subcommand("train", "joint tagger + classifier training");
  tr->add_option("--train", opt.train_path, "training corpus")->required();
  tr->add_option("--dev", opt.dev_path, "dev corpus");
  tr->add_option("--rrd", opt.rrd_path, "role-rank artifact")->required();
  tr->add_option("--out", opt.out_path, "output directory")->required();
  add_model_flags(tr);
  add_train_flags(tr);
  add_common(tr);

  CLI::App* ev = app.add_subcommand("evaluate", "record and event-type metrics");
  ev->add_option("--checkpoint", opt.checkpoint_path, "model checkpoint");
  ev->add_option("--rrd", opt.rrd_path, "role-rank artifact");
  ev->add_option("--data", opt.data_path, "evaluation corpus");
  ev->add_option("--pred", opt.pred_path, "predicted tables (file mode)");
  ev->add_option("--gold", opt.gold_path, "gold tables (file mode)");
  ev->add_option("--out", opt.out_path, "report JSON");
  ev->add_option("--type-threshold", opt.type_threshold,
                 "multi-type probability threshold (0 = 1/|E|)");
  ev->add_flag("--multi-event-only", opt.multi_event_only,
               "restrict classification metrics to multi-event documents");
  ev->add_option("--tokenizer", opt.tokenizer, "whitespace|character");
  add_common(ev);

  CLI::App* ex = app.add_subcommand("extract", "emit predicted event tables");
  ex->add_option("--checkpoint", opt.checkpoint_path, "model checkpoint")->required();
  ex->add_option("--rrd", opt.rrd_path, "role-rank artifact")->required();
  ex->add_option("--data", opt.data_path, "input corpus")->required();
  ex->add_option("--out", opt.out_path, "output JSONL")->required();
  add_common(ex);

  CLI::App* sw = app.add_subcommand("sweep-lambda", "lambda sensitivity sweep");
  sw->add_option("--train", opt.train_path, "training corpus")->required();
  sw->add_option("--dev", opt.dev_path, "dev corpus")->required();
  sw->add_option("--rrd", opt.rrd_path, "role-rank artifact")->required();
  sw->add_option("--out", opt.out_path, "output CSV")->required();
  sw->add_option("--grid-start", opt.grid_start, "first lambda");
  sw->add_option("--grid-end", opt.grid_end, "last lambda");
  sw->add_option("--grid-step", opt.grid_step, "lambda step");
  add_model_flags(sw);
  add_train_flags(sw);
  add_common(sw);

  CLI::App* plot = app.add_subcommand("plot-rrd", "emit role-rank CSVs for plotting");
  plot->add_option("--rrd", opt.rrd_path, "role-rank artifact")->required();
  plot->add_option("--out", opt.out_path, "output directory")->required();
  plot->add_option("--checkpoint", opt.checkpoint_path,
                   "also emit the predicted-side distribution");
  plot->add_option("--data", opt.data_path, "corpus for the predicted side");
  add_common(plot);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (gen->parsed()) return cmd_gen_synthetic(opt);
    if (prep->parsed()) return cmd_preprocess(opt);
    if (tr->parsed()) return cmd_train(opt);
    if (ev->parsed()) return cmd_evaluate(opt);
    if (ex->parsed()) return cmd_extract(opt);
    if (sw->parsed()) return cmd_sweep(opt);
    if (plot->parsed()) return cmd_plot_rrd(opt);
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return kTrainError;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}

}  // namespace rrdee
