#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rrdee/cli.hpp"
#include "rrdee/corpus.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"rrdee"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return rrdee::run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

long line_count(const std::string& path) {
  std::ifstream in(path);
  long n = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ++n;
  }
  return n;
}

struct Workdir {
  fs::path dir;
  explicit Workdir(const std::string& name) : dir(name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  std::string operator/(const std::string& f) const { return (dir / f).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with code 1") {
  CHECK(run({"no-such-command"}) == 1);
  CHECK(run({"preprocess-rrd"}) == 1);  // missing required flags
}

TEST_CASE("gen-synthetic writes a loadable corpus") {
  Workdir wd("cli_gen");
  CHECK(run({"gen-synthetic", "--out", wd / "toy.jsonl", "--docs", "12", "--seed",
             "3"}) == 0);
  rrdee::LoadedCorpus corpus = rrdee::load_corpus(wd / "toy.jsonl");
  CHECK(corpus.docs.size() == 12);
  CHECK(corpus.vocab.num_events() == 3);
}

TEST_CASE("preprocess-rrd is deterministic byte for byte") {
  Workdir wd("cli_prep");
  REQUIRE(run({"gen-synthetic", "--out", wd / "toy.jsonl", "--docs", "15", "--seed",
               "5"}) == 0);
  CHECK(run({"preprocess-rrd", "--train", wd / "toy.jsonl", "--out",
             wd / "a1.bin"}) == 0);
  CHECK(run({"preprocess-rrd", "--train", wd / "toy.jsonl", "--out",
             wd / "a2.bin"}) == 0);
  CHECK(slurp(wd / "a1.bin") == slurp(wd / "a2.bin"));
}

TEST_CASE("preprocess-rrd on an empty corpus without a vocabulary exits 2") {
  Workdir wd("cli_empty");
  std::ofstream(wd / "empty.jsonl").close();
  CHECK(run({"preprocess-rrd", "--train", wd / "empty.jsonl", "--out",
             wd / "a.bin"}) == 2);
}

TEST_CASE("plot-rrd emits uniform cells for the smoothing prior") {
  Workdir wd("cli_plot");
  {
    std::ofstream vocab(wd / "vocab.json");
    vocab << R"({"events":["A"],"roles":["r1","r2"],"N":4})";
  }
  std::ofstream(wd / "empty.jsonl").close();
  REQUIRE(run({"preprocess-rrd", "--train", wd / "empty.jsonl", "--vocab",
               wd / "vocab.json", "--out", wd / "art.bin"}) == 0);
  REQUIRE(run({"plot-rrd", "--rrd", wd / "art.bin", "--out", wd / "plots"}) == 0);

  std::ifstream csv(wd.dir / "plots" / "rrd_gold_A.csv");
  REQUIRE(csv.good());
  std::string header;
  std::getline(csv, header);
  CHECK(header == "sentence_index,r1,r2");
  CHECK(std::count(header.begin(), header.end(), ',') == 2);  // |R|+1 columns
  std::string row;
  int rows = 0;
  while (std::getline(csv, row)) {
    ++rows;
    std::istringstream ss(row);
    std::string cell;
    std::getline(ss, cell, ',');
    while (std::getline(ss, cell, ',')) {
      CHECK(std::stod(cell) == doctest::Approx(0.25).epsilon(1e-9));
    }
  }
  CHECK(rows == 4);
}

TEST_CASE("the full pipeline composes: preprocess, train, evaluate, extract") {
  Workdir wd("cli_pipeline");
  REQUIRE(run({"gen-synthetic", "--out", wd / "toy.jsonl", "--docs", "20", "--seed",
               "7", "--roles", "3"}) == 0);
  REQUIRE(run({"preprocess-rrd", "--train", wd / "toy.jsonl", "--out",
               wd / "art.bin"}) == 0);

  std::vector<std::string> train_args{
      "train",        "--train",  wd / "toy.jsonl", "--dev",   wd / "toy.jsonl",
      "--rrd",        wd / "art.bin", "--out",      wd / "run",
      "--embed-dim",  "8",        "--hidden-dim",   "8",       "--layers", "1",
      "--dropout",    "0",        "--conv-channels", "4",      "--epochs", "2",
      "--batch",      "4",        "--lr",           "0.02",    "--seed",   "11",
      "--no-early-stopping"};
  REQUIRE(run(train_args) == 0);
  CHECK(fs::exists(wd.dir / "run" / "checkpoint.bin"));
  CHECK(line_count(wd / "run/train_log.jsonl") == 2);

  REQUIRE(run({"evaluate", "--checkpoint", wd / "run/checkpoint.bin", "--rrd",
               wd / "art.bin", "--data", wd / "toy.jsonl", "--out",
               wd / "report.json"}) == 0);
  auto report = nlohmann::json::parse(slurp(wd / "report.json"));
  CHECK(report.contains("average"));
  CHECK(report.contains("event_classification"));

  REQUIRE(run({"extract", "--checkpoint", wd / "run/checkpoint.bin", "--rrd",
               wd / "art.bin", "--data", wd / "toy.jsonl", "--out",
               wd / "pred.jsonl"}) == 0);
  CHECK(line_count(wd / "pred.jsonl") == 20);

  SUBCASE("extract output is one table per document") {
    rrdee::LoadedCorpus pred = rrdee::load_corpus(wd / "pred.jsonl");
    for (const auto& doc : pred.docs) CHECK(doc.gold_tables.size() == 1);
  }

  SUBCASE("plot-rrd also emits the predicted side") {
    REQUIRE(run({"plot-rrd", "--rrd", wd / "art.bin", "--checkpoint",
                 wd / "run/checkpoint.bin", "--data", wd / "toy.jsonl", "--out",
                 wd / "plots"}) == 0);
    CHECK(fs::exists(wd.dir / "plots" / "rrd_gold_EV0.csv"));
    CHECK(fs::exists(wd.dir / "plots" / "rrd_pred_EV0.csv"));
  }
}

TEST_CASE("the bundled toy corpus composes end to end") {
  Workdir wd("cli_bundled");
  const std::string corpus = RRDEE_BUNDLED_CORPUS;
  REQUIRE(fs::exists(corpus));
  REQUIRE(run({"preprocess-rrd", "--train", corpus, "--out", wd / "art.bin"}) == 0);
  REQUIRE(run({"train", "--train", corpus, "--rrd", wd / "art.bin", "--out",
               wd / "run", "--embed-dim", "8", "--hidden-dim", "8", "--layers",
               "1", "--dropout", "0", "--conv-channels", "4", "--epochs", "1",
               "--batch", "8", "--no-early-stopping"}) == 0);
  REQUIRE(run({"evaluate", "--checkpoint", wd / "run/checkpoint.bin", "--rrd",
               wd / "art.bin", "--data", corpus, "--out", wd / "report.json"}) == 0);
  REQUIRE(run({"extract", "--checkpoint", wd / "run/checkpoint.bin", "--rrd",
               wd / "art.bin", "--data", corpus, "--out", wd / "pred.jsonl"}) == 0);
  CHECK(line_count(wd / "pred.jsonl") == 60);
}

TEST_CASE("evaluate in file mode scores gold against itself perfectly") {
  Workdir wd("cli_filemode");
  REQUIRE(run({"gen-synthetic", "--out", wd / "toy.jsonl", "--docs", "6", "--seed",
               "9"}) == 0);
  REQUIRE(run({"evaluate", "--pred", wd / "toy.jsonl", "--gold", wd / "toy.jsonl",
               "--out", wd / "report.json"}) == 0);
  auto report = nlohmann::json::parse(slurp(wd / "report.json"));
  CHECK(report["average"]["f1"].get<double>() == doctest::Approx(1.0));
  CHECK(report["average"]["p"].get<double>() == doctest::Approx(1.0));
  CHECK(report["event_classification"]["macro_f1"].get<double>() ==
        doctest::Approx(1.0));
}

TEST_CASE("extract on two documents yields two lines") {
  Workdir wd("cli_two");
  REQUIRE(run({"gen-synthetic", "--out", wd / "toy.jsonl", "--docs", "20", "--seed",
               "2"}) == 0);
  REQUIRE(run({"preprocess-rrd", "--train", wd / "toy.jsonl", "--out",
               wd / "art.bin"}) == 0);
  REQUIRE(run({"train", "--train", wd / "toy.jsonl", "--rrd", wd / "art.bin",
               "--out", wd / "run", "--embed-dim", "8", "--hidden-dim", "8",
               "--layers", "1", "--dropout", "0", "--conv-channels", "4",
               "--epochs", "1", "--batch", "4", "--no-early-stopping"}) == 0);

  // two-document slice of the corpus
  std::ifstream in(wd / "toy.jsonl");
  std::ofstream out(wd / "two.jsonl");
  std::string line;
  for (int i = 0; i < 2 && std::getline(in, line); ++i) out << line << "\n";
  out.close();

  REQUIRE(run({"extract", "--checkpoint", wd / "run/checkpoint.bin", "--rrd",
               wd / "art.bin", "--data", wd / "two.jsonl", "--out",
               wd / "pred.jsonl"}) == 0);
  CHECK(line_count(wd / "pred.jsonl") == 2);
}

TEST_CASE("config file values apply and flags win") {
  Workdir wd("cli_config");
  REQUIRE(run({"gen-synthetic", "--out", wd / "toy.jsonl", "--docs", "10", "--seed",
               "4"}) == 0);
  REQUIRE(run({"preprocess-rrd", "--train", wd / "toy.jsonl", "--out",
               wd / "art.bin"}) == 0);
  {
    std::ofstream config(wd / "config.json");
    config << R"({"epochs": 1, "embed_dim": 8, "hidden_dim": 8, "layers": 1,
                  "dropout": 0.0, "conv_channels": 4, "batch_size": 4,
                  "no_early_stopping": true})";
  }
  REQUIRE(run({"train", "--train", wd / "toy.jsonl", "--rrd", wd / "art.bin",
               "--out", wd / "run1", "--config", wd / "config.json"}) == 0);
  CHECK(line_count(wd / "run1/train_log.jsonl") == 1);

  REQUIRE(run({"train", "--train", wd / "toy.jsonl", "--rrd", wd / "art.bin",
               "--out", wd / "run2", "--config", wd / "config.json", "--epochs",
               "2"}) == 0);
  CHECK(line_count(wd / "run2/train_log.jsonl") == 2);
}

TEST_CASE("character tokenizer plumbs through preprocess and train") {
  Workdir wd("cli_char");
  {
    std::ofstream corpus(wd / "zh.jsonl");
    // unsegmented CJK-style lines; arguments are substrings
    corpus << R"({"doc_id":"z1","sentences":["甲公司质押股份","数量为五千股"],"events":[{"type":"EP","records":[{"role":"Pledger","argument":"甲公司"},{"role":"Amount","argument":"五千股"}]}]})"
           << "\n"
           << R"({"doc_id":"z2","sentences":["乙公司质押股份","数量为三千股"],"events":[{"type":"EP","records":[{"role":"Pledger","argument":"乙公司"},{"role":"Amount","argument":"三千股"}]}]})"
           << "\n";
  }
  REQUIRE(run({"preprocess-rrd", "--train", wd / "zh.jsonl", "--tokenizer",
               "character", "--out", wd / "art.bin"}) == 0);
  REQUIRE(run({"train", "--train", wd / "zh.jsonl", "--rrd", wd / "art.bin",
               "--out", wd / "run", "--tokenizer", "character", "--embed-dim",
               "8", "--hidden-dim", "8", "--layers", "1", "--dropout", "0",
               "--conv-channels", "4", "--epochs", "1", "--batch", "2",
               "--no-early-stopping"}) == 0);
  REQUIRE(run({"extract", "--checkpoint", wd / "run/checkpoint.bin", "--rrd",
               wd / "art.bin", "--data", wd / "zh.jsonl", "--out",
               wd / "pred.jsonl"}) == 0);
  CHECK(line_count(wd / "pred.jsonl") == 2);
  CHECK(run({"preprocess-rrd", "--train", wd / "zh.jsonl", "--tokenizer",
             "nonsense", "--out", wd / "x.bin"}) == 2);
}

TEST_CASE("multi-event classification metrics and the empty-selection error") {
  Workdir wd("cli_multi");
  REQUIRE(run({"gen-synthetic", "--out", wd / "multi.jsonl", "--docs", "20",
               "--seed", "8", "--multi-event", "0.5"}) == 0);
  REQUIRE(run({"evaluate", "--pred", wd / "multi.jsonl", "--gold",
               wd / "multi.jsonl", "--multi-event-only", "--out",
               wd / "report.json"}) == 0);
  auto report = nlohmann::json::parse(slurp(wd / "report.json"));
  CHECK(report["event_classification"]["macro_f1"].get<double>() ==
        doctest::Approx(1.0));
  CHECK(report["event_classification"]["num_docs"].get<int>() < 20);

  REQUIRE(run({"gen-synthetic", "--out", wd / "single.jsonl", "--docs", "6",
               "--seed", "9"}) == 0);
  CHECK(run({"evaluate", "--pred", wd / "single.jsonl", "--gold",
             wd / "single.jsonl", "--multi-event-only"}) == 2);
}

TEST_CASE("training twice with one seed gives byte-identical checkpoints") {
  Workdir wd("cli_repeat");
  REQUIRE(run({"gen-synthetic", "--out", wd / "toy.jsonl", "--docs", "10",
               "--seed", "12"}) == 0);
  REQUIRE(run({"preprocess-rrd", "--train", wd / "toy.jsonl", "--out",
               wd / "art.bin"}) == 0);
  std::vector<std::string> base{
      "train",     "--train",  wd / "toy.jsonl", "--rrd",    wd / "art.bin",
      "--embed-dim", "8",      "--hidden-dim",   "8",        "--layers", "1",
      "--dropout", "0.5",      "--conv-channels", "4",       "--epochs", "2",
      "--batch",   "4",        "--seed",         "33",       "--no-early-stopping"};
  auto with_out = [&base](const std::string& out) {
    auto args = base;
    args.insert(args.end(), {"--out", out});
    return args;
  };
  REQUIRE(run(with_out(wd / "r1")) == 0);
  REQUIRE(run(with_out(wd / "r2")) == 0);
  CHECK(slurp(wd / "r1/checkpoint.bin") == slurp(wd / "r2/checkpoint.bin"));
  CHECK(slurp(wd / "r1/train_log.jsonl") == slurp(wd / "r2/train_log.jsonl"));
}

TEST_CASE("sweep-lambda writes the CSV") {
  Workdir wd("cli_sweep");
  REQUIRE(run({"gen-synthetic", "--out", wd / "toy.jsonl", "--docs", "12", "--seed",
               "6"}) == 0);
  REQUIRE(run({"preprocess-rrd", "--train", wd / "toy.jsonl", "--out",
               wd / "art.bin"}) == 0);
  REQUIRE(run({"sweep-lambda", "--train", wd / "toy.jsonl", "--dev",
               wd / "toy.jsonl", "--rrd", wd / "art.bin", "--out", wd / "sweep.csv",
               "--grid-start", "0.5", "--grid-end", "0.6", "--grid-step", "0.1",
               "--embed-dim", "8", "--hidden-dim", "8", "--layers", "1",
               "--dropout", "0", "--conv-channels", "4", "--epochs", "1",
               "--batch", "4", "--no-early-stopping"}) == 0);
  std::string csv = slurp(wd / "sweep.csv");
  CHECK(csv.rfind("lambda,precision,recall,f1\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
