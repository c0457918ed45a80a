#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fcsum/cli.hpp"

using namespace fcsum;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = FCSUM_SOURCE_DIR;

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_all(p));
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream row(line);
    for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

// One preprocessed + trained copy of the bundled corpus shared by the suite.
class Pipeline : public ::testing::Test {
 protected:
  static fs::path dir() { return fs::temp_directory_path() / "fcsum_cli_pipeline"; }
  static fs::path data() { return dir() / "data"; }
  static fs::path ckpt() { return dir() / "ck"; }

  static void SetUpTestSuite() {
    fs::remove_all(dir());
    const auto cfg = (kSource / "data" / "desk.cfg").string();
    ASSERT_EQ(run({"preprocess", "--input", (kSource / "data" / "synthetic.jsonl").string(), "--out",
                   data().string(), "--config", cfg, "--seed", "0"})
                  .code,
              0);
    ASSERT_EQ(run({"train", "--data", data().string(), "--config", cfg, "--out", ckpt().string()}).code, 0);
    ASSERT_EQ(run({"predict", "--checkpoint", (ckpt() / "best.fcsm").string(), "--data", data().string(), "--out",
                   (dir() / "pred.tsv").string()})
                  .code,
              0);
  }
  static void TearDownTestSuite() { fs::remove_all(dir()); }
};

}  // namespace

TEST(CliUsage, BadInvocationsExitOne) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"evaluate", "--pred", "x.tsv"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"train", "--data", "d", "--epochs", "many"}).code, cli::kExitUsage);
}

TEST(CliUsage, HelpExitsZero) {
  const auto r = run({"train", "--help"});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find("--learning-rate"), std::string::npos);
  EXPECT_NE(r.out.find("--seed"), std::string::npos);
}

TEST(CliUsage, EverySubcommandAcceptsSeed) {
  for (const auto* sub :
       {"preprocess", "train", "predict", "evaluate", "analyze", "attention", "ablate", "gradcheck", "synth"}) {
    const auto r = run({sub, "--help"});
    EXPECT_NE(r.out.find("--seed"), std::string::npos) << sub;
  }
}

TEST(CliData, MissingOrMalformedFilesExitTwo) {
  const auto tmp = fs::temp_directory_path() / "fcsum_cli_data";
  fs::create_directories(tmp);
  EXPECT_EQ(run({"evaluate", "--pred", "/nonexistent/p.tsv", "--ref", "/nonexistent/r.tsv"}).code, cli::kExitData);
  std::ofstream(tmp / "p.tsv") << "a\tx\n";
  std::ofstream(tmp / "r.tsv") << "a\tx\nb\ty\n";
  const auto r = run({"evaluate", "--pred", (tmp / "p.tsv").string(), "--ref", (tmp / "r.tsv").string()});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("rows"), std::string::npos);
  EXPECT_EQ(run({"train", "--data", "/nonexistent/dataset"}).code, cli::kExitData);
  EXPECT_EQ(run({"predict", "--checkpoint", (tmp / "p.tsv").string(), "--data", tmp.string(), "--out",
                 (tmp / "o.tsv").string()})
                .code,
            cli::kExitData);
  fs::remove_all(tmp);
}

TEST(CliEvaluate, IdenticalFilesScoreHundred) {
  const auto tmp = fs::temp_directory_path() / "fcsum_cli_eval";
  fs::create_directories(tmp);
  std::ofstream(tmp / "p.tsv") << "m1\tsets the intermediate value for this flight\nm2\tplay mp3 files\n";
  const auto r = run({"evaluate", "--pred", (tmp / "p.tsv").string(), "--ref", (tmp / "p.tsv").string(), "--csv",
                      (tmp / "r.csv").string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("100.00"), std::string::npos);
  const auto csv = read_csv(tmp / "r.csv");
  ASSERT_EQ(csv.size(), 2u);
  EXPECT_EQ(csv[1][1], "100.00");
  fs::remove_all(tmp);
}

TEST(CliGradcheck, PassesAndExitsZero) {
  const auto r = run({"gradcheck", "--seed", "1"});
  EXPECT_EQ(r.code, cli::kExitOk) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("embed.code"), std::string::npos);
}

TEST(CliSynth, OverfitCorpusHasThirtyTwoMethods) {
  const auto path = fs::temp_directory_path() / "fcsum_cli_overfit.jsonl";
  const auto r = run({"synth", "--overfit", "--out", path.string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(load_dataset(path).size(), 32u);
  fs::remove(path);
}

TEST(CliTrainConfig, FlagsOverrideConfigOverrideDataset) {
  const auto tmp = fs::temp_directory_path() / "fcsum_cli_cfg";
  fs::create_directories(tmp);
  std::ofstream(tmp / "run.cfg") << "preset = full\nepochs = 5\nlearning_rate = 0.5\nrnn_units = 12\n";
  auto data_hp = HyperParams::desk();
  data_hp.code_vocab = 77;
  cli::TrainArgs a;
  a.config = tmp / "run.cfg";
  a.learning_rate = 0.25;
  a.variant = "attendgru";
  const auto cfg = cli::resolve_train_config(a, data_hp);
  EXPECT_EQ(cfg.train.epochs, 5u);
  EXPECT_DOUBLE_EQ(cfg.train.learning_rate, 0.25);
  EXPECT_EQ(cfg.flags, ModelFlags{});
  EXPECT_EQ(cfg.hp.rnn_units, 12u);
  EXPECT_EQ(cfg.hp.code_vocab, 77u);
  EXPECT_EQ(cfg.hp.tdatlen, data_hp.tdatlen);
  EXPECT_EQ(cfg.hp.embed_code, HyperParams::full().embed_code);
  fs::remove_all(tmp);
}

TEST_F(Pipeline, GoldenReport) {
  const auto csv = dir() / "report.csv";
  const auto r = run({"evaluate", "--pred", (dir() / "pred.tsv").string(), "--ref",
                      (data() / "test.refs.tsv").string(), "--csv", csv.string(), "--label", "golden"});
  ASSERT_EQ(r.code, 0);
  const auto got = read_csv(csv);
  const auto want = read_csv(kSource / "tests" / "golden" / "report.csv");
  ASSERT_EQ(got.size(), want.size());
  ASSERT_EQ(got[0], want[0]);
  ASSERT_EQ(got[1].size(), want[1].size());
  EXPECT_EQ(got[1][0], want[1][0]);
  for (std::size_t i = 1; i < want[1].size(); ++i) {
    EXPECT_NEAR(std::stod(got[1][i]), std::stod(want[1][i]), 0.011) << want[0][i];
  }
}

TEST_F(Pipeline, RepeatedTrainRunsGiveIdenticalHistory) {
  const auto cfg = (kSource / "data" / "desk.cfg").string();
  const auto again = dir() / "ck_again";
  ASSERT_EQ(run({"train", "--data", data().string(), "--config", cfg, "--out", again.string(), "--seed", "7"}).code,
            0);
  EXPECT_EQ(read_all(again / "history.csv"), read_all(ckpt() / "history.csv"));
  EXPECT_EQ(read_all(again / "best.fcsm"), read_all(ckpt() / "best.fcsm"));
  fs::remove_all(again);
}

TEST_F(Pipeline, PredictIsByteIdenticalAcrossRuns) {
  const auto again = dir() / "pred_again.tsv";
  ASSERT_EQ(run({"predict", "--checkpoint", (ckpt() / "best.fcsm").string(), "--data", data().string(), "--out",
                 again.string(), "--seed", "3"})
                .code,
            0);
  EXPECT_EQ(read_all(again), read_all(dir() / "pred.tsv"));
}

TEST_F(Pipeline, AnalyzeWritesAllTables) {
  const auto out = dir() / "analysis";
  const auto pred = (dir() / "pred.tsv").string();
  const auto refs = (data() / "test.refs.tsv").string();
  const auto r = run({"analyze", "--data", data().string(), "--pred", "fc=" + pred, "--pred", "oracle=" + refs,
                      "--baseline", "fc", "--candidate", "oracle", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto hist = read_csv(out / "bleu1_histogram.csv");
  ASSERT_EQ(hist.size(), 3u);
  EXPECT_EQ(hist[2][0], "oracle");
  EXPECT_EQ(hist[2][4], std::to_string(read_csv(refs).size()));
  EXPECT_TRUE(fs::exists(out / "best_model.csv"));
  const auto prov = read_csv(out / "provenance.csv");
  ASSERT_EQ(prov.size(), 2u);
  EXPECT_EQ(prov[0][0], "compared");
  EXPECT_EQ(run({"analyze", "--data", data().string(), "--pred", "nonsense", "--out", out.string()}).code,
            cli::kExitData);
}

TEST_F(Pipeline, AttentionExportsColumnStochasticHeatmap) {
  const auto records = load_records(data() / "test.jsonl");
  ASSERT_FALSE(records.empty());
  const auto out = dir() / "heat.csv";
  const auto r = run({"attention", "--checkpoint", (ckpt() / "best.fcsm").string(), "--data", data().string(),
                      "--method", records.front().id, "--out", out.string(), "--pgm"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir() / "heat.pgm"));
  const auto h = read_heatmap_csv(out);
  for (std::size_t c = 0; c < h.cols(); ++c) {
    double s = 0;
    for (std::size_t i = 0; i < h.rows(); ++i) s += h(i, c);
    EXPECT_NEAR(s, 1.0, 1e-5);
  }
  EXPECT_EQ(run({"attention", "--checkpoint", (ckpt() / "best.fcsm").string(), "--data", data().string(),
                 "--method", "no.such#method", "--out", out.string()})
                .code,
            cli::kExitData);
}

TEST_F(Pipeline, AblateBlanksCodeOnly) {
  const auto out = dir() / "ablated";
  ASSERT_EQ(run({"ablate", "--data", data().string(), "--out", out.string()}).code, 0);
  const auto before = load_records(data() / "train.jsonl");
  const auto after = load_records(out / "train.jsonl");
  ASSERT_EQ(before.size(), after.size());
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(after[i], ablate_code_text(before[i]));
  EXPECT_EQ(read_all(out / "dataset.cfg"), read_all(data() / "dataset.cfg"));
  EXPECT_EQ(run({"ablate", "--data", data().string(), "--out", data().string()}).code, cli::kExitData);
}
