// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fcsum/analysis/heatmap.hpp"
#include "fcsum/analysis/provenance.hpp"
#include "fcsum/cli.hpp"
#include "fcsum/corpus/synthetic.hpp"
#include "fcsum/inference/decode.hpp"
#include "fcsum/metrics/report.hpp"
#include "fcsum/model/checkpoint.hpp"
#include "fcsum/model/gradcheck.hpp"
#include "fcsum/training/trainer.hpp"

using namespace fcsum;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path work_dir() {
  const auto p = fs::temp_directory_path() / "fcsum_acceptance";
  fs::create_directories(p);
  return p;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Experiment settings for the synthetic runs (see README).
constexpr std::size_t kSeeds = 10;
constexpr std::size_t kFiles = 60;
constexpr std::size_t kEpochs = 12;
constexpr double kLearningRate = 0.01;
const std::array<double, 3> kRatios = {0.7, 0.15, 0.15};

ModelParams<float> train_model(const PreparedCorpus& pc, const ModelFlags& flags, std::uint64_t seed,
                               const std::vector<MethodRecord>& train, const std::vector<MethodRecord>& val) {
  auto p = init_model<float>(pc.hp, flags, seed);
  TrainConfig tc;
  tc.epochs = kEpochs;
  tc.learning_rate = kLearningRate;
  tc.seed = seed;
  tc.checkpoint_dir = work_dir() / "runs";
  fit(p, train, val, tc);
  return p;
}

std::map<std::string, std::string> predictions(const ModelParams<float>& p, const std::vector<MethodRecord>& recs,
                                               const Vocab& summary) {
  std::map<std::string, std::string> out;
  for (const auto& r : recs) out[r.id] = join_words(ids_to_words(predict_summary(p, r), summary));
  return out;
}

CorpusReport score(const std::map<std::string, std::string>& preds, const std::vector<MethodRecord>& recs) {
  std::vector<SentencePair> pairs;
  for (const auto& r : recs) pairs.emplace_back(split_whitespace(preds.at(r.id)), split_whitespace(r.reference));
  return corpus_scores(pairs);
}

// ---- criterion 1 ----

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_op = 0, worst_model = 0;
  std::string worst_op_name, worst_model_name;
  bool ok = true;
  for (const auto& r : op_gradient_suite(0)) {
    ok = ok && r.passed(cli::kOpGradTolerance);
    if (r.max_rel_error >= worst_op) worst_op = r.max_rel_error, worst_op_name = r.name;
  }
  for (const auto& r : model_gradient_check(HyperParams::desk(), {true, true}, 0, 8)) {
    ok = ok && r.passed(cli::kModelGradTolerance);
    if (r.max_rel_error >= worst_model) worst_model = r.max_rel_error, worst_model_name = r.name;
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 120;
  return {ok, "worst op " + worst_op_name + " " + fmt("%.2e", worst_op) + " (< 1e-4), worst model tensor " +
                  worst_model_name + " " + fmt("%.2e", worst_model) + " (< 1e-3), " + fmt("%.1f", secs) +
                  " s (< 120 s)"};
}

// ---- criterion 2 ----

Outcome overfit() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto corpus = generate_overfit_corpus();
  auto hp = HyperParams::desk();
  const auto v = build_vocabularies(corpus.methods, hp);
  hp.code_vocab = v.code.size();
  hp.summary_vocab = v.summary.size();
  hp.ast_vocab = v.ast.size();
  const auto recs = encode_methods(corpus.methods, hp, v);

  auto p = init_model<float>(hp, {true, true}, 1);
  TrainConfig tc;
  tc.epochs = 100;
  tc.learning_rate = kLearningRate;
  tc.checkpoint_dir = work_dir() / "overfit";
  fit(p, recs, recs, tc);

  const auto samples = expand_all(recs);
  const auto stats = evaluate_samples(p, std::span<const TrainingSample>(samples));
  const auto preds = predictions(p, recs, v.summary);
  const double bleu_a = score(preds, recs).bleu_a;
  const std::string example = preds.count(kExampleTargetId) ? preds.at(kExampleTargetId) : "<missing>";
  const double secs = seconds_since(t0);
  const bool ok = recs.size() == 31 && corpus.methods.size() == 32 && stats.accuracy >= 0.95 && bleu_a >= 90 &&
                  example == kExampleReference && stats.mean_loss < 0.1 && secs < 300;
  return {ok, std::to_string(corpus.methods.size()) + " methods, " + std::to_string(tc.epochs) +
                  " epochs: train acc " + fmt("%.4f", stats.accuracy) + " (>= 0.95), BLEU-A " + fmt("%.2f", bleu_a) +
                  " (>= 90), loss " + fmt("%.4f", stats.mean_loss) + " (< 0.1), example \"" + example + "\", " +
                  fmt("%.1f", secs) + " s (< 300 s)"};
}

// ---- criterion 3 ----

Outcome metric_oracles() {
  bool ok = true;
  Rng rng(0);
  std::size_t self_ok = 0;
  for (int t = 0; t < 100; ++t) {
    Sentence s;
    const std::size_t len = 3 + rng.below(11);
    for (std::size_t i = 0; i < len; ++i) s.push_back("w" + std::to_string(rng.below(20)));
    if (sentence_bleu(s, s).aggregate == 100.0) ++self_ok;
  }
  ok = ok && self_ok == 100;
  const Sentence three = {"play", "mp3", "files"};
  const double three_score = sentence_bleu(three, three).aggregate;
  ok = ok && three_score == 100.0;
  const auto rouge = rouge_from_lcs(4, 7, 7);
  ok = ok && std::abs(rouge.precision - 0.571) <= 0.001 && std::abs(rouge.recall - 0.571) <= 0.001;
  const auto clipped = sentence_bleu(Sentence{"the", "the", "the"}, Sentence{"the", "cat", "sat"}).precision[0];
  ok = ok && clipped && std::abs(*clipped - 1.0 / 3.0) < 1e-12;
  const auto lcs = lcs_length(split_whitespace("converts the file from mp3 to wav"),
                              split_whitespace("converts the file from wav to mp3"));
  ok = ok && lcs == 5;
  return {ok, "self-BLEU 100 on " + std::to_string(self_ok) + "/100, 3-word match " + fmt("%.1f", three_score) +
                  ", ROUGE(LCS 4 of 7) P=" + fmt("%.4f", rouge.precision) + " R=" + fmt("%.4f", rouge.recall) +
                  ", clipped p1 " + fmt("%.4f", clipped.value_or(-1)) + ", mp3/wav LCS " + std::to_string(lcs)};
}

// ---- criteria 4, 5, 6: synthetic experiments ----

struct SeedResult {
  double bleu1_nofc = 0, bleu1_fc = 0;
  ProvenanceStats provenance;
  std::size_t attn_hits = 0, attn_total = 0;
  double worst_heatmap_sum_error = 0;
  double ablated_ast_bleu_a = 0, ablated_fc_bleu_a = 0;
};

struct Experiments {
  std::vector<SeedResult> seeds;
  double main_seconds = 0;
  double ablation_seconds = 0;
  bool ran = false;
  bool ablation_ran = false;
};

Experiments& experiments() {
  static Experiments e;
  return e;
}

// Step whose decoder row predicts the last summary word.
std::size_t decisive_step(const MethodRecord& r) { return cli::default_attention_step(r); }

void run_main_experiment() {
  auto& ex = experiments();
  if (ex.ran) return;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t s = 1; s <= kSeeds; ++s) {
    SyntheticOptions opt;
    opt.files = kFiles;
    opt.seed = s;
    const auto corpus = generate_fc_corpus(opt);
    const auto pc = prepare_corpus(corpus.methods, HyperParams::desk(), kRatios, s);
    SeedResult res;

    const auto base = train_model(pc, {true, false}, s, pc.train, pc.val);
    const auto fc = train_model(pc, {true, true}, s, pc.train, pc.val);
    const auto base_pred = predictions(base, pc.test, pc.vocabs.summary);
    const auto fc_pred = predictions(fc, pc.test, pc.vocabs.summary);
    res.bleu1_nofc = score(base_pred, pc.test).bleu[0].value_or(0);
    res.bleu1_fc = score(fc_pred, pc.test).bleu[0].value_or(0);

    std::map<std::string, std::string> refs;
    for (const auto& r : pc.test) refs[r.id] = r.reference;
    res.provenance = word_provenance(pc.test, base_pred, fc_pred, refs);

    for (const auto& r : pc.test) {
      const auto steps = capture_attention(fc, r, r.summary_ids);
      const auto step = decisive_step(r);
      const auto path = work_dir() / ("heatmap_seed" + std::to_string(s) + ".csv");
      const auto h = export_attention_heatmap(steps, step, path);
      const auto back = read_heatmap_csv(path);
      for (std::size_t c = 0; c < back.cols(); ++c) {
        double sum = 0;
        for (std::size_t i = 0; i < back.rows(); ++i) sum += back(i, c);
        res.worst_heatmap_sum_error = std::max(res.worst_heatmap_sum_error, std::abs(sum - 1.0));
      }
      const auto row = informative_context_row(corpus.methods, r.id, corpus.planted.at(r.id).informative_id, pc.hp.n);
      std::size_t best = 0;
      for (std::size_t i = 1; i < h.rows(); ++i)
        if (h(i, step) > h(best, step)) best = i;
      ++res.attn_total;
      if (row && *row == best) ++res.attn_hits;
    }
    ex.seeds.push_back(res);
    std::fprintf(stderr, "  seed %zu: BLEU1 %.2f -> %.2f, attention %zu/%zu, provenance used %zu/%zu\n", s,
                 res.bleu1_nofc, res.bleu1_fc, res.attn_hits, res.attn_total, res.provenance.used_context_word,
                 res.provenance.context_word_available);
  }
  ex.main_seconds = seconds_since(t0);
  ex.ran = true;
}

void run_ablation_experiment() {
  auto& ex = experiments();
  if (ex.ablation_ran) return;
  if (ex.seeds.size() < kSeeds) ex.seeds.resize(kSeeds);
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t s = 1; s <= kSeeds; ++s) {
    SyntheticOptions opt;
    opt.files = kFiles;
    opt.seed = s;
    auto pc = prepare_corpus(generate_fc_corpus(opt).methods, HyperParams::desk(), kRatios, s);
    for (auto* part : {&pc.train, &pc.val, &pc.test})
      for (auto& r : *part) r = ablate_code_text(std::move(r));
    const auto ast = train_model(pc, {true, false}, s, pc.train, pc.val);
    const auto fc = train_model(pc, {true, true}, s, pc.train, pc.val);
    auto& res = ex.seeds[s - 1];
    res.ablated_ast_bleu_a = score(predictions(ast, pc.test, pc.vocabs.summary), pc.test).bleu_a;
    res.ablated_fc_bleu_a = score(predictions(fc, pc.test, pc.vocabs.summary), pc.test).bleu_a;
    std::fprintf(stderr, "  seed %zu ablated: BLEU-A ast-only %.2f, +FC %.2f\n", s, res.ablated_ast_bleu_a,
                 res.ablated_fc_bleu_a);
  }
  ex.ablation_seconds = seconds_since(t0);
  ex.ablation_ran = true;
}

Outcome fc_benefit() {
  run_main_experiment();
  const auto& ex = experiments();
  std::size_t wins = 0, available = 0, used = 0;
  double mean_nofc = 0, mean_fc = 0;
  for (const auto& r : ex.seeds) {
    wins += r.bleu1_fc > r.bleu1_nofc;
    available += r.provenance.context_word_available;
    used += r.provenance.used_context_word;
    mean_nofc += r.bleu1_nofc / kSeeds;
    mean_fc += r.bleu1_fc / kSeeds;
  }
  const double rate = available ? static_cast<double>(used) / static_cast<double>(available) : 0.0;
  const bool ok = wins >= 8 && rate >= 0.5 && ex.main_seconds < 900;
  return {ok, "+FC BLEU1 higher in " + std::to_string(wins) + "/10 seeds (>= 8), mean " + fmt("%.2f", mean_nofc) +
                  " -> " + fmt("%.2f", mean_fc) + ", context-word use rate " + std::to_string(used) + "/" +
                  std::to_string(available) + " = " + fmt("%.3f", rate) + " (>= 0.5), " +
                  fmt("%.0f", ex.main_seconds) + " s (< 900 s)"};
}

Outcome ablation() {
  run_ablation_experiment();
  const auto& ex = experiments();
  std::size_t wins = 0;
  double mean_ast = 0, mean_fc = 0;
  for (const auto& r : ex.seeds) {
    wins += r.ablated_fc_bleu_a > r.ablated_ast_bleu_a;
    mean_ast += r.ablated_ast_bleu_a / kSeeds;
    mean_fc += r.ablated_fc_bleu_a / kSeeds;
  }
  return {wins >= 8, "code/text ablated: +FC BLEU-A higher in " + std::to_string(wins) + "/10 seeds (>= 8), mean " +
                         fmt("%.2f", mean_ast) + " (ast-only) vs " + fmt("%.2f", mean_fc) + " (+FC), " +
                         fmt("%.0f", ex.ablation_seconds) + " s"};
}

Outcome attention_localization() {
  run_main_experiment();
  const auto& ex = experiments();
  std::size_t seed_hits = 0, hits = 0, total = 0;
  double worst = 0;
  for (const auto& r : ex.seeds) {
    seed_hits += 2 * r.attn_hits > r.attn_total;
    hits += r.attn_hits;
    total += r.attn_total;
    worst = std::max(worst, r.worst_heatmap_sum_error);
  }
  const bool ok = seed_hits >= 8 && worst <= 1e-5;
  return {ok, "decisive-row argmax on planted function in " + std::to_string(seed_hits) + "/10 seeds (>= 8; " +
                  std::to_string(hits) + "/" + std::to_string(total) + " methods), heatmap column sums within " +
                  fmt("%.1e", worst) + " of 1 (<= 1e-5)"};
}

// ---- criterion 7 ----

AstNode random_tree(Rng& rng, std::size_t depth = 0) {
  static const char* labels[] = {"Block", "IfStatement", "SimpleName", "MethodInvocation", "ReturnStatement"};
  AstNode n{labels[rng.below(5)], {}, {}};
  const std::size_t kids = depth >= 6 ? 0 : rng.below(4);
  for (std::size_t i = 0; i < kids; ++i) n.children.push_back(random_tree(rng, depth + 1));
  if (n.children.empty() && rng.below(2)) n.value = "v" + std::to_string(rng.below(10));
  return n;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome structural() {
  std::vector<std::string> failures;
  const auto corpus = generate_fc_corpus({.files = kFiles, .seed = 3});
  const auto pc = prepare_corpus(corpus.methods, HyperParams::desk(), {1, 0, 0}, 3);

  std::size_t expected_samples = 0;
  for (const auto& r : pc.train) expected_samples += split_whitespace(r.reference).size() + 1;
  const auto samples = expand_all(pc.train);
  if (samples.size() != expected_samples) failures.push_back("teacher-forcing count");

  std::map<std::string, const RawMethod*> raw;
  for (const auto& m : corpus.methods) raw[m.id] = &m;
  std::size_t rows_checked = 0;
  for (const auto& r : pc.train) {
    const auto own = encode_sequence(method_code_tokens(*raw.at(r.id)), pc.vocabs.code, pc.hp.m);
    for (std::size_t i = 0; i < r.fc.n; ++i, ++rows_checked) {
      const auto row = r.fc.row(i);
      if (std::equal(row.begin(), row.end(), own.begin())) failures.push_back("self-inclusion in " + r.id);
    }
  }

  Rng rng(5);
  std::size_t balanced = 0;
  for (int t = 0; t < 500; ++t) {
    long depth = 0;
    bool ok = true;
    for (const auto& tok : sbt_flatten(random_tree(rng))) {
      depth += tok == "(" ? 1 : tok == ")" ? -1 : 0;
      ok = ok && depth >= 0;
    }
    balanced += ok && depth == 0;
  }
  if (balanced != 500) failures.push_back("SBT balance");

  const auto params = init_model<float>(pc.hp, {true, true}, 9);
  const auto ckpt = work_dir() / "roundtrip.fcsm";
  save_checkpoint(ckpt, params);
  const auto loaded = load_checkpoint<float>(ckpt);
  const auto& rec = pc.train.front();
  std::vector<TokenId> prefix(pc.hp.comlen, kPad);
  prefix[0] = kStart;
  if (forward(params, rec, prefix).probabilities != forward(loaded, rec, prefix).probabilities) {
    failures.push_back("checkpoint round trip");
  }

  // Two identical `train` invocations through the command-line front end.
  const auto dir = work_dir() / "determinism";
  fs::remove_all(dir);
  std::ostringstream sink;
  const auto call = [&](std::vector<std::string> args) { return cli::dispatch(args, sink, sink); };
  bool cli_ok = call({"synth", "--out", (dir / "raw.jsonl").string(), "--files", "12", "--seed", "4"}) == 0 &&
                call({"preprocess", "--input", (dir / "raw.jsonl").string(), "--out", (dir / "data").string(),
                      "--seed", "4"}) == 0;
  for (const auto* run : {"a", "b"}) {
    cli_ok = cli_ok && call({"train", "--data", (dir / "data").string(), "--out", (dir / run).string(), "--epochs",
                             "2", "--learning-rate", "0.01", "--seed", "7"}) == 0;
  }
  const auto ha = read_all(dir / "a" / "history.csv");
  if (!cli_ok || ha.empty() || ha != read_all(dir / "b" / "history.csv"))
    failures.push_back("train determinism: " + sink.str());

  std::string detail = std::to_string(samples.size()) + " teacher-forced samples = sum(words + 1), " +
                       std::to_string(rows_checked) + " context rows self-excluded, " + std::to_string(balanced) +
                       "/500 SBT trees balanced, checkpoint forward bit-identical, repeated train history identical";
  if (!failures.empty()) {
    detail = "failed:";
    for (const auto& f : failures) detail += " [" + f + "]";
  }
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  setenv("FCSUM_LOG_LEVEL", "0", 0);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient suite", gradient_suite},
      {"overfit 32-method corpus", overfit},
      {"metric oracles", metric_oracles},
      {"file-context benefit", fc_benefit},
      {"ablation direction", ablation},
      {"attention localization", attention_localization},
      {"structural invariants", structural},
  };
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(static_cast<std::size_t>(std::atoi(argv[i])));

  std::size_t failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected.empty() && !selected.count(i + 1)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s [%zu] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  fs::remove_all(work_dir());
  return failed == 0 ? 0 : 1;
}
