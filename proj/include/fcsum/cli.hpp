#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fcsum/analysis/breakdown.hpp"
#include "fcsum/analysis/heatmap.hpp"
#include "fcsum/analysis/histogram.hpp"
#include "fcsum/analysis/provenance.hpp"
#include "fcsum/corpus/synthetic.hpp"
#include "fcsum/inference/decode.hpp"
#include "fcsum/metrics/report.hpp"
#include "fcsum/model/gradcheck.hpp"
#include "fcsum/training/config.hpp"

namespace fcsum::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

namespace fs = std::filesystem;

// On-disk layout written by `preprocess` and read by the other subcommands.
struct DatasetDir {
  fs::path root;

  fs::path config() const { return root / "dataset.cfg"; }
  fs::path vocab(const std::string& kind) const { return root / (kind + ".vocab"); }
  fs::path split(const std::string& name) const { return root / (name + ".jsonl"); }
  fs::path refs(const std::string& name) const { return root / (name + ".refs.tsv"); }
};

inline const std::vector<std::string> kSplits = {"train", "val", "test"};

inline HyperParams load_dataset_hyperparams(const DatasetDir& d) {
  RunConfig cfg;
  apply_config(cfg, load_config_file(d.config()));
  return cfg.hp;
}

inline TsvRows references_of(const std::vector<MethodRecord>& records) {
  TsvRows rows;
  for (const auto& r : records) rows.emplace_back(r.id, r.reference);
  return rows;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

inline std::array<double, 3> parse_ratios(const std::string& text) {
  std::array<double, 3> r{};
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  char c1 = 0, c2 = 0;
  if (!(in >> r[0] >> c1 >> r[1] >> c2 >> r[2]) || c1 != ',' || c2 != ',') {
    throw DataError("--split-ratios expects three comma-separated numbers, got '" + text + "'");
  }
  return r;
}

// ---- subcommand bodies ----

struct PreprocessArgs {
  fs::path input, out, config;
  std::string ratios = "0.8,0.1,0.1";
  std::uint64_t seed = 0;
};

inline void run_preprocess(const PreprocessArgs& a, std::ostream& out) {
  RunConfig cfg;
  if (!a.config.empty()) apply_config(cfg, load_config_file(a.config));
  const auto methods = load_dataset(a.input);
  const auto pc = prepare_corpus(methods, cfg.hp, parse_ratios(a.ratios), a.seed);
  const DatasetDir d{a.out};
  fs::create_directories(d.root);
  write_text(d.config(), hyperparams_to_config(pc.hp));
  pc.vocabs.code.save(d.vocab("code"));
  pc.vocabs.summary.save(d.vocab("summary"));
  pc.vocabs.ast.save(d.vocab("ast"));
  const std::map<std::string, const std::vector<MethodRecord>*> parts = {
      {"train", &pc.train}, {"val", &pc.val}, {"test", &pc.test}};
  for (const auto& [name, recs] : parts) {
    save_records(d.split(name), *recs);
    write_tsv(d.refs(name), references_of(*recs));
  }
  out << "preprocessed " << methods.size() << " methods: " << pc.train.size() << " train, " << pc.val.size()
      << " val, " << pc.test.size() << " test records; vocab sizes code " << pc.hp.code_vocab << ", summary "
      << pc.hp.summary_vocab << ", ast " << pc.hp.ast_vocab << "\n";
}

struct TrainArgs {
  fs::path data, config, out;
  std::optional<std::size_t> epochs, batch_size;
  std::optional<double> learning_rate;
  std::optional<std::string> variant;
  std::optional<std::uint64_t> seed;
};

inline RunConfig resolve_train_config(const TrainArgs& a, const HyperParams& data_hp) {
  RunConfig cfg;
  cfg.hp = data_hp;
  if (!a.config.empty()) apply_config(cfg, load_config_file(a.config));
  if (a.epochs) cfg.train.epochs = *a.epochs;
  if (a.batch_size) cfg.train.batch_size = *a.batch_size;
  if (a.learning_rate) cfg.train.learning_rate = *a.learning_rate;
  if (a.variant) cfg.flags = ModelFlags::from_variant(*a.variant);
  if (a.seed) cfg.train.seed = *a.seed;
  if (!a.out.empty()) cfg.train.checkpoint_dir = a.out;
  // Sequence lengths and vocabulary sizes are fixed by the encoded dataset;
  // a config may only change layer widths.
  const auto fixed = {&HyperParams::n, &HyperParams::m, &HyperParams::tdatlen, &HyperParams::astlen,
                      &HyperParams::comlen, &HyperParams::code_vocab, &HyperParams::summary_vocab,
                      &HyperParams::ast_vocab};
  for (const auto field : fixed) cfg.hp.*field = data_hp.*field;
  return cfg;
}

inline void run_train(const TrainArgs& a, std::ostream& out) {
  const DatasetDir d{a.data};
  const auto cfg = resolve_train_config(a, load_dataset_hyperparams(d));
  cfg.hp.validate();
  if (cfg.train.epochs == 0 || cfg.train.batch_size == 0) throw DataError("epochs and batch size must be at least 1");
  const auto train = load_records(d.split("train"));
  const auto val = load_records(d.split("val"));
  for (const auto* part : {&train, &val})
    for (const auto& r : *part) validate_record(r, cfg.hp);
  auto params = init_model<float>(cfg.hp, cfg.flags, cfg.train.seed);
  const auto result = fit(params, train, val, cfg.train);
  save_checkpoint(cfg.train.checkpoint_dir / "best.fcsm", params);
  out << cfg.flags.variant_name() << ": best epoch " << result.best_epoch << " (val acc "
      << result.history[result.best_epoch - 1].val_acc << "), saved " << (cfg.train.checkpoint_dir / "best.fcsm").string()
      << "\n";
}

struct PredictArgs {
  fs::path checkpoint, data, out;
  std::string split = "test";
  std::uint64_t seed = 0;
};

inline TsvRows predict_rows(const ModelParams<float>& params, const std::vector<MethodRecord>& records,
                            const Vocab& summary_vocab) {
  TsvRows rows;
  for (const auto& r : records) rows.emplace_back(r.id, join_words(ids_to_words(predict_summary(params, r), summary_vocab)));
  return rows;
}

inline void require_vocab_match(const ModelParams<float>& params, const DatasetDir& d, const Vocab& summary) {
  const auto hp = load_dataset_hyperparams(d);
  if (hp.code_vocab != params.hp.code_vocab || hp.summary_vocab != params.hp.summary_vocab ||
      hp.ast_vocab != params.hp.ast_vocab || summary.size() != params.hp.summary_vocab) {
    throw DataError("checkpoint vocabulary sizes do not match dataset " + d.root.string());
  }
}

inline void run_predict(const PredictArgs& a, std::ostream& out) {
  const DatasetDir d{a.data};
  const auto params = load_checkpoint<float>(a.checkpoint);
  const auto summary = Vocab::load(d.vocab("summary"));
  require_vocab_match(params, d, summary);
  const auto records = load_records(d.split(a.split));
  const auto rows = predict_rows(params, records, summary);
  write_tsv(a.out, rows);
  out << "wrote " << rows.size() << " predictions to " << a.out.string() << "\n";
}

struct EvaluateArgs {
  fs::path pred, ref, csv;
  std::string label = "model";
  std::uint64_t seed = 0;
};

inline void run_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto rep = corpus_scores(align_predictions(read_tsv(a.pred), read_tsv(a.ref)));
  out << format_report_table(rep, a.label);
  if (!a.csv.empty()) write_text(a.csv, format_report_csv(rep, a.label));
}

struct AnalyzeArgs {
  fs::path data, out;
  std::string split = "test";
  std::vector<std::string> preds;  // name=path
  std::string baseline, candidate;
  double threshold = 25.0;
  std::uint64_t seed = 0;
};

inline void run_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const DatasetDir d{a.data};
  const auto refs_rows = read_tsv(d.refs(a.split));
  const auto refs = tsv_index(refs_rows, "references");
  std::map<std::string, std::map<std::string, std::string>> preds;
  for (const auto& spec : a.preds) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw DataError("--pred expects NAME=PATH, got '" + spec + "'");
    preds[spec.substr(0, eq)] = tsv_index(read_tsv(spec.substr(eq + 1)), spec.substr(0, eq));
  }
  if (preds.empty()) throw DataError("analyze needs at least one --pred NAME=PATH");

  ModelScores bleu1;
  for (const auto& [name, rows] : preds) {
    if (rows.size() != refs.size()) throw DataError("model '" + name + "' does not cover the reference set");
    for (const auto& [id, ref] : refs) {
      const auto it = rows.find(id);
      if (it == rows.end()) throw DataError("model '" + name + "' has no prediction for '" + id + "'");
      const auto p1 = sentence_bleu(split_whitespace(it->second), split_whitespace(ref)).precision[0];
      bleu1[name][id] = 100.0 * p1.value_or(0.0);
    }
  }
  fs::create_directories(a.out);

  std::string hist = "model,bucket_0_25,bucket_25_50,bucket_50_75,bucket_75_100\n";
  for (const auto& [name, scores] : bleu1) {
    std::vector<double> v;
    for (const auto& [_, s] : scores) v.push_back(s);
    hist += name;
    for (const auto c : bleu1_histogram(v)) hist += "," + std::to_string(c);
    hist += "\n";
  }
  write_text(a.out / "bleu1_histogram.csv", hist);

  const auto bd = best_model_breakdown(bleu1, a.threshold);
  std::string br = "credit,count,percent\n";
  const auto pct = [&](std::size_t c) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", bd.total ? 100.0 * static_cast<double>(c) / static_cast<double>(bd.total) : 0.0);
    return std::string(buf);
  };
  for (const auto& [name, c] : bd.wins) br += name + "," + std::to_string(c) + "," + pct(c) + "\n";
  for (const auto& [set, c] : bd.ties) {
    std::string key = "tie:";
    for (std::size_t i = 0; i < set.size(); ++i) key += (i ? "+" : "") + set[i];
    br += key + "," + std::to_string(c) + "," + pct(c) + "\n";
  }
  br += "none," + std::to_string(bd.uncredited) + "," + pct(bd.uncredited) + "\n";
  write_text(a.out / "best_model.csv", br);

  if (!a.baseline.empty() || !a.candidate.empty()) {
    if (!preds.contains(a.baseline) || !preds.contains(a.candidate)) {
      throw DataError("--baseline and --candidate must name models given with --pred");
    }
    const auto records = load_records(d.split(a.split));
    const auto st = word_provenance(records, preds.at(a.baseline), preds.at(a.candidate), refs);
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "compared,improved,context_word_available,used_context_word,worsened,misleading_context_word,tied,"
                  "available_rate,used_rate\n%zu,%zu,%zu,%zu,%zu,%zu,%zu,%.4f,%.4f\n",
                  st.compared, st.improved, st.context_word_available, st.used_context_word, st.worsened,
                  st.misleading_context_word, st.tied, st.available_rate(), st.used_rate());
    write_text(a.out / "provenance.csv", buf);
  }
  out << hist << "\n" << br;
}

struct AttentionArgs {
  fs::path checkpoint, data, out;
  std::string split = "test";
  std::string method;
  std::optional<std::size_t> step;
  bool pgm = false;
  std::uint64_t seed = 0;
};

// Default step: the last forced word before the final summary word, the
// position whose attention decides that word.
inline std::size_t default_attention_step(const MethodRecord& r) {
  std::size_t words = 0;
  for (std::size_t i = 1; i < r.summary_ids.size() && r.summary_ids[i] != kEnd; ++i) ++words;
  return words == 0 ? 0 : words - 1;
}

inline void run_attention(const AttentionArgs& a, std::ostream& out) {
  const DatasetDir d{a.data};
  const auto params = load_checkpoint<float>(a.checkpoint);
  if (!params.flags.use_fc) throw DataError("checkpoint " + a.checkpoint.string() + " has no file-context encoder");
  const auto records = load_records(d.split(a.split));
  const auto it = std::find_if(records.begin(), records.end(), [&](const MethodRecord& r) { return r.id == a.method; });
  if (it == records.end()) throw DataError("no method '" + a.method + "' in split " + a.split);
  const auto steps = capture_attention(params, *it, it->summary_ids);
  const auto step = a.step.value_or(default_attention_step(*it));
  const auto h = export_attention_heatmap(steps, step, a.out, {a.pgm, 8});
  std::size_t best = 0;
  for (std::size_t r = 1; r < h.rows(); ++r)
    if (h(r, step) > h(best, step)) best = r;
  out << "step " << step << ": strongest context function " << best + 1 << " (weight " << h(best, step) << ")\n";
}

struct AblateArgs {
  fs::path data, out;
  std::uint64_t seed = 0;
};

inline void run_ablate(const AblateArgs& a, std::ostream& out) {
  const DatasetDir src{a.data}, dst{a.out};
  if (fs::weakly_canonical(src.root) == fs::weakly_canonical(dst.root)) {
    throw DataError("ablate output directory must differ from the input");
  }
  fs::create_directories(dst.root);
  fs::copy_file(src.config(), dst.config(), fs::copy_options::overwrite_existing);
  for (const auto* kind : {"code", "summary", "ast"})
    fs::copy_file(src.vocab(kind), dst.vocab(kind), fs::copy_options::overwrite_existing);
  std::size_t n = 0;
  for (const auto& split : kSplits) {
    auto records = load_records(src.split(split));
    for (auto& r : records) r = ablate_code_text(std::move(r));
    n += records.size();
    save_records(dst.split(split), records);
    fs::copy_file(src.refs(split), dst.refs(split), fs::copy_options::overwrite_existing);
  }
  out << "ablated code/text in " << n << " records\n";
}

struct GradcheckArgs {
  std::uint64_t seed = 0;
  std::size_t entries = 4;
};

inline constexpr double kOpGradTolerance = 1e-4;
inline constexpr double kModelGradTolerance = 1e-3;

inline bool run_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  bool ok = true;
  const auto report = [&](const GradCheckResult& r, double tol) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-4s %-34s max_rel_err %.3e (%zu entries)\n", r.passed(tol) ? "ok" : "FAIL",
                  r.name.c_str(), r.max_rel_error, r.checked);
    out << buf;
    ok = ok && r.passed(tol);
  };
  for (const auto& r : op_gradient_suite(a.seed)) report(r, kOpGradTolerance);
  auto hp = HyperParams::desk();
  hp.code_vocab = 40;
  hp.summary_vocab = 30;
  hp.ast_vocab = 20;
  for (const auto& r : model_gradient_check(hp, {true, true}, a.seed, a.entries)) report(r, kModelGradTolerance);
  return ok;
}

struct SynthArgs {
  fs::path out;
  std::size_t files = 60;
  bool overfit = false;
  std::uint64_t seed = 0;
};

inline void run_synth(const SynthArgs& a, std::ostream& out) {
  SyntheticOptions opt;
  opt.files = a.files;
  opt.seed = a.seed;
  const auto corpus = a.overfit ? generate_overfit_corpus(a.seed) : generate_fc_corpus(opt);
  save_dataset(a.out, corpus.methods);
  out << "wrote " << corpus.methods.size() << " methods to " << a.out.string() << "\n";
}

// ---- dispatch ----

inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"File-context source code summarization toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  PreprocessArgs pre;
  auto* c_pre = app.add_subcommand("preprocess", "Raw JSONL -> vocabularies + encoded dataset directory");
  c_pre->add_option("--input", pre.input, "Raw method JSONL")->required();
  c_pre->add_option("--out", pre.out, "Output dataset directory")->required();
  c_pre->add_option("--config", pre.config, "key = value config (hyperparameters)");
  c_pre->add_option("--split-ratios", pre.ratios, "train,val,test ratios")->capture_default_str();
  c_pre->add_option("--seed", pre.seed, "Split seed")->capture_default_str();

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train a model; writes per-epoch checkpoints and history.csv");
  c_tr->add_option("--data", tr.data, "Dataset directory from preprocess")->required();
  c_tr->add_option("--config", tr.config, "key = value config");
  c_tr->add_option("--out", tr.out, "Checkpoint directory (overrides checkpoint_dir)");
  c_tr->add_option("--epochs", tr.epochs, "Number of epochs");
  c_tr->add_option("--batch-size", tr.batch_size, "Batch size");
  c_tr->add_option("--learning-rate", tr.learning_rate, "Adam learning rate");
  c_tr->add_option("--variant", tr.variant, "attendgru | ast-attendgru | attendgru+FC | ast-attendgru+FC");
  c_tr->add_option("--seed", tr.seed, "Initialization and shuffling seed");

  PredictArgs pr;
  auto* c_pr = app.add_subcommand("predict", "Greedy predictions for a dataset split -> TSV");
  c_pr->add_option("--checkpoint", pr.checkpoint, "Checkpoint file")->required();
  c_pr->add_option("--data", pr.data, "Dataset directory")->required();
  c_pr->add_option("--split", pr.split, "train | val | test")->capture_default_str();
  c_pr->add_option("--out", pr.out, "Prediction TSV")->required();
  c_pr->add_option("--seed", pr.seed, "Accepted for uniformity; decoding is deterministic");

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "BLEU and ROUGE-LCS report for a prediction TSV");
  c_ev->add_option("--pred", ev.pred, "Prediction TSV")->required();
  c_ev->add_option("--ref", ev.ref, "Reference TSV")->required();
  c_ev->add_option("--csv", ev.csv, "Also write the report as CSV");
  c_ev->add_option("--label", ev.label, "Row label")->capture_default_str();
  c_ev->add_option("--seed", ev.seed, "Accepted for uniformity");

  AnalyzeArgs an;
  auto* c_an = app.add_subcommand("analyze", "Histogram, best-model and word-provenance tables");
  c_an->add_option("--data", an.data, "Dataset directory")->required();
  c_an->add_option("--split", an.split, "Split the predictions cover")->capture_default_str();
  c_an->add_option("--pred", an.preds, "NAME=PATH prediction TSV (repeatable)")->required();
  c_an->add_option("--baseline", an.baseline, "Model A for word provenance");
  c_an->add_option("--candidate", an.candidate, "Model B for word provenance");
  c_an->add_option("--threshold", an.threshold, "BLEU1 credit threshold")->capture_default_str();
  c_an->add_option("--out", an.out, "Output directory")->required();
  c_an->add_option("--seed", an.seed, "Accepted for uniformity");

  AttentionArgs at;
  auto* c_at = app.add_subcommand("attention", "Export the file-context attention heatmap for one method");
  c_at->add_option("--checkpoint", at.checkpoint, "Checkpoint file (+FC variant)")->required();
  c_at->add_option("--data", at.data, "Dataset directory")->required();
  c_at->add_option("--split", at.split, "Split holding the method")->capture_default_str();
  c_at->add_option("--method", at.method, "Method id")->required();
  c_at->add_option("--step", at.step, "Decoding step (default: the step emitting the last summary word)");
  c_at->add_option("--out", at.out, "Heatmap CSV path")->required();
  c_at->add_flag("--pgm", at.pgm, "Also write a PGM image next to the CSV");
  c_at->add_option("--seed", at.seed, "Accepted for uniformity");

  AblateArgs ab;
  auto* c_ab = app.add_subcommand("ablate", "Copy a dataset directory with code/text sequences set to PAD");
  c_ab->add_option("--data", ab.data, "Dataset directory")->required();
  c_ab->add_option("--out", ab.out, "Output dataset directory")->required();
  c_ab->add_option("--seed", ab.seed, "Accepted for uniformity");

  GradcheckArgs gc;
  auto* c_gc = app.add_subcommand("gradcheck", "Finite-difference gradient suite at double precision");
  c_gc->add_option("--seed", gc.seed, "Seed for random inputs")->capture_default_str();
  c_gc->add_option("--entries", gc.entries, "Sampled entries per model tensor")->capture_default_str();

  SynthArgs sy;
  auto* c_sy = app.add_subcommand("synth", "Generate a synthetic raw corpus with a planted file-context signal");
  c_sy->add_option("--out", sy.out, "Raw JSONL path")->required();
  c_sy->add_option("--files", sy.files, "Number of files")->capture_default_str();
  c_sy->add_flag("--overfit", sy.overfit, "Emit the 32-method memorization corpus instead");
  c_sy->add_option("--seed", sy.seed, "Generator seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_pre->parsed()) run_preprocess(pre, out);
    else if (c_tr->parsed()) run_train(tr, out);
    else if (c_pr->parsed()) run_predict(pr, out);
    else if (c_ev->parsed()) run_evaluate(ev, out);
    else if (c_an->parsed()) run_analyze(an, out);
    else if (c_at->parsed()) run_attention(at, out);
    else if (c_ab->parsed()) run_ablate(ab, out);
    else if (c_gc->parsed()) return run_gradcheck(gc, out) ? kExitOk : kExitNumeric;
    else if (c_sy->parsed()) run_synth(sy, out);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

inline int dispatch(const std::vector<std::string>& args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  std::vector<const char*> argv{"fcsum"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace fcsum::cli
