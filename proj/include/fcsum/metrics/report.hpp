#pragma once

#include <array>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fcsum/corpus/tokenize.hpp"
#include "fcsum/io/tsv.hpp"
#include "fcsum/metrics/bleu.hpp"
#include "fcsum/metrics/rouge.hpp"

namespace fcsum {

using Sentence = std::vector<std::string>;
using SentencePair = std::pair<Sentence, Sentence>;  // (prediction, reference)

// Corpus scores as means of per-sentence scores, all scaled to [0, 100].
struct CorpusReport {
  std::size_t count = 0;
  double bleu_a = 0;
  std::array<std::optional<double>, 4> bleu;  // mean p_n, over sentences where p_n is defined
  double rouge_p = 0;
  double rouge_r = 0;
  double rouge_f = 0;
};

inline CorpusReport corpus_scores(const std::vector<SentencePair>& pairs) {
  if (pairs.empty()) throw DataError("corpus_scores: no sentence pairs");
  CorpusReport rep;
  rep.count = pairs.size();
  std::array<double, 4> p_sum{};
  std::array<std::size_t, 4> p_count{};
  for (const auto& [pred, ref] : pairs) {
    const auto b = sentence_bleu(pred, ref);
    rep.bleu_a += b.aggregate;
    for (std::size_t n = 0; n < 4; ++n) {
      if (b.precision[n]) {
        p_sum[n] += *b.precision[n];
        ++p_count[n];
      }
    }
    const auto r = rouge_lcs(pred, ref);
    rep.rouge_p += r.precision;
    rep.rouge_r += r.recall;
    rep.rouge_f += r.f1;
  }
  const auto n = static_cast<double>(pairs.size());
  rep.bleu_a /= n;
  for (std::size_t k = 0; k < 4; ++k)
    if (p_count[k] > 0) rep.bleu[k] = 100.0 * p_sum[k] / static_cast<double>(p_count[k]);
  rep.rouge_p = 100.0 * rep.rouge_p / n;
  rep.rouge_r = 100.0 * rep.rouge_r / n;
  rep.rouge_f = 100.0 * rep.rouge_f / n;
  return rep;
}

// Pairs predictions with references by method id; both files must cover the same ids.
inline std::vector<SentencePair> align_predictions(const TsvRows& predictions, const TsvRows& references) {
  if (predictions.size() != references.size()) {
    throw DataError("prediction file has " + std::to_string(predictions.size()) + " rows, reference file has " +
                    std::to_string(references.size()));
  }
  const auto refs = tsv_index(references, "references");
  std::vector<SentencePair> pairs;
  pairs.reserve(predictions.size());
  for (const auto& [id, text] : predictions) {
    const auto it = refs.find(id);
    if (it == refs.end()) throw DataError("no reference for method '" + id + "'");
    pairs.emplace_back(split_whitespace(text), split_whitespace(it->second));
  }
  return pairs;
}

namespace detail {
inline std::string fmt2(std::optional<double> v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}
}  // namespace detail

inline std::string format_report_table(const CorpusReport& r, const std::string& label = "model") {
  char buf[512];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-20s %8s %8s %8s %8s %8s %8s %8s %8s %6s\n", "", "BLEU-A", "BLEU-1", "BLEU-2",
                "BLEU-3", "BLEU-4", "ROUGE-P", "ROUGE-R", "ROUGE-F", "n");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-20s %8s %8s %8s %8s %8s %8s %8s %8s %6zu\n", label.c_str(),
                detail::fmt2(r.bleu_a).c_str(), detail::fmt2(r.bleu[0]).c_str(), detail::fmt2(r.bleu[1]).c_str(),
                detail::fmt2(r.bleu[2]).c_str(), detail::fmt2(r.bleu[3]).c_str(), detail::fmt2(r.rouge_p).c_str(),
                detail::fmt2(r.rouge_r).c_str(), detail::fmt2(r.rouge_f).c_str(), r.count);
  out += buf;
  return out;
}

inline std::string format_report_csv(const CorpusReport& r, const std::string& label = "model") {
  std::string out = "model,bleu_a,bleu_1,bleu_2,bleu_3,bleu_4,rouge_p,rouge_r,rouge_f,n\n";
  out += label + "," + detail::fmt2(r.bleu_a) + "," + detail::fmt2(r.bleu[0]) + "," + detail::fmt2(r.bleu[1]) + "," +
         detail::fmt2(r.bleu[2]) + "," + detail::fmt2(r.bleu[3]) + "," + detail::fmt2(r.rouge_p) + "," +
         detail::fmt2(r.rouge_r) + "," + detail::fmt2(r.rouge_f) + "," + std::to_string(r.count) + "\n";
  return out;
}

}  // namespace fcsum
