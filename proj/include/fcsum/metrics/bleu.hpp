#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fcsum {

struct BleuReport {
  std::array<std::optional<double>, 4> precision;  // p1..p4 in [0, 1]; absent when the reference is shorter than n
  double brevity_penalty = 0;
  double aggregate = 0;  // [0, 100]
  std::size_t order = 0;  // min(4, |ref|)
};

namespace detail {

inline std::map<std::vector<std::string>, std::size_t> ngram_counts(std::span<const std::string> words, std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  for (std::size_t i = 0; i + n <= words.size(); ++i) ++counts[std::vector<std::string>(words.begin() + i, words.begin() + i + n)];
  return counts;
}

}  // namespace detail

// Clipped n-gram precision: each predicted n-gram counts at most as often as
// it occurs in the reference. Zero when the prediction has no n-grams.
inline double modified_precision(std::span<const std::string> pred, std::span<const std::string> ref, std::size_t n) {
  if (pred.size() < n) return 0.0;
  const auto pc = detail::ngram_counts(pred, n);
  const auto rc = detail::ngram_counts(ref, n);
  std::size_t clipped = 0;
  for (const auto& [g, c] : pc) {
    const auto it = rc.find(g);
    if (it != rc.end()) clipped += std::min(c, it->second);
  }
  return static_cast<double>(clipped) / static_cast<double>(pred.size() - n + 1);
}

// Sentence BLEU with the order capped at the reference length, so an exact
// three-word match scores 100 instead of collapsing on a missing 4-gram.
inline BleuReport sentence_bleu(std::span<const std::string> pred, std::span<const std::string> ref) {
  BleuReport r;
  r.order = std::min<std::size_t>(4, ref.size());
  for (std::size_t n = 1; n <= r.order; ++n) r.precision[n - 1] = modified_precision(pred, ref, n);

  if (pred.empty()) {
    r.brevity_penalty = 0;
  } else if (pred.size() >= ref.size()) {
    r.brevity_penalty = 1;
  } else {
    r.brevity_penalty = std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(pred.size()));
  }

  if (r.order == 0 || pred.empty()) return r;
  double log_sum = 0;
  for (std::size_t n = 1; n <= r.order; ++n) {
    const double p = *r.precision[n - 1];
    if (p == 0.0) return r;
    log_sum += std::log(p);
  }
  r.aggregate = 100.0 * r.brevity_penalty * std::exp(log_sum / static_cast<double>(r.order));
  return r;
}

}  // namespace fcsum
