#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "fcsum/model/forward.hpp"
#include "fcsum/training/teacher_forcing.hpp"

namespace fcsum {

inline bool is_special(TokenId id) { return id == kPad || id == kStart || id == kEnd; }

// Greedy decoding from <st>. Stops at <et> or after comlen - 2 emitted tokens
// (the longest summary a record can carry). <st>/<et>/PAD are stripped from the
// result; <unk> is kept.
template <class T>
std::vector<TokenId> predict_summary(const ModelParams<T>& params, const MethodRecord& record) {
  const std::size_t comlen = params.hp.comlen;
  if (record.code_ids.size() != params.hp.tdatlen || record.fc.n != params.hp.n || record.fc.m != params.hp.m) {
    throw DataError("record '" + record.id + "' was not encoded with this checkpoint's hyperparameters");
  }
  std::vector<TokenId> prefix(comlen, kPad);
  prefix[0] = kStart;
  std::vector<TokenId> out;
  for (std::size_t k = 1; k + 1 < comlen; ++k) {
    const auto f = forward(params, record, prefix);
    const auto next = static_cast<TokenId>(argmax(f.probabilities.values()));
    if (next == kEnd) break;
    prefix[k] = next;
    if (!is_special(next)) out.push_back(next);
  }
  return out;
}

inline std::vector<std::string> ids_to_words(const std::vector<TokenId>& ids, const Vocab& vocab) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (const auto id : ids) out.push_back(vocab.token(id));
  return out;
}

template <class T>
struct DecodeStep {
  std::size_t position = 0;  // prefix length - 1: index of the last forced token
  TokenId target = kPad;
  Matrix<T> probabilities;
  AttentionRecord<T> attention;
};

// Teacher-forces `summary_ids` (<st> w1 .. wK <et> PAD..) and records the
// attention matrices before each prediction. Without the file-context encoder
// the sattn field is empty.
template <class T>
std::vector<DecodeStep<T>> capture_attention(const ModelParams<T>& params, const MethodRecord& record,
                                             const std::vector<TokenId>& summary_ids) {
  MethodRecord forced = record;
  forced.summary_ids = summary_ids;
  std::vector<DecodeStep<T>> steps;
  const auto samples = expand_teacher_forcing(forced);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto f = forward(params, record, samples[k].prefix);
    steps.push_back({k, samples[k].target, f.probabilities, f.attention});
  }
  return steps;
}

}  // namespace fcsum
