#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcsum/corpus/records.hpp"
#include "fcsum/model/params.hpp"
#include "fcsum/tensor/gru.hpp"

namespace fcsum {

// Attention weights captured for one prediction: summary position x encoder position.
template <class T>
struct AttentionRecord {
  Matrix<T> tattn;                    // comlen x tdatlen
  std::optional<Matrix<T>> ast_attn;  // comlen x astlen, when use_ast
  std::optional<Matrix<T>> sattn;     // comlen x n, when use_fc
};

template <class T>
struct ForwardOutput {
  Matrix<T> probabilities;  // 1 x summary_vocab
  AttentionRecord<T> attention;
};

template <class T>
struct Attended {
  Var<T> weights;  // comlen x positions
  Var<T> context;  // comlen x rnn
};

// Dot-product attention: weights = softmax_rows(decout enc^T), context = weights enc.
template <class T>
Attended<T> attend(Var<T> decout, Var<T> enc) {
  auto weights = softmax_rows(matmul_nt(decout, enc));
  return {weights, matmul(weights, enc)};
}

namespace detail {

template <class T>
Var<T> zero_state(Tape<T>& tape, std::size_t rows, std::size_t hidden) {
  return tape.constant(Matrix<T>(rows, hidden));
}

template <class T>
GruVars<T> register_gru_from(Tape<T>& tape, const ModelParams<T>& p, const std::string& prefix) {
  std::array<Var<T>, 9> v;
  for (std::size_t i = 0; i < 9; ++i) {
    const std::string name = prefix + "." + std::string(kGruParamNames[i]);
    v[i] = tape.parameter(name, p.at(name));
  }
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]};
}

inline void require_length(std::span<const TokenId> ids, std::size_t len, const char* what) {
  if (ids.size() != len) {
    throw DimensionError(std::string(what) + " has length " + std::to_string(ids.size()) + ", expected " +
                         std::to_string(len));
  }
}

}  // namespace detail

template <class T>
struct CodeEncoding {
  Var<T> tencout;  // tdatlen x rnn
  Var<T> tstate_h;  // 1 x rnn
};

template <class T>
CodeEncoding<T> encode_code_text(Tape<T>& tape, const ModelParams<T>& p, std::span<const TokenId> code_ids) {
  detail::require_length(code_ids, p.hp.tdatlen, "code/text sequence");
  auto table = tape.parameter(names::kCodeEmbedding, p.at(names::kCodeEmbedding));
  auto gru = detail::register_gru_from(tape, p, names::kCodeGru);
  auto res = gru_sequence(embedding(table, code_ids), detail::zero_state(tape, 1, p.hp.rnn_units), gru, true);
  return {*res.states, res.final};
}

template <class T>
Var<T> encode_ast(Tape<T>& tape, const ModelParams<T>& p, std::span<const TokenId> sbt_ids) {
  detail::require_length(sbt_ids, p.hp.astlen, "SBT sequence");
  auto table = tape.parameter(names::kAstEmbedding, p.at(names::kAstEmbedding));
  auto gru = detail::register_gru_from(tape, p, names::kAstGru);
  return *gru_sequence(embedding(table, sbt_ids), detail::zero_state(tape, 1, p.hp.rnn_units), gru, true).states;
}

// One shared context GRU over every row, final state per row: n x rnn.
// Rows are embedded through the same table as the code/text sequence.
template <class T>
Var<T> encode_file_context(Tape<T>& tape, const ModelParams<T>& p, const FileContextMatrix& fc) {
  if (fc.n != p.hp.n || fc.m != p.hp.m) {
    throw DimensionError("file context is " + std::to_string(fc.n) + "x" + std::to_string(fc.m) + ", expected " +
                         std::to_string(p.hp.n) + "x" + std::to_string(p.hp.m));
  }
  std::vector<TokenId> time_major(fc.n * fc.m);
  for (std::size_t t = 0; t < fc.m; ++t)
    for (std::size_t i = 0; i < fc.n; ++i) time_major[t * fc.n + i] = fc(i, t);
  auto table = tape.parameter(names::kCodeEmbedding, p.at(names::kCodeEmbedding));
  auto gru = detail::register_gru_from(tape, p, names::kContextGru);
  return gru_sequence(embedding(table, std::span<const TokenId>(time_major)),
                      detail::zero_state(tape, fc.n, p.hp.rnn_units), gru, false, fc.n)
      .final;
}

template <class T>
struct TapeForward {
  Var<T> logits;  // 1 x summary_vocab, pre-softmax
  Var<T> tattn;
  std::optional<Var<T>> ast_attn;
  std::optional<Var<T>> sattn;
};

// Full model on one (record, summary prefix) pair. The decoder starts from the
// code/text encoder's final state in every variant; contexts are concatenated
// as [scontext, tcontext, acontext, decout] for the enabled encoders.
template <class T>
TapeForward<T> forward_on_tape(Tape<T>& tape, const ModelParams<T>& p, const MethodRecord& record,
                               std::span<const TokenId> summary_prefix) {
  const auto& hp = p.hp;
  detail::require_length(summary_prefix, hp.comlen, "summary prefix");

  const auto code = encode_code_text(tape, p, record.code_ids);

  auto dec_table = tape.parameter(names::kSummaryEmbedding, p.at(names::kSummaryEmbedding));
  auto dec_gru = detail::register_gru_from(tape, p, names::kDecoderGru);
  auto decout = *gru_sequence(embedding(dec_table, summary_prefix), code.tstate_h, dec_gru, true).states;

  TapeForward<T> out;
  std::vector<Var<T>> parts;
  if (p.flags.use_fc) {
    auto senc = encode_file_context(tape, p, record.fc);
    auto s = attend(decout, senc);
    out.sattn = s.weights;
    parts.push_back(s.context);
  }
  auto t = attend(decout, code.tencout);
  out.tattn = t.weights;
  parts.push_back(t.context);
  if (p.flags.use_ast) {
    auto a = attend(decout, encode_ast(tape, p, record.sbt_ids));
    out.ast_attn = a.weights;
    parts.push_back(a.context);
  }
  parts.push_back(decout);

  auto context = concat_cols(std::span<const Var<T>>(parts));
  auto squash = dense(context, tape.parameter(names::kSquashW, p.at(names::kSquashW)),
                      tape.parameter(names::kSquashB, p.at(names::kSquashB)), Activation::relu);
  auto flat = reshape(squash, 1, hp.comlen * hp.squash_units);
  out.logits = dense(flat, tape.parameter(names::kOutW, p.at(names::kOutW)),
                     tape.parameter(names::kOutB, p.at(names::kOutB)), Activation::none);
  return out;
}

template <class T>
AttentionRecord<T> collect_attention(const TapeForward<T>& f) {
  AttentionRecord<T> a{f.tattn.value(), std::nullopt, std::nullopt};
  if (f.ast_attn) a.ast_attn = f.ast_attn->value();
  if (f.sattn) a.sattn = f.sattn->value();
  return a;
}

// Next-word distribution and attention for one prefix, without gradients.
template <class T>
ForwardOutput<T> forward(const ModelParams<T>& p, const MethodRecord& record, std::span<const TokenId> summary_prefix) {
  Tape<T> tape(false);
  const auto f = forward_on_tape(tape, p, record, summary_prefix);
  return {softmax_rows(f.logits.value()), collect_attention(f)};
}

// Code/text sequence replaced by PAD; everything else untouched.
inline MethodRecord ablate_code_text(MethodRecord record) {
  std::fill(record.code_ids.begin(), record.code_ids.end(), kPad);
  return record;
}

// Index of the largest entry, lowest index on ties.
template <class T>
std::size_t argmax(std::span<const T> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace fcsum
