#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fcsum/corpus/hyperparams.hpp"
#include "fcsum/rng.hpp"
#include "fcsum/tensor/adam.hpp"
#include "fcsum/tensor/init.hpp"

namespace fcsum {

// Which optional encoders are wired into the model.
struct ModelFlags {
  bool use_ast = false;
  bool use_fc = false;

  // attendgru, ast-attendgru, attendgru+FC, ast-attendgru+FC
  std::string variant_name() const {
    std::string name = use_ast ? "ast-attendgru" : "attendgru";
    if (use_fc) name += "+FC";
    return name;
  }

  static ModelFlags from_variant(const std::string& name) {
    std::string s;
    for (const char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (s == "attendgru") return {false, false};
    if (s == "ast-attendgru") return {true, false};
    if (s == "attendgru+fc") return {false, true};
    if (s == "ast-attendgru+fc") return {true, true};
    throw DataError("unknown model variant '" + name + "'");
  }

  friend bool operator==(const ModelFlags&, const ModelFlags&) = default;
};

namespace names {
inline const std::string kCodeEmbedding = "embed.code";  // shared by code/text and file context
inline const std::string kSummaryEmbedding = "embed.summary";
inline const std::string kAstEmbedding = "embed.ast";
inline const std::string kCodeGru = "gru.code";
inline const std::string kAstGru = "gru.ast";
inline const std::string kContextGru = "gru.context";
inline const std::string kDecoderGru = "gru.decoder";
inline const std::string kSquashW = "squash.W";
inline const std::string kSquashB = "squash.b";
inline const std::string kOutW = "out.W";
inline const std::string kOutB = "out.b";
}  // namespace names

inline std::size_t concat_width(const HyperParams& hp, const ModelFlags& f) {
  return hp.rnn_units * (2 + (f.use_ast ? 1 : 0) + (f.use_fc ? 1 : 0));
}

struct ParamShape {
  std::string name;
  std::size_t rows, cols;
};

// Every trainable array for the variant, in initialization order.
inline std::vector<ParamShape> parameter_shapes(const HyperParams& hp, const ModelFlags& f) {
  std::vector<ParamShape> shapes;
  const auto add_gru = [&](const std::string& prefix, std::size_t in) {
    for (const auto name : kGruParamNames) {
      const std::string full = prefix + "." + std::string(name);
      if (name[0] == 'W') shapes.push_back({full, in, hp.rnn_units});
      else if (name[0] == 'U') shapes.push_back({full, hp.rnn_units, hp.rnn_units});
      else shapes.push_back({full, 1, hp.rnn_units});
    }
  };
  shapes.push_back({names::kCodeEmbedding, hp.code_vocab, hp.embed_code});
  shapes.push_back({names::kSummaryEmbedding, hp.summary_vocab, hp.embed_code});
  add_gru(names::kCodeGru, hp.embed_code);
  add_gru(names::kDecoderGru, hp.embed_code);
  if (f.use_ast) {
    shapes.push_back({names::kAstEmbedding, hp.ast_vocab, hp.embed_ast});
    add_gru(names::kAstGru, hp.embed_ast);
  }
  if (f.use_fc) add_gru(names::kContextGru, hp.embed_code);
  shapes.push_back({names::kSquashW, concat_width(hp, f), hp.squash_units});
  shapes.push_back({names::kSquashB, 1, hp.squash_units});
  shapes.push_back({names::kOutW, hp.comlen * hp.squash_units, hp.summary_vocab});
  shapes.push_back({names::kOutB, 1, hp.summary_vocab});
  return shapes;
}

template <class T>
struct ModelParams {
  HyperParams hp;
  ModelFlags flags;
  ParamMap<T> tensors;

  const Matrix<T>& at(const std::string& name) const { return tensors.at(name); }
  Matrix<T>& at(const std::string& name) { return tensors.at(name); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, m] : tensors) n += m.size();
    return n;
  }

  template <class U>
  ModelParams<U> cast() const {
    ModelParams<U> out{hp, flags, {}};
    for (const auto& [name, m] : tensors) out.tensors.emplace(name, m.template cast<U>());
    return out;
  }
};

inline bool is_bias(const std::string& name) {
  return name.ends_with(".b") || name.find(".b_") != std::string::npos;
}

// Glorot-uniform weights, zero biases, U(-0.05, 0.05) embeddings, drawn in
// parameter_shapes() order from one seeded stream.
template <class T>
ModelParams<T> init_model(const HyperParams& hp, const ModelFlags& flags, std::uint64_t seed) {
  hp.validate();
  ModelParams<T> params{hp, flags, {}};
  Rng rng(seed);
  for (const auto& s : parameter_shapes(hp, flags)) {
    Matrix<T> m(s.rows, s.cols);
    if (s.name.rfind("embed.", 0) == 0) {
      init_uniform(m, rng, kEmbeddingInitLimit);
    } else if (!is_bias(s.name)) {
      init_glorot(m, rng);
    }
    params.tensors.emplace(s.name, std::move(m));
  }
  return params;
}

}  // namespace fcsum
