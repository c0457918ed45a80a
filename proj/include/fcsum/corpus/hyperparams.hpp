#pragma once

#include <cstddef>
#include <string>

#include "fcsum/error.hpp"

namespace fcsum {

// Input shapes and layer widths. Vocabulary entries act as caps during
// preprocessing and as exact table sizes once a corpus is prepared.
struct HyperParams {
  std::size_t n = 20;        // file-context functions
  std::size_t m = 25;        // tokens per context function
  std::size_t tdatlen = 50;  // code/text tokens
  std::size_t astlen = 100;  // SBT tokens
  std::size_t comlen = 13;   // summary positions incl. <st>/<et>
  std::size_t code_vocab = 75000;
  std::size_t summary_vocab = 10908;
  std::size_t ast_vocab = 100;
  std::size_t embed_code = 100;
  std::size_t embed_ast = 10;
  std::size_t rnn_units = 256;
  std::size_t squash_units = 256;

  static HyperParams full() { return {}; }

  // Scaled-down dimensions for CPU experiments.
  static HyperParams desk() {
    HyperParams hp;
    hp.n = 6;
    hp.m = 10;
    hp.tdatlen = 20;
    hp.astlen = 30;
    hp.comlen = 9;
    hp.code_vocab = 512;
    hp.summary_vocab = 512;
    hp.ast_vocab = 512;
    hp.embed_code = 16;
    hp.embed_ast = 10;
    hp.rnn_units = 32;
    hp.squash_units = 32;
    return hp;
  }

  void validate() const {
    const auto positive = [](std::size_t v, const char* name) {
      if (v == 0) throw DataError(std::string("hyperparameter '") + name + "' must be positive");
    };
    positive(n, "n");
    positive(m, "m");
    positive(tdatlen, "tdatlen");
    positive(astlen, "astlen");
    positive(embed_code, "embed_code");
    positive(embed_ast, "embed_ast");
    positive(rnn_units, "rnn_units");
    positive(squash_units, "squash_units");
    if (comlen < 4) throw DataError("comlen must be at least 4, got " + std::to_string(comlen));
    if (code_vocab < 3 || ast_vocab < 3) throw DataError("code/ast vocabularies need room beyond <pad>/<unk>");
    if (summary_vocab < 5) throw DataError("summary vocabulary needs room beyond reserved tokens");
  }

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

}  // namespace fcsum
