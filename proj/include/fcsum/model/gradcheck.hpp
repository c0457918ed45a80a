#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "fcsum/model/forward.hpp"
#include "fcsum/tensor/gradcheck.hpp"
#include "fcsum/tensor/init.hpp"

namespace fcsum {

// A record of random in-vocabulary ids with the given shapes; the summary is
// <st> + `words` random words + <et>.
inline MethodRecord random_record(const HyperParams& hp, Rng& rng, std::size_t words = 3) {
  const auto draw = [&](std::size_t vocab, std::size_t reserved) {
    return static_cast<TokenId>(reserved + rng.below(vocab - reserved));
  };
  MethodRecord r;
  r.id = "random";
  r.file_id = "random";
  r.code_ids.resize(hp.tdatlen);
  for (auto& id : r.code_ids) id = draw(hp.code_vocab, kCodeReserved.size());
  r.sbt_ids.resize(hp.astlen);
  for (auto& id : r.sbt_ids) id = draw(hp.ast_vocab, kCodeReserved.size());
  r.summary_ids.assign(hp.comlen, kPad);
  words = std::min(words, hp.comlen - 2);
  r.summary_ids[0] = kStart;
  for (std::size_t i = 1; i <= words; ++i) r.summary_ids[i] = draw(hp.summary_vocab, kSummaryReserved.size());
  r.summary_ids[words + 1] = kEnd;
  r.fc = FileContextMatrix(hp.n, hp.m);
  for (auto& id : r.fc.ids) id = draw(hp.code_vocab, kCodeReserved.size());
  return r;
}

// End-to-end check of d(loss)/d(parameter) for a random double-precision model.
// Each tensor is probed at `entries_per_tensor` sampled entries, preferring
// entries the sample actually touches (most embedding rows are not).
inline std::vector<GradCheckResult> model_gradient_check(const HyperParams& hp, const ModelFlags& flags,
                                                         std::uint64_t seed = 0, std::size_t entries_per_tensor = 4,
                                                         double step = 1e-5) {
  Rng rng(seed);
  auto params = init_model<double>(hp, flags, seed);
  // Nonzero biases and larger embeddings keep every path active.
  for (auto& [name, m] : params.tensors) {
    if (is_bias(name)) init_uniform(m, rng, 0.1);
    else if (name.rfind("embed.", 0) == 0) init_uniform(m, rng, 0.5);
  }
  const auto record = random_record(hp, rng);
  std::vector<TokenId> prefix(hp.comlen, kPad);
  prefix[0] = record.summary_ids[0];
  prefix[1] = record.summary_ids[1];
  const auto target = static_cast<std::size_t>(record.summary_ids[2]);

  const auto loss_of = [&](Tape<double>& tape) {
    return softmax_cross_entropy(forward_on_tape(tape, params, record, prefix).logits, target);
  };
  Tape<double> tape;
  tape.backward(loss_of(tape));
  const auto grads = tape.parameter_gradients();

  std::vector<GradCheckResult> out;
  for (auto& [name, m] : params.tensors) {
    GradCheckResult res{name, 0.0, 0};
    const auto git = grads.find(name);
    std::vector<std::size_t> touched, idle;
    for (std::size_t k = 0; k < m.size(); ++k) {
      const bool nz = git != grads.end() && git->second.values()[k] != 0.0;
      (nz ? touched : idle).push_back(k);
    }
    rng.shuffle(std::span<std::size_t>(touched));
    rng.shuffle(std::span<std::size_t>(idle));
    std::vector<std::size_t> probe(touched.begin(), touched.begin() + std::min(touched.size(), entries_per_tensor));
    for (std::size_t i = 0; probe.size() < entries_per_tensor && i < idle.size(); ++i) probe.push_back(idle[i]);

    for (const auto k : probe) {
      auto& x = m.values()[k];
      const double saved = x;
      x = saved + step;
      Tape<double> up_tape(false);
      const double up = loss_of(up_tape).value()[0];
      x = saved - step;
      Tape<double> down_tape(false);
      const double down = loss_of(down_tape).value()[0];
      x = saved;
      const double analytic = git == grads.end() ? 0.0 : git->second.values()[k];
      res.max_rel_error = std::max(res.max_rel_error, relative_error(analytic, (up - down) / (2 * step)));
      ++res.checked;
    }
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace fcsum
