#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fcsum/log.hpp"
#include "fcsum/model/checkpoint.hpp"
#include "fcsum/model/forward.hpp"
#include "fcsum/tensor/adam.hpp"
#include "fcsum/training/teacher_forcing.hpp"

namespace fcsum {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::filesystem::path checkpoint_dir = "checkpoints";
};

struct EpochStats {
  double mean_loss = 0;
  double accuracy = 0;  // next-token top-1 over the epoch's samples, before each update
};

namespace detail {

inline std::uint64_t epoch_seed(std::uint64_t seed, std::size_t epoch) {
  return seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(epoch) + 1));
}

template <class T>
ParamMap<T> full_gradients(const Tape<T>& tape, const ModelParams<T>& params) {
  auto grads = tape.parameter_gradients();
  for (const auto& [name, m] : params.tensors)
    if (!grads.contains(name)) grads.emplace(name, Matrix<T>(m.rows(), m.cols()));
  return grads;
}

}  // namespace detail

// Mean cross-entropy over `batch`, gradients left on the returned tape.
template <class T>
struct BatchResult {
  double loss_sum = 0;
  std::size_t correct = 0;
  ParamMap<T> grads;
};

template <class T>
BatchResult<T> batch_gradients(const ModelParams<T>& params, std::span<const TrainingSample* const> batch) {
  Tape<T> tape;
  std::vector<Var<T>> losses;
  losses.reserve(batch.size());
  BatchResult<T> res;
  for (const auto* s : batch) {
    const auto f = forward_on_tape(tape, params, *s->record, s->prefix);
    losses.push_back(softmax_cross_entropy(f.logits, static_cast<std::size_t>(s->target)));
    res.loss_sum += static_cast<double>(losses.back().value()[0]);
    if (argmax(f.logits.value().values()) == static_cast<std::size_t>(s->target)) ++res.correct;
  }
  auto loss = scaled_sum(std::span<const Var<T>>(losses), T{1} / static_cast<T>(batch.size()));
  if (!std::isfinite(static_cast<double>(loss.value()[0]))) {
    const auto where = tape.first_non_finite();
    throw NumericError("non-finite loss; first non-finite value at " + where.value_or("<loss>"));
  }
  tape.backward(loss);
  res.grads = detail::full_gradients(tape, params);
  return res;
}

// One pass over `samples` in a seeded shuffled order: per batch forward, mean
// cross-entropy, backward, Adam step.
template <class T>
EpochStats train_epoch(ModelParams<T>& params, std::span<const TrainingSample> samples, OptimizerState<T>& state,
                       const TrainConfig& config, std::size_t epoch = 0) {
  if (samples.empty()) throw DataError("train_epoch: no samples");
  if (config.batch_size == 0) throw DataError("batch size must be at least 1");
  state.config.learning_rate = config.learning_rate;

  std::vector<const TrainingSample*> order(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) order[i] = &samples[i];
  Rng rng(detail::epoch_seed(config.seed, epoch));
  rng.shuffle(std::span<const TrainingSample*>(order));

  double loss_sum = 0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
    const std::size_t len = std::min(config.batch_size, order.size() - start);
    BatchResult<T> b;
    try {
      b = batch_gradients(params, std::span<const TrainingSample* const>(order.data() + start, len));
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch + 1) + ", batch " +
                         std::to_string(start / config.batch_size + 1) + ": " + e.what());
    }
    loss_sum += b.loss_sum;
    correct += b.correct;
    optimizer_step(params.tensors, b.grads, state);
  }
  const auto n = static_cast<double>(samples.size());
  return {loss_sum / n, static_cast<double>(correct) / n};
}

// Loss and top-1 accuracy without updating anything.
template <class T>
EpochStats evaluate_samples(const ModelParams<T>& params, std::span<const TrainingSample> samples) {
  if (samples.empty()) throw DataError("evaluate: no samples");
  double loss_sum = 0;
  std::size_t correct = 0;
  for (const auto& s : samples) {
    Tape<T> tape(false);
    const auto f = forward_on_tape(tape, params, *s.record, s.prefix);
    loss_sum += static_cast<double>(softmax_cross_entropy(f.logits, static_cast<std::size_t>(s.target)).value()[0]);
    if (argmax(f.logits.value().values()) == static_cast<std::size_t>(s.target)) ++correct;
  }
  const auto n = static_cast<double>(samples.size());
  return {loss_sum / n, static_cast<double>(correct) / n};
}

// Fraction of teacher-forced samples whose argmax (lowest id on ties) is the target.
template <class T>
double validate(const ModelParams<T>& params, std::span<const TrainingSample> samples) {
  return evaluate_samples(params, samples).accuracy;
}

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  double train_acc = 0;
  double val_acc = 0;
  std::string checkpoint;  // file name inside the checkpoint directory
};

struct FitResult {
  std::filesystem::path best_checkpoint;
  std::size_t best_epoch = 0;  // 1-based
  std::vector<EpochRecord> history;
};

// Index of the highest accuracy, earliest on ties.
inline std::size_t select_best_epoch(std::span<const double> accuracies) {
  if (accuracies.empty()) throw DataError("no epochs to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < accuracies.size(); ++i)
    if (accuracies[i] > accuracies[best]) best = i;
  return best;
}

inline std::string format_history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,train_acc,val_acc,checkpoint\n";
  char buf[256];
  for (const auto& e : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,", e.epoch, e.train_loss, e.train_acc, e.val_acc);
    out += buf + e.checkpoint + "\n";
  }
  return out;
}

template <class T>
struct FitHooks {
  // Replaces the validation accuracy computation (testing checkpoint selection).
  std::function<double(const ModelParams<T>&, std::size_t epoch)> validation_override;
  std::function<void(const EpochRecord&)> on_epoch;
};

// Trains for config.epochs, writing epoch_NNN.fcsm and history.csv into
// config.checkpoint_dir after every epoch. On return `params` holds the epoch
// with the best validation accuracy (earliest on ties).
template <class T>
FitResult fit(ModelParams<T>& params, const std::vector<MethodRecord>& train, const std::vector<MethodRecord>& val,
              const TrainConfig& config, const FitHooks<T>& hooks = {}) {
  if (train.empty() || val.empty()) throw DataError("fit needs nonempty training and validation sets");
  if (config.epochs == 0) throw DataError("epochs must be at least 1");
  std::error_code ec;
  std::filesystem::create_directories(config.checkpoint_dir, ec);
  if (ec || !std::filesystem::is_directory(config.checkpoint_dir)) {
    throw DataError("cannot create checkpoint directory " + config.checkpoint_dir.string());
  }

  const auto train_samples = expand_all(train);
  const auto val_samples = expand_all(val);
  OptimizerState<T> state;
  state.config.learning_rate = config.learning_rate;

  FitResult result;
  std::vector<double> accs;
  ModelParams<T> best = params;
  for (std::size_t e = 0; e < config.epochs; ++e) {
    const auto stats = train_epoch(params, std::span<const TrainingSample>(train_samples), state, config, e);
    const double val_acc = hooks.validation_override ? hooks.validation_override(params, e)
                                                     : validate(params, std::span<const TrainingSample>(val_samples));
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%03zu.fcsm", e + 1);
    save_checkpoint(config.checkpoint_dir / name, params);
    result.history.push_back({e + 1, stats.mean_loss, stats.accuracy, val_acc, name});
    accs.push_back(val_acc);
    if (select_best_epoch(accs) == e) best = params;

    std::ofstream hist(config.checkpoint_dir / "history.csv", std::ios::trunc);
    if (!hist) throw DataError("cannot write history in " + config.checkpoint_dir.string());
    hist << format_history_csv(result.history);

    char msg[160];
    std::snprintf(msg, sizeof msg, "epoch %zu/%zu loss %.4f train_acc %.4f val_acc %.4f", e + 1, config.epochs,
                  stats.mean_loss, stats.accuracy, val_acc);
    log::info(msg);
    if (hooks.on_epoch) hooks.on_epoch(result.history.back());
  }
  const auto b = select_best_epoch(accs);
  result.best_epoch = b + 1;
  result.best_checkpoint = config.checkpoint_dir / result.history[b].checkpoint;
  params = std::move(best);
  return result;
}

}  // namespace fcsum
