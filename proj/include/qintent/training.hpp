#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "qintent/adam.hpp"
#include "qintent/config.hpp"
#include "qintent/errors.hpp"
#include "qintent/params.hpp"
#include "qintent/rng.hpp"

namespace qintent {

struct TrainingTrace {
  /// Summed training loss of each epoch divided by the number of examples.
  std::vector<double> epoch_loss;
  /// Validation AP@nnz after each epoch (empty without a validation set).
  std::vector<double> validation_ap;
  /// 1-based epoch of the returned snapshot.
  std::size_t best_epoch = 0;
};

/// Called after every epoch with (epoch, mean loss, validation AP@nnz or NaN).
using ProgressFn = std::function<void(std::size_t, double, double)>;

/// Groups example indices by query length, shuffles within each group and
/// cuts the groups into batches of at most `batch_size`; the batch order is
/// shuffled as well.
inline std::vector<std::vector<std::size_t>> length_bucketed_batches(std::span<const std::size_t> lengths,
                                                                     std::size_t batch_size, Rng& rng) {
  std::map<std::size_t, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    buckets[lengths[i]].push_back(i);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (auto& [len, ids] : buckets) {
    rng.shuffle(ids);
    for (std::size_t start = 0; start < ids.size(); start += batch_size) {
      const std::size_t end = std::min(ids.size(), start + batch_size);
      batches.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(start),
                           ids.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  rng.shuffle(batches);
  return batches;
}

/// Minibatch Adam over `params`. `batch_loss(batch, grads, rng)` returns the
/// summed loss of the batch and accumulates its gradients into `grads`;
/// `validate(params)` returns the selection metric. The snapshot with the
/// best validation metric (earliest on ties) is left in `params`.
template <typename Params, typename BatchLoss, typename Validate>
TrainingTrace run_training(Params& params, std::span<const std::size_t> lengths, const RunConfig& cfg, Rng& rng,
                           BatchLoss&& batch_loss, Validate&& validate, bool has_validation,
                           const ProgressFn& progress = {}) {
  if (lengths.empty()) {
    throw std::invalid_argument("training set is empty");
  }
  Params grads = zeros_like(params);
  const ParamList param_list = collect_params(params);
  const ParamList grad_list = collect_params(grads);
  AdamConfig adam;
  adam.learning_rate = cfg.learning_rate;
  AdamState state(param_list, adam);

  TrainingTrace trace;
  Params best = params;
  double best_metric = -1.0;
  std::size_t batch_counter = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double total = 0.0;
    for (const auto& batch : length_bucketed_batches(lengths, cfg.batch_size, rng)) {
      for (const auto& g : grad_list) {
        g.tensor->fill(0.0);
      }
      const double loss = batch_loss(std::span<const std::size_t>(batch), grads, rng);
      if (!std::isfinite(loss)) {
        throw TrainingDiverged("non-finite loss in batch " + std::to_string(batch_counter), batch_counter);
      }
      try {
        state.apply(param_list, grad_list);
      } catch (const std::domain_error& e) {
        throw TrainingDiverged(std::string(e.what()) + " in batch " + std::to_string(batch_counter), batch_counter);
      }
      total += loss;
      ++batch_counter;
    }
    trace.epoch_loss.push_back(total / static_cast<double>(lengths.size()));
    double metric = std::nan("");
    if (has_validation) {
      metric = validate(static_cast<const Params&>(params));
      trace.validation_ap.push_back(metric);
      if (metric > best_metric) {
        best_metric = metric;
        best = params;
        trace.best_epoch = epoch;
      }
    }
    if (progress) {
      progress(epoch, trace.epoch_loss.back(), metric);
    }
  }
  if (has_validation) {
    params = std::move(best);
  } else {
    trace.best_epoch = cfg.epochs;
  }
  return trace;
}

}  // namespace qintent
