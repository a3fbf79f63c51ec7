#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "recbase/tune.hpp"

namespace recbase {

void EarlyStopConfig::validate() const {
  if (epochs_per_step == 0) throw ConfigError("early stopping: epochs_per_step must be >= 1");
  if (patience_steps == 0) throw ConfigError("early stopping: patience_steps must be >= 1");
  if (epochs_max < epochs_per_step) throw ConfigError("early stopping: epochs_max must be >= epochs_per_step");
}

EarlyStopResult early_stop_train(Trainable& trainable, const std::function<double(const FittedModel&)>& validate,
                                 const EarlyStopConfig& cfg) {
  cfg.validate();
  std::optional<FittedModel> best;
  double best_value = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::size_t stale = 0;
  std::vector<double> history;
  while (trainable.epochs_done() < cfg.epochs_max && stale < cfg.patience_steps) {
    trainable.advance(std::min(cfg.epochs_per_step, cfg.epochs_max - trainable.epochs_done()));
    auto current = trainable.snapshot();
    const double value = validate(current);
    if (!std::isfinite(value)) {
      throw Error(fmt::format("early stopping: validation value {} at epoch {}", value, trainable.epochs_done()));
    }
    history.push_back(value);
    if (value > best_value) {
      best_value = value;
      best_epoch = trainable.epochs_done();
      best = std::move(current);
      stale = 0;
    } else {
      ++stale;
    }
  }
  if (!best) throw Error("early stopping: the trainable was already at epochs_max");
  return EarlyStopResult{std::move(*best), best_epoch, best_value, trainable.epochs_done(), std::move(history)};
}

}  // namespace recbase
