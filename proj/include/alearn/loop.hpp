#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alearn/dataset.hpp"
#include "alearn/learner.hpp"
#include "alearn/metrics.hpp"
#include "alearn/sampler.hpp"

namespace alearn {

enum class Mode { medal, omedal, random, uncertainty };

Mode mode_from_string(const std::string& name);  // throws ConfigError
std::string to_string(Mode mode);

// Per-iteration epoch budget. Exactly one stopping family applies:
// fixed_epochs runs that many epochs; patience stops once the monitored
// metric has not improved for `patience` epochs, capped by
// max_epochs_per_iter.
struct Schedule {
  enum class Kind { fixed_epochs, patience };
  Kind kind = Kind::patience;
  std::size_t fixed_epochs = 10;
  std::size_t patience = 10;
  std::size_t max_epochs_per_iter = 150;

  static Schedule fixed(std::size_t epochs);
  static Schedule with_patience(std::size_t patience, std::size_t max_epochs = 150);

  void validate() const;  // throws ConfigError

  bool operator==(const Schedule&) const = default;
};

// What the patience rule monitors. auto_select means: accuracy on the
// validation split when one exists, otherwise negated training loss.
enum class PatienceMetric { auto_select, val_accuracy, train_loss };

PatienceMetric patience_metric_from_string(const std::string& name);
std::string to_string(PatienceMetric metric);

struct LoopConfig {
  Mode mode = Mode::omedal;
  double replay_p = 0.875;  // replay fraction, omedal only
  Schedule schedule = Schedule::with_patience(10);
  std::size_t initial_labeled = 1;
  // nullopt runs until the oracle is exhausted; otherwise the loop stops
  // once the total labeled count reaches the budget.
  std::optional<std::size_t> label_budget;
  // Stop an iteration early once training accuracy hits 100%. Defaults to
  // true for the reset-and-retrain modes (medal, random, uncertainty) and
  // false for omedal.
  std::optional<bool> train_to_fit;
  PatienceMetric patience_metric = PatienceMetric::auto_select;
  // When false, test metrics are computed once per AL iteration (on its
  // final epoch row); earlier epoch rows carry nan.
  bool eval_every_epoch = false;
  // Wall-clock timing breaks byte-identical reruns and is off by default;
  // rows then record wall_ms = 0.
  bool timing = false;
  std::uint64_t seed = 0;

  bool effective_train_to_fit() const;
  void validate() const;  // throws ConfigError

  bool operator==(const LoopConfig&) const = default;
};

struct LedgerRow {
  std::size_t al_iter = 0;   // 1-based; 0 marks rows outside the AL loop
  std::size_t epoch = 0;     // 1-based within the iteration
  std::size_t n_labeled = 0;
  double pct_labeled = 0.0;
  std::uint64_t n_backprop_cum = 0;
  double train_loss = 0.0;
  // nan when not evaluated on this row (auc additionally requires a
  // two-class problem).
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();
  double test_auc = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0.0;
};

// Everything recorded about one AL iteration beyond its epoch rows.
struct IterationRecord {
  std::size_t al_iter = 0;
  std::vector<std::size_t> chosen;        // ids labeled this iteration
  std::vector<std::size_t> training_ids;  // exact training multiset of every epoch
  std::size_t epochs_run = 0;
  std::uint64_t distance_evaluations = 0;
};

struct RunSummary {
  // nan when nothing was evaluated.
  double max_test_accuracy = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t examples_processed = 0;
  std::uint64_t weight_updates = 0;
};

struct RunLedger {
  std::vector<LedgerRow> rows;
  std::vector<IterationRecord> iterations;
  RunSummary summary;

  // (pct_labeled, test accuracy) for every row that was evaluated, in row
  // order; suitable for labels_to_reach.
  std::vector<CurvePoint> accuracy_curve() const;
};

// Observer invoked after every epoch of an iteration, before any early
// stop decision; receives the 1-based epoch index and its mean loss.
using EpochHook = std::function<void(std::size_t epoch, double train_loss)>;

struct IterationOutcome {
  std::vector<std::size_t> training_ids;
  std::size_t epochs_run = 0;
  std::vector<double> epoch_losses;
};

// True once the best entry is at least `patience` entries in the past;
// improvement means strictly greater.
bool check_early_stop(std::span<const double> metric_history, std::size_t patience);

// Retrain-from-scratch iteration: resets the learner to its initial
// weights, then trains on the full labeled set until 100% training
// accuracy (when train_to_fit), the schedule's own stop, or the epoch cap.
IterationOutcome medal_iteration(Learner& learner, const DatasetPool& pool,
                                 std::span<const std::size_t> labeled_ids,
                                 const Schedule& schedule, bool train_to_fit,
                                 PatienceMetric metric, RngStream& epoch_rng,
                                 const EpochHook& hook = {});

// Incremental iteration: no reset. Trains on new_ids plus a replay subset
// of floor(replay_p * |prev_ids|) previously labeled examples, drawn once
// and reused for every epoch of this iteration.
IterationOutcome omedal_iteration(Learner& learner, const DatasetPool& pool,
                                  std::span<const std::size_t> new_ids,
                                  std::span<const std::size_t> prev_ids, double replay_p,
                                  const Schedule& schedule, PatienceMetric metric,
                                  RngStream& replay_rng, RngStream& epoch_rng,
                                  const EpochHook& hook = {});

// Closed-form cumulative backprop count after t AL iterations on a
// fixed-epoch schedule: sum over i of E * (l + floor(p_eff * (n0 + (i-1)l)))
// where p_eff is the replay fraction for omedal and 1 for the full-retrain
// modes. Patience schedules are not predictable and raise an error.
std::uint64_t predicted_examples_processed(const LoopConfig& loop, const SamplerConfig& sampler,
                                           std::size_t t);

// Runs the full active-learning loop: select, label, train, evaluate,
// repeat until the stop condition. The pool arrives with its initial
// labeled set already drawn, or entirely unlabeled, in which case the
// first initial_labeled examples are drawn here (uniformly for a single
// example, class-stratified otherwise). All randomness derives from
// loop.seed; learner.seed is overridden so that every mode under the same
// seed starts from identical weights.
RunLedger run_experiment(const LoopConfig& loop, const SamplerConfig& sampler,
                         const LearnerConfig& learner_config, DatasetPool pool);

struct BaselineResult {
  double max_accuracy = 0.0;    // best test accuracy over epochs
  double final_accuracy = 0.0;  // test accuracy after the last epoch
  std::uint64_t examples_processed = 0;
};

// Non-AL reference: labels the entire pool and trains for a fixed number
// of epochs, evaluating the test set each epoch.
BaselineResult run_baseline(const LearnerConfig& learner_config, DatasetPool pool,
                            std::size_t epochs, std::uint64_t seed);

}  // namespace alearn
