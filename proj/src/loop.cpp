#include "alearn/loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace alearn {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

PatienceMetric resolve_metric(PatienceMetric metric, const DatasetPool& pool) {
  if (metric == PatienceMetric::auto_select) {
    return pool.val_ids().empty() ? PatienceMetric::train_loss : PatienceMetric::val_accuracy;
  }
  if (metric == PatienceMetric::val_accuracy && pool.val_ids().empty()) {
    throw ConfigError("patience metric val_accuracy requires a validation split");
  }
  return metric;
}

// Shared epoch loop. Trains on the fixed multiset `training_ids`,
// reshuffling the order each epoch, until the schedule (and optionally the
// 100%-training-accuracy rule) says stop.
IterationOutcome run_epochs(Learner& learner, const DatasetPool& pool,
                            std::vector<std::size_t> training_ids, const Schedule& schedule,
                            bool train_to_fit, PatienceMetric metric, RngStream& epoch_rng,
                            const EpochHook& hook) {
  IterationOutcome out;
  out.training_ids = std::move(training_ids);
  if (out.training_ids.empty()) return out;

  const Matrix features = pool.features_of(out.training_ids);
  const std::vector<int> labels = pool.labels_of(out.training_ids);

  metric = resolve_metric(metric, pool);
  Matrix val_features;
  std::vector<int> val_labels;
  const bool patience_active = schedule.kind == Schedule::Kind::patience;
  if (patience_active && metric == PatienceMetric::val_accuracy) {
    val_features = pool.features_of(pool.val_ids());
    val_labels = pool.labels_of(pool.val_ids());
  }

  std::vector<std::size_t> order(out.training_ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Matrix shuffled(features.rows, features.cols);
  std::vector<int> shuffled_labels(labels.size());

  std::vector<double> history;
  const std::size_t cap = schedule.kind == Schedule::Kind::fixed_epochs
                              ? schedule.fixed_epochs
                              : schedule.max_epochs_per_iter;
  while (out.epochs_run < cap) {
    epoch_rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto src = features.row(order[i]);
      std::copy(src.begin(), src.end(), shuffled.data.begin() + i * features.cols);
      shuffled_labels[i] = labels[order[i]];
    }
    const double loss = *learner.train_epoch(shuffled, shuffled_labels);
    out.epochs_run += 1;
    out.epoch_losses.push_back(loss);
    if (hook) hook(out.epochs_run, loss);

    if (train_to_fit && accuracy(learner.predict(features), labels) == 1.0) break;
    if (patience_active) {
      history.push_back(metric == PatienceMetric::val_accuracy
                            ? accuracy(learner.predict(val_features), val_labels)
                            : -loss);
      if (check_early_stop(history, schedule.patience)) break;
    }
  }
  return out;
}

}  // namespace

Mode mode_from_string(const std::string& name) {
  if (name == "medal") return Mode::medal;
  if (name == "omedal") return Mode::omedal;
  if (name == "random") return Mode::random;
  if (name == "uncertainty") return Mode::uncertainty;
  throw ConfigError("unknown mode '" + name +
                    "', expected medal, omedal, random or uncertainty");
}

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::medal: return "medal";
    case Mode::omedal: return "omedal";
    case Mode::random: return "random";
    case Mode::uncertainty: return "uncertainty";
  }
  throw ConfigError("invalid mode value");
}

PatienceMetric patience_metric_from_string(const std::string& name) {
  if (name == "auto") return PatienceMetric::auto_select;
  if (name == "val_accuracy") return PatienceMetric::val_accuracy;
  if (name == "train_loss") return PatienceMetric::train_loss;
  throw ConfigError("unknown patience metric '" + name +
                    "', expected auto, val_accuracy or train_loss");
}

std::string to_string(PatienceMetric metric) {
  switch (metric) {
    case PatienceMetric::auto_select: return "auto";
    case PatienceMetric::val_accuracy: return "val_accuracy";
    case PatienceMetric::train_loss: return "train_loss";
  }
  throw ConfigError("invalid patience metric value");
}

Schedule Schedule::fixed(std::size_t epochs) {
  Schedule s;
  s.kind = Kind::fixed_epochs;
  s.fixed_epochs = epochs;
  s.validate();
  return s;
}

Schedule Schedule::with_patience(std::size_t patience, std::size_t max_epochs) {
  Schedule s;
  s.kind = Kind::patience;
  s.patience = patience;
  s.max_epochs_per_iter = max_epochs;
  s.validate();
  return s;
}

void Schedule::validate() const {
  if (kind == Kind::fixed_epochs) {
    if (fixed_epochs == 0) throw ConfigError("schedule: fixed_epochs must be positive");
  } else {
    if (patience == 0) throw ConfigError("schedule: patience must be positive");
    if (max_epochs_per_iter == 0) {
      throw ConfigError("schedule: max_epochs_per_iter must be positive");
    }
  }
}

bool LoopConfig::effective_train_to_fit() const {
  if (train_to_fit.has_value()) return *train_to_fit;
  return mode != Mode::omedal;
}

void LoopConfig::validate() const {
  schedule.validate();
  if (mode == Mode::omedal && (replay_p < 0.0 || replay_p > 1.0 || !std::isfinite(replay_p))) {
    throw ConfigError("loop: replay_p must be in [0, 1]");
  }
  if (label_budget.has_value() && *label_budget == 0) {
    throw ConfigError("loop: label_budget must be positive when set");
  }
}

bool check_early_stop(std::span<const double> metric_history, std::size_t patience) {
  if (metric_history.empty()) throw PreconditionError("check_early_stop: empty history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < metric_history.size(); ++i) {
    if (metric_history[i] > metric_history[best]) best = i;
  }
  return metric_history.size() - 1 - best >= patience;
}

IterationOutcome medal_iteration(Learner& learner, const DatasetPool& pool,
                                 std::span<const std::size_t> labeled_ids,
                                 const Schedule& schedule, bool train_to_fit,
                                 PatienceMetric metric, RngStream& epoch_rng,
                                 const EpochHook& hook) {
  if (labeled_ids.empty()) {
    throw PreconditionError("medal_iteration: labeled set is empty");
  }
  learner.reset();
  return run_epochs(learner, pool,
                    std::vector<std::size_t>(labeled_ids.begin(), labeled_ids.end()),
                    schedule, train_to_fit, metric, epoch_rng, hook);
}

IterationOutcome omedal_iteration(Learner& learner, const DatasetPool& pool,
                                  std::span<const std::size_t> new_ids,
                                  std::span<const std::size_t> prev_ids, double replay_p,
                                  const Schedule& schedule, PatienceMetric metric,
                                  RngStream& replay_rng, RngStream& epoch_rng,
                                  const EpochHook& hook) {
  if (replay_p < 0.0 || replay_p > 1.0 || !std::isfinite(replay_p)) {
    throw PreconditionError("omedal_iteration: replay_p must be in [0, 1]");
  }
  const std::unordered_set<std::size_t> prev_set(prev_ids.begin(), prev_ids.end());
  for (std::size_t id : new_ids) {
    if (prev_set.count(id)) {
      throw PreconditionError("omedal_iteration: id " + std::to_string(id) +
                              " appears in both new and previously labeled sets");
    }
  }

  const std::size_t replay_count = static_cast<std::size_t>(
      std::floor(replay_p * static_cast<double>(prev_ids.size())));
  std::vector<std::size_t> training_ids(new_ids.begin(), new_ids.end());
  training_ids.reserve(new_ids.size() + replay_count);
  for (std::size_t pos : replay_rng.sample_indices(prev_ids.size(), replay_count)) {
    training_ids.push_back(prev_ids[pos]);
  }
  return run_epochs(learner, pool, std::move(training_ids), schedule,
                    /*train_to_fit=*/false, metric, epoch_rng, hook);
}

std::uint64_t predicted_examples_processed(const LoopConfig& loop, const SamplerConfig& sampler,
                                           std::size_t t) {
  loop.validate();
  sampler.validate();
  if (loop.schedule.kind != Schedule::Kind::fixed_epochs) {
    throw UnsupportedError(
        "cost prediction requires a fixed-epoch schedule; patience runs are "
        "not predictable in advance");
  }
  const double p_eff = loop.mode == Mode::omedal ? loop.replay_p : 1.0;
  const std::uint64_t epochs = loop.schedule.fixed_epochs;
  const std::uint64_t l = sampler.labels_per_iter;

  std::uint64_t total = 0;
  for (std::size_t i = 1; i <= t; ++i) {
    const std::uint64_t prev = loop.initial_labeled + (i - 1) * l;
    const auto replay =
        static_cast<std::uint64_t>(std::floor(p_eff * static_cast<double>(prev)));
    total += epochs * (l + replay);
  }
  return total;
}

std::vector<CurvePoint> RunLedger::accuracy_curve() const {
  std::vector<CurvePoint> curve;
  for (const LedgerRow& row : rows) {
    if (!std::isnan(row.test_accuracy)) {
      curve.push_back({row.pct_labeled, row.test_accuracy});
    }
  }
  return curve;
}

RunLedger run_experiment(const LoopConfig& loop, const SamplerConfig& sampler,
                         const LearnerConfig& learner_config, DatasetPool pool) {
  loop.validate();
  sampler.validate();
  if (learner_config.input_dim != pool.feature_dim()) {
    throw ConfigError("learner input_dim " + std::to_string(learner_config.input_dim) +
                      " does not match dataset feature width " +
                      std::to_string(pool.feature_dim()));
  }
  if (learner_config.n_classes != pool.n_classes()) {
    throw ConfigError("learner n_classes " + std::to_string(learner_config.n_classes) +
                      " does not match dataset classes " +
                      std::to_string(pool.n_classes()));
  }
  // Every stream derives from the run seed with a fixed tag, so two modes
  // under the same seed share initial weights, the initial draw and the
  // dataset views, and differ only where the algorithm differs.
  LearnerConfig effective = learner_config;
  effective.seed = derive_seed(loop.seed, "init");
  Learner learner(effective);
  RngStream setup_rng(derive_seed(loop.seed, "setup"));
  RngStream select_rng(derive_seed(loop.seed, "select"));
  RngStream replay_rng(derive_seed(loop.seed, "replay"));
  RngStream epoch_rng(derive_seed(loop.seed, "epoch"));

  if (pool.train_ids().empty() && loop.initial_labeled > 0) {
    if (loop.initial_labeled > pool.oracle_ids().size()) {
      throw ConfigError("initial_labeled exceeds the pool size");
    }
    if (loop.initial_labeled == 1) {
      // A single seed example is drawn uniformly, not stratified.
      const std::size_t pos =
          static_cast<std::size_t>(setup_rng.next_below(pool.oracle_ids().size()));
      const std::size_t id = pool.oracle_ids()[pos];
      pool.label(std::vector<std::size_t>{id});
    } else {
      pool.label(pool.stratified_oracle_draw(loop.initial_labeled, setup_rng));
    }
  }

  const std::size_t pool_total = pool.al_pool_size();
  const Matrix test_features = pool.features_of(pool.test_ids());
  const std::vector<int> test_labels = pool.labels_of(pool.test_ids());
  const bool binary = pool.n_classes() == 2;

  const auto eval_test = [&](LedgerRow& row) {
    if (test_labels.empty()) return;
    const ForwardResult fwd = learner.forward(test_features);
    std::vector<int> pred(test_features.rows);
    for (std::size_t i = 0; i < test_features.rows; ++i) {
      const auto p = fwd.probabilities.row(i);
      std::size_t best = 0;
      for (std::size_t j = 1; j < p.size(); ++j) {
        if (p[j] > p[best]) best = j;
      }
      pred[i] = static_cast<int>(best);
    }
    row.test_accuracy = accuracy(pred, test_labels);
    if (binary) {
      std::vector<double> scores(test_features.rows);
      for (std::size_t i = 0; i < test_features.rows; ++i) {
        scores[i] = fwd.probabilities(i, 1);
      }
      row.test_auc = auc(scores, test_labels);
    }
  };

  RunLedger ledger;
  using Clock = std::chrono::steady_clock;
  Clock::time_point last_tick = Clock::now();

  std::size_t iter = 0;
  while (true) {
    const std::size_t labeled = pool.train_ids().size();
    std::size_t want = std::min(sampler.labels_per_iter, pool.oracle_ids().size());
    if (loop.label_budget.has_value()) {
      const std::size_t budget_left =
          *loop.label_budget > labeled ? *loop.label_budget - labeled : 0;
      want = std::min(want, budget_left);
    }
    if (want == 0) break;
    iter += 1;

    IterationRecord record;
    record.al_iter = iter;

    // Selection uses the model as trained so far. With no labeled
    // examples yet there is no centroid; the first batch is a uniform
    // bootstrap draw in every mode.
    std::vector<std::size_t> chosen;
    if (pool.train_ids().empty() || loop.mode == Mode::random) {
      chosen = random_select(pool.oracle_ids(), want, select_rng);
    } else if (loop.mode == Mode::uncertainty) {
      const ForwardResult fwd = learner.forward(pool.features_of(pool.oracle_ids()));
      const std::vector<std::size_t> positions = uncertainty_select(fwd.probabilities, want);
      chosen.reserve(positions.size());
      for (std::size_t pos : positions) chosen.push_back(pool.oracle_ids()[pos]);
    } else {
      const ForwardResult fwd = learner.forward(pool.features_of(pool.oracle_ids()));
      std::vector<double> entropies(fwd.probabilities.rows);
      for (std::size_t i = 0; i < entropies.size(); ++i) {
        entropies[i] = predictive_entropy(fwd.probabilities.row(i));
      }
      const std::vector<std::size_t> cand_pos = top_m_candidates(entropies, sampler.top_m);
      CandidateSet candidates;
      candidates.ids.reserve(cand_pos.size());
      candidates.embeddings = Matrix(cand_pos.size(), fwd.embeddings.cols);
      for (std::size_t k = 0; k < cand_pos.size(); ++k) {
        candidates.ids.push_back(pool.oracle_ids()[cand_pos[k]]);
        const auto src = fwd.embeddings.row(cand_pos[k]);
        std::copy(src.begin(), src.end(),
                  candidates.embeddings.data.begin() + k * fwd.embeddings.cols);
      }
      const Matrix train_emb = learner.forward(pool.features_of(pool.train_ids())).embeddings;
      const Selection sel =
          select_batch(train_emb, candidates, std::min(want, candidates.ids.size()));
      chosen = sel.chosen;
      record.distance_evaluations = sel.distance_evaluations;
    }

    const std::vector<std::size_t> prev_ids = pool.train_ids();
    pool.label(chosen);
    record.chosen = chosen;

    const EpochHook hook = [&](std::size_t epoch, double loss) {
      LedgerRow row;
      row.al_iter = iter;
      row.epoch = epoch;
      row.n_labeled = pool.train_ids().size();
      row.pct_labeled = static_cast<double>(row.n_labeled) / static_cast<double>(pool_total);
      row.n_backprop_cum = learner.backprop_count();
      row.train_loss = loss;
      if (loop.eval_every_epoch) eval_test(row);
      if (loop.timing) {
        const Clock::time_point now = Clock::now();
        row.wall_ms =
            std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(now - last_tick)
                .count();
        last_tick = now;
      }
      ledger.rows.push_back(row);
    };

    IterationOutcome outcome;
    if (loop.mode == Mode::omedal) {
      outcome = omedal_iteration(learner, pool, chosen, prev_ids, loop.replay_p,
                                 loop.schedule, loop.patience_metric, replay_rng,
                                 epoch_rng, hook);
    } else {
      outcome = medal_iteration(learner, pool, pool.train_ids(), loop.schedule,
                                loop.effective_train_to_fit(), loop.patience_metric,
                                epoch_rng, hook);
    }
    record.training_ids = std::move(outcome.training_ids);
    record.epochs_run = outcome.epochs_run;
    ledger.iterations.push_back(std::move(record));

    if (!loop.eval_every_epoch && outcome.epochs_run > 0) {
      eval_test(ledger.rows.back());
    }
  }

  ledger.summary.examples_processed = learner.backprop_count();
  ledger.summary.weight_updates = learner.update_count();
  ledger.summary.max_test_accuracy = kNan;
  for (const LedgerRow& row : ledger.rows) {
    if (!std::isnan(row.test_accuracy) &&
        (std::isnan(ledger.summary.max_test_accuracy) ||
         row.test_accuracy > ledger.summary.max_test_accuracy)) {
      ledger.summary.max_test_accuracy = row.test_accuracy;
    }
  }
  return ledger;
}

BaselineResult run_baseline(const LearnerConfig& learner_config, DatasetPool pool,
                            std::size_t epochs, std::uint64_t seed) {
  if (epochs == 0) throw ConfigError("run_baseline: epochs must be positive");
  if (learner_config.input_dim != pool.feature_dim()) {
    throw ConfigError("learner input_dim does not match dataset feature width");
  }
  if (learner_config.n_classes != pool.n_classes()) {
    throw ConfigError("learner n_classes does not match dataset classes");
  }
  // Label everything: this is the non-AL reference all modes compare to.
  pool.label(pool.oracle_ids());

  LearnerConfig effective = learner_config;
  effective.seed = derive_seed(seed, "init");
  Learner learner(effective);
  RngStream epoch_rng(derive_seed(seed, "epoch"));

  const Matrix features = pool.features_of(pool.train_ids());
  const std::vector<int> labels = pool.labels_of(pool.train_ids());
  const Matrix test_features = pool.features_of(pool.test_ids());
  const std::vector<int> test_labels = pool.labels_of(pool.test_ids());

  std::vector<std::size_t> order(features.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Matrix shuffled(features.rows, features.cols);
  std::vector<int> shuffled_labels(labels.size());

  BaselineResult result;
  result.max_accuracy = kNan;
  result.final_accuracy = kNan;
  for (std::size_t e = 0; e < epochs; ++e) {
    epoch_rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto src = features.row(order[i]);
      std::copy(src.begin(), src.end(), shuffled.data.begin() + i * features.cols);
      shuffled_labels[i] = labels[order[i]];
    }
    learner.train_epoch(shuffled, shuffled_labels);
    if (!test_labels.empty()) {
      const double acc = accuracy(learner.predict(test_features), test_labels);
      result.final_accuracy = acc;
      if (std::isnan(result.max_accuracy) || acc > result.max_accuracy) {
        result.max_accuracy = acc;
      }
    }
  }
  result.examples_processed = learner.backprop_count();
  return result;
}

}  // namespace alearn
