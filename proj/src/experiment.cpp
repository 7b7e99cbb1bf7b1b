#include "alearn/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "alearn/format.hpp"

namespace alearn {

namespace {

using nlohmann::json;

constexpr char kLedgerHeader[] =
    "al_iter,epoch,n_labeled,pct_labeled,n_backprop_cum,train_loss,test_acc,test_auc,wall_ms,seed";

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void key_error(const std::string& key, const std::string& what) {
  throw ConfigError(key + ": " + what);
}

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (item.key() == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      const std::string path = section.empty() ? item.key() : section + "." + item.key();
      throw ConfigError("unknown key '" + path + "'");
    }
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

double get_double(const json& obj, const char* key, const std::string& path, double def) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_number()) key_error(path, "expected a number");
  return v->get<double>();
}

std::uint64_t get_uint(const json& obj, const char* key, const std::string& path,
                       std::uint64_t def) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() &&
                                  v->get<std::int64_t>() < 0)) {
    key_error(path, "expected a non-negative integer");
  }
  return v->get<std::uint64_t>();
}

std::size_t get_size(const json& obj, const char* key, const std::string& path,
                     std::size_t def) {
  return static_cast<std::size_t>(get_uint(obj, key, path, def));
}

bool get_bool(const json& obj, const char* key, const std::string& path, bool def) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_boolean()) key_error(path, "expected true or false");
  return v->get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& path,
                       const std::string& def) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_string()) key_error(path, "expected a string");
  return v->get<std::string>();
}

DatasetSpec parse_dataset(const json& d) {
  if (!d.is_object()) throw ConfigError("dataset: expected an object");
  check_keys(d, "dataset",
             {"kind", "n", "dim", "classes", "separation", "class_weights", "path",
              "labels_path", "test_fraction", "val_fraction"});
  DatasetSpec spec;
  const std::string kind = get_string(d, "kind", "dataset.kind", "blobs");
  if (kind == "blobs") {
    spec.kind = DatasetSpec::Kind::blobs;
  } else if (kind == "delimited") {
    spec.kind = DatasetSpec::Kind::delimited;
  } else if (kind == "idx") {
    spec.kind = DatasetSpec::Kind::idx;
  } else {
    key_error("dataset.kind", "expected blobs, delimited or idx, got '" + kind + "'");
  }

  spec.n = get_size(d, "n", "dataset.n", spec.n);
  spec.dim = get_size(d, "dim", "dataset.dim", spec.dim);
  spec.n_classes = get_size(d, "classes", "dataset.classes", spec.n_classes);
  spec.separation = get_double(d, "separation", "dataset.separation", spec.separation);
  if (const json* w = find(d, "class_weights")) {
    if (!w->is_array()) key_error("dataset.class_weights", "expected an array of numbers");
    for (const json& v : *w) {
      if (!v.is_number()) key_error("dataset.class_weights", "expected an array of numbers");
      spec.class_weights.push_back(v.get<double>());
    }
  }
  spec.path = get_string(d, "path", "dataset.path", "");
  spec.labels_path = get_string(d, "labels_path", "dataset.labels_path", "");
  spec.test_fraction = get_double(d, "test_fraction", "dataset.test_fraction", spec.test_fraction);
  spec.val_fraction = get_double(d, "val_fraction", "dataset.val_fraction", spec.val_fraction);

  if (spec.kind == DatasetSpec::Kind::blobs) {
    if (spec.n == 0) key_error("dataset.n", "must be positive");
    if (spec.dim == 0) key_error("dataset.dim", "must be positive");
    if (spec.n_classes < 2) key_error("dataset.classes", "need at least two classes");
    if (!(spec.separation >= 0.0)) key_error("dataset.separation", "must be non-negative");
    if (!spec.class_weights.empty() && spec.class_weights.size() != spec.n_classes) {
      key_error("dataset.class_weights", "size must match dataset.classes");
    }
    for (double w : spec.class_weights) {
      if (w < 0.0) key_error("dataset.class_weights", "weights must be non-negative");
    }
  } else if (spec.path.empty()) {
    key_error("dataset.path", "required for file-backed datasets");
  }
  if (!(spec.test_fraction > 0.0) || !(spec.test_fraction < 1.0)) {
    key_error("dataset.test_fraction", "must be in (0, 1)");
  }
  if (spec.val_fraction < 0.0 || spec.val_fraction >= 1.0) {
    key_error("dataset.val_fraction", "must be in [0, 1)");
  }
  return spec;
}

LearnerConfig parse_learner(const json* l) {
  LearnerConfig cfg;
  if (!l) return cfg;
  if (!l->is_object()) throw ConfigError("learner: expected an object");
  check_keys(*l, "learner",
             {"hidden_dims", "learning_rate", "momentum", "nesterov", "weight_decay",
              "batch_size"});
  if (const json* h = find(*l, "hidden_dims")) {
    if (!h->is_array() || h->empty()) {
      key_error("learner.hidden_dims", "expected a non-empty array of positive integers");
    }
    cfg.hidden_dims.clear();
    for (const json& v : *h) {
      if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
        key_error("learner.hidden_dims", "expected a non-empty array of positive integers");
      }
      cfg.hidden_dims.push_back(v.get<std::size_t>());
    }
  }
  cfg.learning_rate = get_double(*l, "learning_rate", "learner.learning_rate", cfg.learning_rate);
  if (!(cfg.learning_rate > 0.0)) key_error("learner.learning_rate", "must be positive");
  cfg.momentum = get_double(*l, "momentum", "learner.momentum", cfg.momentum);
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) key_error("learner.momentum", "must be in [0, 1)");
  cfg.nesterov = get_bool(*l, "nesterov", "learner.nesterov", cfg.nesterov);
  cfg.weight_decay = get_double(*l, "weight_decay", "learner.weight_decay", cfg.weight_decay);
  if (cfg.weight_decay < 0.0) key_error("learner.weight_decay", "must be non-negative");
  cfg.batch_size = get_size(*l, "batch_size", "learner.batch_size", cfg.batch_size);
  if (cfg.batch_size == 0) key_error("learner.batch_size", "must be positive");
  return cfg;
}

SamplerConfig parse_sampler(const json* s) {
  SamplerConfig cfg;
  if (!s) return cfg;
  if (!s->is_object()) throw ConfigError("sampler: expected an object");
  check_keys(*s, "sampler", {"top_m", "labels_per_iter"});
  cfg.top_m = get_size(*s, "top_m", "sampler.top_m", cfg.top_m);
  if (cfg.top_m == 0) key_error("sampler.top_m", "must be positive");
  cfg.labels_per_iter = get_size(*s, "labels_per_iter", "sampler.labels_per_iter",
                                 cfg.labels_per_iter);
  if (cfg.labels_per_iter == 0) key_error("sampler.labels_per_iter", "must be positive");
  return cfg;
}

Schedule parse_schedule(const json* s) {
  Schedule schedule;  // patience 10, the default setting
  if (!s) return schedule;
  if (!s->is_object()) throw ConfigError("loop.schedule: expected an object");
  check_keys(*s, "loop.schedule", {"kind", "epochs", "patience", "max_epochs_per_iter"});
  const std::string kind = get_string(*s, "kind", "loop.schedule.kind", "patience");
  if (kind == "fixed") {
    schedule.kind = Schedule::Kind::fixed_epochs;
    schedule.fixed_epochs = get_size(*s, "epochs", "loop.schedule.epochs", 10);
    if (schedule.fixed_epochs == 0) key_error("loop.schedule.epochs", "must be positive");
    if (find(*s, "patience") || find(*s, "max_epochs_per_iter")) {
      key_error("loop.schedule", "fixed kind takes only 'epochs'");
    }
  } else if (kind == "patience") {
    schedule.kind = Schedule::Kind::patience;
    schedule.patience = get_size(*s, "patience", "loop.schedule.patience", 10);
    if (schedule.patience == 0) key_error("loop.schedule.patience", "must be positive");
    schedule.max_epochs_per_iter =
        get_size(*s, "max_epochs_per_iter", "loop.schedule.max_epochs_per_iter", 150);
    if (schedule.max_epochs_per_iter == 0) {
      key_error("loop.schedule.max_epochs_per_iter", "must be positive");
    }
    if (find(*s, "epochs")) key_error("loop.schedule", "patience kind does not take 'epochs'");
  } else {
    key_error("loop.schedule.kind", "expected fixed or patience, got '" + kind + "'");
  }
  return schedule;
}

LoopConfig parse_loop(const json* l) {
  LoopConfig cfg;
  if (!l) return cfg;
  if (!l->is_object()) throw ConfigError("loop: expected an object");
  check_keys(*l, "loop",
             {"mode", "p", "schedule", "initial_labeled", "label_budget", "train_to_fit",
              "patience_metric", "eval_every_epoch", "timing"});
  const std::string mode = get_string(*l, "mode", "loop.mode", "omedal");
  try {
    cfg.mode = mode_from_string(mode);
  } catch (const ConfigError& e) {
    key_error("loop.mode", e.what());
  }
  cfg.replay_p = get_double(*l, "p", "loop.p", cfg.replay_p);
  if (cfg.replay_p < 0.0 || cfg.replay_p > 1.0 || !std::isfinite(cfg.replay_p)) {
    key_error("loop.p", "must be in [0, 1], got " + format_double(cfg.replay_p));
  }
  cfg.schedule = parse_schedule(find(*l, "schedule"));
  cfg.initial_labeled = get_size(*l, "initial_labeled", "loop.initial_labeled", cfg.initial_labeled);
  if (find(*l, "label_budget")) {
    cfg.label_budget = get_size(*l, "label_budget", "loop.label_budget", 0);
    if (*cfg.label_budget == 0) key_error("loop.label_budget", "must be positive when set");
  }
  if (find(*l, "train_to_fit")) {
    cfg.train_to_fit = get_bool(*l, "train_to_fit", "loop.train_to_fit", false);
  }
  const std::string metric =
      get_string(*l, "patience_metric", "loop.patience_metric", "auto");
  try {
    cfg.patience_metric = patience_metric_from_string(metric);
  } catch (const ConfigError& e) {
    key_error("loop.patience_metric", e.what());
  }
  cfg.eval_every_epoch = get_bool(*l, "eval_every_epoch", "loop.eval_every_epoch",
                                  cfg.eval_every_epoch);
  cfg.timing = get_bool(*l, "timing", "loop.timing", cfg.timing);
  return cfg;
}

struct MeanStd {
  double mean = kNan;
  double stddev = kNan;
  std::size_t count = 0;
};

// Population mean/std over the non-nan entries.
MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  double sum = 0.0;
  for (double x : xs) {
    if (std::isnan(x)) continue;
    sum += x;
    out.count += 1;
  }
  if (out.count == 0) return out;
  out.mean = sum / static_cast<double>(out.count);
  double sq = 0.0;
  for (double x : xs) {
    if (std::isnan(x)) continue;
    const double d = x - out.mean;
    sq += d * d;
  }
  out.stddev = std::sqrt(sq / static_cast<double>(out.count));
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  check_keys(doc, "",
             {"dataset", "learner", "sampler", "loop", "modes", "n_seeds", "seed", "out_dir",
              "emit_plot", "baseline_epochs"});
  if (!find(doc, "dataset")) throw ConfigError("dataset: required section is missing");

  ExperimentConfig cfg;
  cfg.dataset = parse_dataset(*find(doc, "dataset"));
  cfg.learner = parse_learner(find(doc, "learner"));
  cfg.sampler = parse_sampler(find(doc, "sampler"));
  cfg.loop = parse_loop(find(doc, "loop"));

  if (const json* m = find(doc, "modes")) {
    if (!m->is_array() || m->empty()) key_error("modes", "expected a non-empty array");
    for (const json& v : *m) {
      if (!v.is_string()) key_error("modes", "expected an array of mode names");
      Mode mode;
      try {
        mode = mode_from_string(v.get<std::string>());
      } catch (const ConfigError& e) {
        key_error("modes", e.what());
      }
      if (std::find(cfg.modes.begin(), cfg.modes.end(), mode) != cfg.modes.end()) {
        key_error("modes", "duplicate mode '" + to_string(mode) + "'");
      }
      cfg.modes.push_back(mode);
    }
  } else {
    cfg.modes = {cfg.loop.mode};
  }

  cfg.n_seeds = get_size(doc, "n_seeds", "n_seeds", cfg.n_seeds);
  if (cfg.n_seeds == 0) key_error("n_seeds", "must be positive");
  cfg.base_seed = get_uint(doc, "seed", "seed", cfg.base_seed);
  cfg.out_dir = get_string(doc, "out_dir", "out_dir", cfg.out_dir);
  if (cfg.out_dir.empty()) key_error("out_dir", "must not be empty");
  cfg.emit_plot = get_bool(doc, "emit_plot", "emit_plot", cfg.emit_plot);
  cfg.baseline_epochs = get_size(doc, "baseline_epochs", "baseline_epochs", cfg.baseline_epochs);
  if (cfg.baseline_epochs == 0) key_error("baseline_epochs", "must be positive");
  return cfg;
}

std::string serialize_config(const ExperimentConfig& config) {
  json doc;
  json& d = doc["dataset"];
  switch (config.dataset.kind) {
    case DatasetSpec::Kind::blobs: d["kind"] = "blobs"; break;
    case DatasetSpec::Kind::delimited: d["kind"] = "delimited"; break;
    case DatasetSpec::Kind::idx: d["kind"] = "idx"; break;
  }
  if (config.dataset.kind == DatasetSpec::Kind::blobs) {
    d["n"] = config.dataset.n;
    d["dim"] = config.dataset.dim;
    d["classes"] = config.dataset.n_classes;
    d["separation"] = config.dataset.separation;
    if (!config.dataset.class_weights.empty()) {
      d["class_weights"] = config.dataset.class_weights;
    }
  } else {
    d["path"] = config.dataset.path;
    if (!config.dataset.labels_path.empty()) d["labels_path"] = config.dataset.labels_path;
  }
  d["test_fraction"] = config.dataset.test_fraction;
  d["val_fraction"] = config.dataset.val_fraction;

  json& l = doc["learner"];
  l["hidden_dims"] = config.learner.hidden_dims;
  l["learning_rate"] = config.learner.learning_rate;
  l["momentum"] = config.learner.momentum;
  l["nesterov"] = config.learner.nesterov;
  l["weight_decay"] = config.learner.weight_decay;
  l["batch_size"] = config.learner.batch_size;

  json& s = doc["sampler"];
  s["top_m"] = config.sampler.top_m;
  s["labels_per_iter"] = config.sampler.labels_per_iter;

  json& lp = doc["loop"];
  lp["mode"] = to_string(config.loop.mode);
  lp["p"] = config.loop.replay_p;
  json& sch = lp["schedule"];
  if (config.loop.schedule.kind == Schedule::Kind::fixed_epochs) {
    sch["kind"] = "fixed";
    sch["epochs"] = config.loop.schedule.fixed_epochs;
  } else {
    sch["kind"] = "patience";
    sch["patience"] = config.loop.schedule.patience;
    sch["max_epochs_per_iter"] = config.loop.schedule.max_epochs_per_iter;
  }
  lp["initial_labeled"] = config.loop.initial_labeled;
  lp["label_budget"] =
      config.loop.label_budget ? json(*config.loop.label_budget) : json(nullptr);
  lp["train_to_fit"] =
      config.loop.train_to_fit ? json(*config.loop.train_to_fit) : json(nullptr);
  lp["patience_metric"] = to_string(config.loop.patience_metric);
  lp["eval_every_epoch"] = config.loop.eval_every_epoch;
  lp["timing"] = config.loop.timing;

  json modes = json::array();
  for (Mode m : config.modes) modes.push_back(to_string(m));
  doc["modes"] = modes;
  doc["n_seeds"] = config.n_seeds;
  doc["seed"] = config.base_seed;
  doc["out_dir"] = config.out_dir;
  doc["emit_plot"] = config.emit_plot;
  doc["baseline_epochs"] = config.baseline_epochs;
  return doc.dump(2);
}

DatasetPool build_pool(const DatasetSpec& spec, std::uint64_t run_seed) {
  std::vector<Example> all;
  switch (spec.kind) {
    case DatasetSpec::Kind::blobs:
      all = make_blobs(spec.n, spec.dim, spec.n_classes, spec.separation, spec.class_weights,
                       derive_seed(run_seed, "data"));
      break;
    case DatasetSpec::Kind::delimited:
      all = load_table(spec.path, TableFormat::delimited);
      break;
    case DatasetSpec::Kind::idx:
      all = load_table(spec.path, TableFormat::idx_images, spec.labels_path);
      break;
  }
  auto [pool_part, test_part] = stratified_split(all, spec.test_fraction,
                                                 derive_seed(run_seed, "split"));
  std::vector<Example> val_part;
  if (spec.val_fraction > 0.0) {
    auto [rest, val] = stratified_split(pool_part, spec.val_fraction,
                                        derive_seed(run_seed, "valsplit"));
    pool_part = std::move(rest);
    val_part = std::move(val);
  }
  return DatasetPool(std::move(pool_part), std::move(test_part), std::move(val_part));
}

void write_ledger_csv(const std::string& path, const RunLedger& ledger, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open file for writing: " + path);
  out << kLedgerHeader << '\n';
  for (const LedgerRow& row : ledger.rows) {
    out << row.al_iter << ',' << row.epoch << ',' << row.n_labeled << ','
        << format_double(row.pct_labeled) << ',' << row.n_backprop_cum << ','
        << format_double(row.train_loss) << ',' << format_double(row.test_accuracy) << ','
        << format_double(row.test_auc) << ',' << format_double(row.wall_ms) << ',' << seed
        << '\n';
  }
  if (!out) throw ParseError("write failed: " + path);
}

LedgerFile read_ledger_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);

  LedgerFile out;
  // ledger_<mode>_seed<seed>.csv; anything else keeps the stem as label.
  const std::string stem = std::filesystem::path(path).stem().string();
  out.mode = stem;
  if (stem.rfind("ledger_", 0) == 0) {
    const std::size_t seed_pos = stem.rfind("_seed");
    if (seed_pos != std::string::npos && seed_pos > 7) {
      out.mode = stem.substr(7, seed_pos - 7);
    }
  }

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kLedgerHeader) {
    throw ParseError(path + ": line 1: unexpected header '" + line + "'");
  }

  const auto parse_num = [&](std::string_view field, std::size_t line_no, auto& dest) {
    const auto res = std::from_chars(field.data(), field.data() + field.size(), dest);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": bad field '" +
                       std::string(field) + "'");
    }
  };

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    std::string_view rest = line;
    while (true) {
      const std::size_t comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 10) {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": expected 10 fields, got " +
                       std::to_string(fields.size()));
    }
    LedgerRow row;
    parse_num(fields[0], line_no, row.al_iter);
    parse_num(fields[1], line_no, row.epoch);
    parse_num(fields[2], line_no, row.n_labeled);
    parse_num(fields[3], line_no, row.pct_labeled);
    parse_num(fields[4], line_no, row.n_backprop_cum);
    parse_num(fields[5], line_no, row.train_loss);
    parse_num(fields[6], line_no, row.test_accuracy);
    parse_num(fields[7], line_no, row.test_auc);
    parse_num(fields[8], line_no, row.wall_ms);
    parse_num(fields[9], line_no, out.seed);
    out.rows.push_back(row);
  }
  if (out.rows.empty()) throw ParseError(path + ": ledger has no data rows");
  return out;
}

RunOutputs run(const ExperimentConfig& config) {
  config.sampler.validate();
  config.loop.validate();
  if (config.n_seeds == 0) throw ConfigError("n_seeds: must be positive");
  if (config.modes.empty()) throw ConfigError("modes: at least one mode required");

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) {
    throw ConfigError("out_dir: cannot create '" + config.out_dir + "': " + ec.message());
  }

  struct Stats {
    std::vector<double> max_acc;
    std::vector<double> pct_at_baseline;
    std::vector<double> processed;
  };
  std::vector<Stats> per_mode(config.modes.size());
  Stats baseline_stats;

  RunOutputs outputs;
  for (std::size_t k = 0; k < config.n_seeds; ++k) {
    const std::uint64_t seed = config.base_seed + k;
    const DatasetPool pool = build_pool(config.dataset, seed);

    LearnerConfig learner_cfg = config.learner;
    learner_cfg.input_dim = pool.feature_dim();
    learner_cfg.n_classes = pool.n_classes();
    learner_cfg.validate();

    const BaselineResult base =
        run_baseline(learner_cfg, pool, config.baseline_epochs, seed);
    baseline_stats.max_acc.push_back(base.max_accuracy);
    baseline_stats.pct_at_baseline.push_back(kNan);
    baseline_stats.processed.push_back(static_cast<double>(base.examples_processed));

    for (std::size_t m = 0; m < config.modes.size(); ++m) {
      LoopConfig loop_cfg = config.loop;
      loop_cfg.mode = config.modes[m];
      loop_cfg.seed = seed;

      const RunLedger ledger = run_experiment(loop_cfg, config.sampler, learner_cfg, pool);

      const std::string path = config.out_dir + "/ledger_" + to_string(config.modes[m]) +
                               "_seed" + std::to_string(seed) + ".csv";
      write_ledger_csv(path, ledger, seed);
      outputs.ledger_files.push_back(path);

      per_mode[m].max_acc.push_back(ledger.summary.max_test_accuracy);
      const std::vector<CurvePoint> curve = ledger.accuracy_curve();
      const std::optional<double> reach =
          std::isnan(base.max_accuracy) ? std::nullopt
                                        : labels_to_reach(curve, base.max_accuracy);
      per_mode[m].pct_at_baseline.push_back(reach ? *reach : kNan);
      per_mode[m].processed.push_back(static_cast<double>(ledger.summary.examples_processed));
    }
  }

  const std::string summary_path = config.out_dir + "/summary.csv";
  {
    std::ofstream out(summary_path, std::ios::binary);
    if (!out) throw ParseError("cannot open file for writing: " + summary_path);
    out << "mode,seeds,max_test_acc_mean,max_test_acc_std,pct_labeled_at_baseline_mean,"
           "pct_labeled_at_baseline_std,examples_processed_mean,examples_processed_std\n";
    const auto write_row = [&](const std::string& name, const Stats& stats) {
      const MeanStd acc = mean_std(stats.max_acc);
      const MeanStd pct = mean_std(stats.pct_at_baseline);
      const MeanStd proc = mean_std(stats.processed);
      out << name << ',' << config.n_seeds << ',' << format_double(acc.mean) << ','
          << format_double(acc.stddev) << ',' << format_double(pct.mean) << ','
          << format_double(pct.stddev) << ',' << format_double(proc.mean) << ','
          << format_double(proc.stddev) << '\n';
    };
    for (std::size_t m = 0; m < config.modes.size(); ++m) {
      write_row(to_string(config.modes[m]), per_mode[m]);
    }
    write_row("baseline", baseline_stats);
    if (!out) throw ParseError("write failed: " + summary_path);
  }
  outputs.summary_file = summary_path;

  if (config.emit_plot) {
    const MeanStd base_acc = mean_std(baseline_stats.max_acc);
    const std::string plot_path = config.out_dir + "/curves.svg";
    emit_plot(outputs.ledger_files, plot_path,
              baseline_stats.max_acc.empty() || std::isnan(base_acc.mean)
                  ? std::nullopt
                  : std::optional<double>(base_acc.mean));
    outputs.plot_file = plot_path;
  }
  return outputs;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"active-learning experiment runner"};
  std::string config_path;
  std::uint64_t seed_override = 0;
  std::string mode_override;
  std::string out_override;
  bool plot = false;
  app.add_option("--config", config_path, "JSON experiment configuration file")->required();
  app.add_option("--seed", seed_override, "override the base seed");
  app.add_option("--mode", mode_override,
                 "run a single mode: medal, omedal, random or uncertainty");
  app.add_option("--out", out_override, "output directory (overrides config and environment)");
  app.add_flag("--plot", plot, "also write the accuracy-vs-labels plot");

  std::vector<const char*> argv;
  argv.push_back("alearn");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return 1;
  }

  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file: " + config_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    ExperimentConfig cfg = parse_config(buffer.str());

    if (app.count("--seed") > 0) cfg.base_seed = seed_override;
    if (!mode_override.empty()) {
      const Mode mode = mode_from_string(mode_override);
      cfg.modes = {mode};
      cfg.loop.mode = mode;
    }
    if (const char* env = std::getenv("ALEARN_OUT_DIR"); env != nullptr && *env != '\0') {
      cfg.out_dir = env;
    }
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (plot) cfg.emit_plot = true;

    const RunOutputs outputs = run(cfg);
    for (const std::string& file : outputs.ledger_files) out << file << '\n';
    out << outputs.summary_file << '\n';
    if (outputs.plot_file) out << *outputs.plot_file << '\n';
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace alearn
