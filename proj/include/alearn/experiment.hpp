#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "alearn/loop.hpp"

namespace alearn {

struct DatasetSpec {
  enum class Kind { blobs, delimited, idx };
  Kind kind = Kind::blobs;

  // blobs
  std::size_t n = 1000;
  std::size_t dim = 2;
  std::size_t n_classes = 2;
  double separation = 2.0;
  std::vector<double> class_weights;  // empty = uniform

  // delimited / idx
  std::string path;
  std::string labels_path;  // idx only; derived from path when empty

  double test_fraction = 0.2;
  // Fraction of the post-test pool held out as a validation split for
  // patience metrics; 0 disables it.
  double val_fraction = 0.0;

  bool operator==(const DatasetSpec&) const = default;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  LearnerConfig learner;  // input_dim, n_classes and seed are filled per run
  SamplerConfig sampler;
  LoopConfig loop;
  std::vector<Mode> modes;  // runs per seed; defaults to {loop.mode}
  std::size_t n_seeds = 1;
  std::uint64_t base_seed = 0;
  std::string out_dir = ".";
  bool emit_plot = false;
  std::size_t baseline_epochs = 80;

  bool operator==(const ExperimentConfig&) const = default;
};

// Parses the JSON configuration document, applies defaults, validates, and
// rejects unknown keys; errors name the offending key.
ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& config);

// Materializes the dataset for one run seed: generate or load, stratified
// test split, optional validation split. Synthetic data and both splits
// draw from streams derived from the seed, so every mode sharing a seed
// sees the identical pool.
DatasetPool build_pool(const DatasetSpec& spec, std::uint64_t run_seed);

// Ledger CSV io. Columns, in order: al_iter, epoch, n_labeled,
// pct_labeled, n_backprop_cum, train_loss, test_acc, test_auc, wall_ms,
// seed. Doubles are shortest-round-trip so identical runs give identical
// bytes.
void write_ledger_csv(const std::string& path, const RunLedger& ledger, std::uint64_t seed);

struct LedgerFile {
  std::string mode;  // parsed from the ledger_<mode>_seed<seed>.csv name
  std::uint64_t seed = 0;
  std::vector<LedgerRow> rows;
};
LedgerFile read_ledger_csv(const std::string& path);

// Renders accuracy (y) versus fraction labeled (x) as an SVG document: one
// polyline per ledger file, colored by mode, plus an optional dashed
// horizontal line at the full-data baseline accuracy.
void emit_plot(const std::vector<std::string>& ledger_files, const std::string& out_path,
               std::optional<double> baseline_accuracy = std::nullopt);

struct RunOutputs {
  std::vector<std::string> ledger_files;
  std::string summary_file;
  std::optional<std::string> plot_file;
};

// Executes the configured experiment: for each seed, a full-data baseline
// plus one AL run per mode, each writing its ledger CSV; then a summary
// CSV with per-mode population mean/std of max accuracy, percent labeled
// at the baseline-accuracy crossing, and examples processed; optionally
// the plot. Rerunning the same config produces byte-identical files.
RunOutputs run(const ExperimentConfig& config);

// Command-line front end. args excludes the program name. Returns the
// process exit code: 0 success, 1 configuration error, 2 data or runtime
// error. The ALEARN_OUT_DIR environment variable overrides the config's
// output directory; the --out flag overrides both.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace alearn
