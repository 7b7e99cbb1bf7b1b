#include <unistd.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "alearn/errors.hpp"
#include "alearn/experiment.hpp"
#include "alearn/loop.hpp"
#include "doctest.h"

using namespace alearn;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per call, removed by the caller via ScratchDir.
struct ScratchDir {
  fs::path path;

  ScratchDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("alearn_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(bool(out));
  out << text;
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

// A config that runs in well under a second: 60 blob points, one hidden
// layer of 4, two fixed epochs per iteration, 9 labels total.
std::string tiny_config_json(const std::string& out_dir) {
  return R"({
    "dataset": {"kind": "blobs", "n": 60, "dim": 2, "classes": 2, "separation": 3.0},
    "learner": {"hidden_dims": [4], "learning_rate": 0.05, "batch_size": 16},
    "sampler": {"top_m": 10, "labels_per_iter": 4},
    "loop": {"mode": "omedal", "schedule": {"kind": "fixed", "epochs": 2},
             "initial_labeled": 1, "label_budget": 9},
    "baseline_epochs": 3,
    "out_dir": ")" + out_dir + R"("
  })";
}

}  // namespace

TEST_CASE("minimal config gets the documented defaults") {
  const ExperimentConfig cfg = parse_config(R"({"dataset": {"kind": "blobs"}})");
  CHECK(cfg.loop.mode == Mode::omedal);
  CHECK(cfg.loop.replay_p == doctest::Approx(0.875));
  CHECK(cfg.sampler.labels_per_iter == 20);
  CHECK(cfg.sampler.top_m == 50);
  CHECK(cfg.loop.schedule.kind == Schedule::Kind::patience);
  CHECK(cfg.loop.schedule.patience == 10);
  CHECK(cfg.modes == std::vector<Mode>{Mode::omedal});
  CHECK(cfg.n_seeds == 1);
  CHECK(cfg.dataset.test_fraction == doctest::Approx(0.2));
  CHECK(cfg.emit_plot == false);
  CHECK(cfg.baseline_epochs == 80);
}

TEST_CASE("out-of-range replay fraction is rejected by key name") {
  const std::string doc = R"({"dataset": {"kind": "blobs"}, "loop": {"p": 1.5}})";
  try {
    parse_config(doc);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("p") != std::string::npos);
    CHECK(std::string(e.what()).find("1.5") != std::string::npos);
  }
}

TEST_CASE("config validation names the offending key") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"dataset": {"kind": "spiral"}})"),
                       doctest::Contains("dataset.kind"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"dataset": {"kind": "delimited"}})"),
                       doctest::Contains("dataset.path"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"learner": {}})"), doctest::Contains("dataset"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"dataset": {"kind": "blobs"}, "loop": {"mode": "qbc"}})"),
      doctest::Contains("loop.mode"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"dataset": {"kind": "blobs", "test_fraction": 1.0}})"),
      doctest::Contains("test_fraction"), ConfigError);
  CHECK_THROWS_AS(parse_config("not json at all"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"(["array"])"), ConfigError);
}

TEST_CASE("unknown keys are rejected with their path") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"dataset": {"kind": "blobs"}, "bogus": 1})"),
                       doctest::Contains("bogus"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"dataset": {"kind": "blobs", "shape": 3}})"),
                       doctest::Contains("dataset.shape"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"dataset": {"kind": "blobs"}, "loop": {"replay": 0.5}})"),
      doctest::Contains("loop.replay"), ConfigError);
}

TEST_CASE("duplicate or unknown entries in the modes list are rejected") {
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"dataset": {"kind": "blobs"}, "modes": ["medal", "medal"]})"),
      doctest::Contains("duplicate"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"dataset": {"kind": "blobs"}, "modes": ["qbc"]})"),
      doctest::Contains("modes"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"dataset": {"kind": "blobs"}, "modes": []})"),
                       doctest::Contains("modes"), ConfigError);
}

TEST_CASE("serialized config reparses to an equal config") {
  const std::string doc = R"({
    "dataset": {"kind": "blobs", "n": 500, "classes": 3, "separation": 4.5,
                "class_weights": [0.5, 0.3, 0.2], "val_fraction": 0.1},
    "learner": {"hidden_dims": [32, 8], "learning_rate": 0.01, "momentum": 0.8,
                "nesterov": false, "weight_decay": 0.001, "batch_size": 24},
    "sampler": {"top_m": 30, "labels_per_iter": 10},
    "loop": {"mode": "medal", "schedule": {"kind": "fixed", "epochs": 7},
             "initial_labeled": 5, "label_budget": 100, "train_to_fit": false,
             "eval_every_epoch": true},
    "modes": ["medal", "random"],
    "n_seeds": 4, "seed": 99, "out_dir": "/tmp/somewhere", "emit_plot": true,
    "baseline_epochs": 12
  })";
  const ExperimentConfig cfg = parse_config(doc);
  const std::string text = serialize_config(cfg);
  const ExperimentConfig reparsed = parse_config(text);
  CHECK(reparsed == cfg);
  // And the rendering itself is a fixed point.
  CHECK(serialize_config(reparsed) == text);
}

TEST_CASE("build_pool is deterministic and honors the splits") {
  DatasetSpec spec;
  spec.n = 100;
  spec.test_fraction = 0.2;
  spec.val_fraction = 0.25;
  const DatasetPool a = build_pool(spec, 7);
  const DatasetPool b = build_pool(spec, 7);
  CHECK(a.test_ids() == b.test_ids());
  CHECK(a.oracle_ids() == b.oracle_ids());
  CHECK(a.val_ids() == b.val_ids());
  // 100 -> 20 test, then a quarter of the remaining 80 held out.
  CHECK(a.test_ids().size() == 20);
  CHECK(a.val_ids().size() == 20);
  CHECK(a.oracle_ids().size() == 60);

  const DatasetPool c = build_pool(spec, 8);
  CHECK(c.test_ids() != a.test_ids());
}

TEST_CASE("ledger csv round-trips rows exactly") {
  ScratchDir dir;
  RunLedger ledger;
  LedgerRow row;
  row.al_iter = 1;
  row.epoch = 2;
  row.n_labeled = 21;
  row.pct_labeled = 21.0 / 41.0;
  row.n_backprop_cum = 580;
  row.train_loss = 0.69314718055994531;
  row.test_accuracy = 0.75;
  row.test_auc = std::numeric_limits<double>::quiet_NaN();
  ledger.rows.push_back(row);
  row.al_iter = 2;
  row.epoch = 1;
  row.n_backprop_cum = 660;
  row.test_accuracy = std::numeric_limits<double>::quiet_NaN();
  ledger.rows.push_back(row);

  const std::string path = dir.str() + "/ledger_medal_seed7.csv";
  write_ledger_csv(path, ledger, 7);
  const LedgerFile back = read_ledger_csv(path);
  CHECK(back.mode == "medal");
  CHECK(back.seed == 7);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].al_iter == 1);
  CHECK(back.rows[0].epoch == 2);
  CHECK(back.rows[0].n_labeled == 21);
  CHECK(back.rows[0].pct_labeled == ledger.rows[0].pct_labeled);
  CHECK(back.rows[0].n_backprop_cum == 580);
  CHECK(back.rows[0].train_loss == ledger.rows[0].train_loss);
  CHECK(back.rows[0].test_accuracy == 0.75);
  CHECK(std::isnan(back.rows[0].test_auc));
  CHECK(std::isnan(back.rows[1].test_accuracy));

  const std::string text = slurp(path);
  CHECK(text.rfind("al_iter,epoch,n_labeled,pct_labeled,n_backprop_cum,train_loss,"
                   "test_acc,test_auc,wall_ms,seed\n", 0) == 0);
}

TEST_CASE("ledger csv reader reports malformed input by line") {
  ScratchDir dir;
  const std::string path = dir.str() + "/bad.csv";

  spit(path, "not,the,header\n");
  CHECK_THROWS_WITH_AS(read_ledger_csv(path), doctest::Contains("line 1"), ParseError);

  spit(path,
       "al_iter,epoch,n_labeled,pct_labeled,n_backprop_cum,train_loss,test_acc,test_auc,"
       "wall_ms,seed\n1,1,1,0.5,20,oops,0.5,nan,0,3\n");
  CHECK_THROWS_WITH_AS(read_ledger_csv(path), doctest::Contains("line 2"), ParseError);

  spit(path,
       "al_iter,epoch,n_labeled,pct_labeled,n_backprop_cum,train_loss,test_acc,test_auc,"
       "wall_ms,seed\n1,1,1,0.5\n");
  CHECK_THROWS_WITH_AS(read_ledger_csv(path), doctest::Contains("expected 10 fields"),
                       ParseError);

  spit(path,
       "al_iter,epoch,n_labeled,pct_labeled,n_backprop_cum,train_loss,test_acc,test_auc,"
       "wall_ms,seed\n");
  CHECK_THROWS_WITH_AS(read_ledger_csv(path), doctest::Contains("no data rows"), ParseError);

  CHECK_THROWS_AS(read_ledger_csv(dir.str() + "/missing.csv"), ParseError);
}

TEST_CASE("run writes one ledger per seed and mode plus a summary") {
  ScratchDir dir;
  ExperimentConfig cfg = parse_config(tiny_config_json(dir.str()));
  cfg.n_seeds = 3;
  const RunOutputs outputs = run(cfg);

  REQUIRE(outputs.ledger_files.size() == 3);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const std::string expected = dir.str() + "/ledger_omedal_seed" + std::to_string(seed) + ".csv";
    CHECK(outputs.ledger_files[seed] == expected);
    CHECK(fs::exists(expected));
    const LedgerFile ledger = read_ledger_csv(expected);
    CHECK(ledger.mode == "omedal");
    CHECK(ledger.seed == seed);
  }
  CHECK(outputs.summary_file == dir.str() + "/summary.csv");
  CHECK(!outputs.plot_file.has_value());

  const std::string summary = slurp(outputs.summary_file);
  CHECK(count_occurrences(summary, "\n") == 3);  // header + omedal + baseline
  CHECK(summary.find("omedal,3,") != std::string::npos);
  CHECK(summary.find("baseline,3,") != std::string::npos);
}

TEST_CASE("every ledger row keeps pct in range and cumulative cost increasing") {
  ScratchDir dir;
  ExperimentConfig cfg = parse_config(tiny_config_json(dir.str()));
  const RunOutputs outputs = run(cfg);
  REQUIRE(outputs.ledger_files.size() == 1);
  const LedgerFile ledger = read_ledger_csv(outputs.ledger_files[0]);
  std::uint64_t prev = 0;
  for (const LedgerRow& row : ledger.rows) {
    CHECK(row.pct_labeled >= 0.0);
    CHECK(row.pct_labeled <= 1.0);
    CHECK(row.n_backprop_cum > prev);
    prev = row.n_backprop_cum;
  }
}

TEST_CASE("rerunning the same config yields byte-identical files") {
  ScratchDir first;
  ScratchDir second;
  ExperimentConfig cfg = parse_config(tiny_config_json(first.str()));
  cfg.modes = {Mode::medal, Mode::omedal};
  cfg.n_seeds = 2;
  const RunOutputs a = run(cfg);
  cfg.out_dir = second.str();
  const RunOutputs b = run(cfg);

  REQUIRE(a.ledger_files.size() == 4);
  REQUIRE(b.ledger_files.size() == 4);
  for (std::size_t i = 0; i < a.ledger_files.size(); ++i) {
    CHECK(slurp(a.ledger_files[i]) == slurp(b.ledger_files[i]));
  }
  CHECK(slurp(a.summary_file) == slurp(b.summary_file));
}

TEST_CASE("summary examples_processed matches the final ledger row") {
  ScratchDir dir;
  const ExperimentConfig cfg = parse_config(tiny_config_json(dir.str()));
  const RunOutputs outputs = run(cfg);
  const LedgerFile ledger = read_ledger_csv(outputs.ledger_files[0]);
  REQUIRE(!ledger.rows.empty());
  const std::uint64_t final_cost = ledger.rows.back().n_backprop_cum;

  // Single seed: the mean column is the value itself.
  const std::string summary = slurp(outputs.summary_file);
  const std::string needle = "omedal,1,";
  const std::size_t start = summary.find(needle);
  REQUIRE(start != std::string::npos);
  std::string line = summary.substr(start, summary.find('\n', start) - start);
  std::vector<std::string> fields;
  std::stringstream ss(line);
  for (std::string field; std::getline(ss, field, ',');) fields.push_back(field);
  REQUIRE(fields.size() == 8);
  CHECK(fields[6] == std::to_string(final_cost));
}

TEST_CASE("plot renders one polyline per ledger plus the baseline rule") {
  ScratchDir dir;
  ExperimentConfig cfg = parse_config(tiny_config_json(dir.str()));
  cfg.modes = {Mode::medal, Mode::random};
  const RunOutputs outputs = run(cfg);
  REQUIRE(outputs.ledger_files.size() == 2);

  const std::string plot_path = dir.str() + "/curves.svg";
  emit_plot(outputs.ledger_files, plot_path, 0.9);
  const std::string svg = slurp(plot_path);

  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("<svg ") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(count_occurrences(svg, "<polyline") == 2);
  CHECK(count_occurrences(svg, "stroke-dasharray") == 1);
  CHECK(svg.find("medal") != std::string::npos);
  CHECK(svg.find("random") != std::string::npos);

  // Every element opened is closed: crude well-formedness check. rect,
  // line and polyline elements are all self-closing.
  CHECK(count_occurrences(svg, "<text") == count_occurrences(svg, "</text>"));
  CHECK(count_occurrences(svg, "<rect") + count_occurrences(svg, "<line") +
            count_occurrences(svg, "<polyline") ==
        count_occurrences(svg, "/>"));

  // x coordinates along each polyline never decrease (labels only grow).
  std::size_t pos = 0;
  while ((pos = svg.find("points=\"", pos)) != std::string::npos) {
    pos += 8;
    const std::size_t end = svg.find('"', pos);
    std::stringstream points(svg.substr(pos, end - pos));
    double prev_x = -1.0;
    for (std::string pair; std::getline(points, pair, ' ');) {
      const double x = std::stod(pair.substr(0, pair.find(',')));
      CHECK(x >= prev_x);
      prev_x = x;
    }
    pos = end;
  }

  // Without a baseline there is no dashed rule.
  emit_plot(outputs.ledger_files, plot_path);
  CHECK(count_occurrences(slurp(plot_path), "stroke-dasharray") == 0);

  CHECK_THROWS_AS(emit_plot({}, plot_path), PreconditionError);
}

TEST_CASE("cli runs a config file end to end") {
  ScratchDir dir;
  const std::string config_path = dir.str() + "/config.json";
  spit(config_path, tiny_config_json(dir.str() + "/out"));

  std::ostringstream out, err;
  const int code = run_cli({"--config", config_path, "--plot"}, out, err);
  CHECK(code == 0);
  CHECK(err.str().empty());
  CHECK(fs::exists(dir.str() + "/out/ledger_omedal_seed0.csv"));
  CHECK(fs::exists(dir.str() + "/out/summary.csv"));
  CHECK(fs::exists(dir.str() + "/out/curves.svg"));
  CHECK(out.str().find("summary.csv") != std::string::npos);
}

TEST_CASE("cli help and argument errors") {
  std::ostringstream out, err;
  CHECK(run_cli({"--help"}, out, err) == 0);
  CHECK(out.str().find("--config") != std::string::npos);

  std::ostringstream out2, err2;
  CHECK(run_cli({}, out2, err2) == 1);  // --config is required
  CHECK(!err2.str().empty());

  std::ostringstream out3, err3;
  CHECK(run_cli({"--config", "/nonexistent/config.json"}, out3, err3) == 1);
  CHECK(err3.str().find("config error") != std::string::npos);
}

TEST_CASE("cli distinguishes config errors from data errors") {
  ScratchDir dir;
  const std::string bad_config = dir.str() + "/bad.json";
  spit(bad_config, R"({"dataset": {"kind": "blobs"}, "loop": {"p": 1.5}})");
  std::ostringstream out, err;
  CHECK(run_cli({"--config", bad_config}, out, err) == 1);
  CHECK(err.str().find("p") != std::string::npos);

  const std::string missing_data = dir.str() + "/missing_data.json";
  spit(missing_data, R"({"dataset": {"kind": "delimited", "path": ")" + dir.str() +
                         R"(/nope.csv"}, "out_dir": ")" + dir.str() + R"("})");
  std::ostringstream out2, err2;
  CHECK(run_cli({"--config", missing_data}, out2, err2) == 2);
  CHECK(!err2.str().empty());
}

TEST_CASE("cli output directory precedence: flag over environment over config") {
  ScratchDir dir;
  const std::string config_path = dir.str() + "/config.json";
  spit(config_path, tiny_config_json(dir.str() + "/from_config"));

  ::setenv("ALEARN_OUT_DIR", (dir.str() + "/from_env").c_str(), 1);
  std::ostringstream out, err;
  CHECK(run_cli({"--config", config_path}, out, err) == 0);
  CHECK(fs::exists(dir.str() + "/from_env/summary.csv"));
  CHECK(!fs::exists(dir.str() + "/from_config/summary.csv"));

  std::ostringstream out2, err2;
  CHECK(run_cli({"--config", config_path, "--out", dir.str() + "/from_flag"}, out2, err2) == 0);
  CHECK(fs::exists(dir.str() + "/from_flag/summary.csv"));
  ::unsetenv("ALEARN_OUT_DIR");

  std::ostringstream out3, err3;
  CHECK(run_cli({"--config", config_path}, out3, err3) == 0);
  CHECK(fs::exists(dir.str() + "/from_config/summary.csv"));
}

TEST_CASE("cli mode and seed overrides change the artifact set") {
  ScratchDir dir;
  const std::string config_path = dir.str() + "/config.json";
  spit(config_path, tiny_config_json(dir.str() + "/out"));

  std::ostringstream out, err;
  CHECK(run_cli({"--config", config_path, "--mode", "uncertainty", "--seed", "9"}, out, err) == 0);
  CHECK(fs::exists(dir.str() + "/out/ledger_uncertainty_seed9.csv"));
  CHECK(!fs::exists(dir.str() + "/out/ledger_omedal_seed0.csv"));

  std::ostringstream out2, err2;
  CHECK(run_cli({"--config", config_path, "--mode", "qbc"}, out2, err2) == 1);
}
