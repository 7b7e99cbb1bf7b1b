#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "alearn/errors.hpp"
#include "alearn/learner.hpp"
#include "alearn/rng.hpp"
#include "doctest.h"

using namespace alearn;

namespace {

LearnerConfig small_config() {
  LearnerConfig cfg;
  cfg.input_dim = 3;
  cfg.hidden_dims = {5, 4};
  cfg.n_classes = 2;
  cfg.seed = 21;
  return cfg;
}

Matrix random_batch(RngStream& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng.next_normal();
  return m;
}

std::vector<int> random_labels(RngStream& rng, std::size_t rows, std::size_t n_classes) {
  std::vector<int> labels(rows);
  for (int& y : labels) y = static_cast<int>(rng.next_below(n_classes));
  return labels;
}

}  // namespace

TEST_CASE("config validation rejects degenerate settings") {
  LearnerConfig cfg = small_config();
  cfg.input_dim = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = small_config();
  cfg.hidden_dims = {};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = small_config();
  cfg.n_classes = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = small_config();
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = small_config();
  cfg.learning_rate = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  CHECK_NOTHROW(small_config().validate());
}

TEST_CASE("forward with all-zero parameters yields uniform rows") {
  LearnerConfig cfg = small_config();
  cfg.n_classes = 4;
  Learner learner(cfg);
  for (Matrix& w : learner.weights()) {
    for (double& v : w.data) v = 0.0;
  }
  for (auto& b : learner.biases()) {
    for (double& v : b) v = 0.0;
  }
  RngStream rng(3);
  const Matrix batch = random_batch(rng, 6, cfg.input_dim);
  const ForwardResult out = learner.forward(batch);
  REQUIRE(out.probabilities.rows == 6);
  REQUIRE(out.probabilities.cols == 4);
  for (double p : out.probabilities.data) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("probability rows sum to one with entries in range") {
  Learner learner(small_config());
  RngStream rng(4);
  const Matrix batch = random_batch(rng, 17, 3);
  const ForwardResult out = learner.forward(batch);
  for (std::size_t i = 0; i < out.probabilities.rows; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < out.probabilities.cols; ++k) {
      const double p = out.probabilities(i, k);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("embedding width equals the last hidden dim") {
  LearnerConfig cfg = small_config();
  cfg.hidden_dims = {16, 8};
  Learner learner(cfg);
  CHECK(learner.embedding_dim() == 8);
  RngStream rng(5);
  const ForwardResult out = learner.forward(random_batch(rng, 2, cfg.input_dim));
  CHECK(out.embeddings.cols == 8);
  CHECK(out.embeddings.rows == 2);
}

TEST_CASE("forward rejects mismatched feature width") {
  Learner learner(small_config());
  Matrix wrong(2, 5);
  CHECK_THROWS_AS(learner.forward(wrong), ShapeError);
}

TEST_CASE("labels outside the class range are a data error") {
  Learner learner(small_config());
  RngStream rng(6);
  const Matrix batch = random_batch(rng, 2, 3);
  CHECK_THROWS_AS(learner.compute_loss(batch, {0, 2}), DataError);
  CHECK_THROWS_AS(learner.compute_gradients(batch, {-1, 0}), DataError);
  CHECK_THROWS_AS(learner.train_epoch(batch, {0, 5}), DataError);
}

TEST_CASE("analytic gradients match central finite differences") {
  // Randomized configurations spanning depth, width, class count and decay.
  RngStream rng(90210);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    LearnerConfig cfg;
    cfg.input_dim = 2 + rng.next_below(3);
    cfg.hidden_dims = {2 + rng.next_below(4)};
    if (rng.next_below(2) == 1) cfg.hidden_dims.push_back(2 + rng.next_below(3));
    cfg.n_classes = 2 + rng.next_below(3);
    cfg.weight_decay = (trial % 3 == 0) ? 0.0 : 0.05 * static_cast<double>(trial % 3);
    cfg.seed = 1000 + static_cast<std::uint64_t>(trial);
    Learner learner(cfg);

    // Randomize parameters away from the init distribution so the check
    // does not depend on any initializer structure.
    for (Matrix& w : learner.weights()) {
      for (double& v : w.data) v = 0.5 * rng.next_normal();
    }
    for (auto& b : learner.biases()) {
      for (double& v : b) v = 0.3 * rng.next_normal();
    }

    const std::size_t rows = 1 + rng.next_below(5);
    const Matrix batch = random_batch(rng, rows, cfg.input_dim);
    const std::vector<int> labels = random_labels(rng, rows, cfg.n_classes);

    const Gradients analytic = learner.compute_gradients(batch, labels);

    for (std::size_t layer = 0; layer < learner.n_layers(); ++layer) {
      Matrix& w = learner.weights()[layer];
      for (std::size_t k = 0; k < w.data.size(); ++k) {
        const double saved = w.data[k];
        w.data[k] = saved + h;
        const double up = learner.compute_loss(batch, labels);
        w.data[k] = saved - h;
        const double down = learner.compute_loss(batch, labels);
        w.data[k] = saved;
        const double fd = (up - down) / (2.0 * h);
        const double a = analytic.weights[layer].data[k];
        const double denom = std::max({std::abs(a), std::abs(fd), 1e-6});
        worst = std::max(worst, std::abs(a - fd) / denom);
      }
      auto& b = learner.biases()[layer];
      for (std::size_t k = 0; k < b.size(); ++k) {
        const double saved = b[k];
        b[k] = saved + h;
        const double up = learner.compute_loss(batch, labels);
        b[k] = saved - h;
        const double down = learner.compute_loss(batch, labels);
        b[k] = saved;
        const double fd = (up - down) / (2.0 * h);
        const double a = analytic.biases[layer][k];
        const double denom = std::max({std::abs(a), std::abs(fd), 1e-6});
        worst = std::max(worst, std::abs(a - fd) / denom);
      }
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("duplicated rows with zero decay reproduce the single-row gradient") {
  LearnerConfig cfg = small_config();
  cfg.weight_decay = 0.0;
  Learner learner(cfg);
  RngStream rng(77);
  const Matrix one = random_batch(rng, 1, cfg.input_dim);

  Matrix four(4, cfg.input_dim);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < cfg.input_dim; ++j) four(i, j) = one(0, j);
  }

  const Gradients g1 = learner.compute_gradients(one, {1});
  const Gradients g4 = learner.compute_gradients(four, {1, 1, 1, 1});
  for (std::size_t layer = 0; layer < g1.weights.size(); ++layer) {
    for (std::size_t k = 0; k < g1.weights[layer].data.size(); ++k) {
      CHECK(g4.weights[layer].data[k] ==
            doctest::Approx(g1.weights[layer].data[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero learning rate still advances the backprop counter") {
  LearnerConfig cfg = small_config();
  cfg.learning_rate = 0.0;
  cfg.momentum = 0.0;
  Learner learner(cfg);
  RngStream rng(8);
  const Matrix batch = random_batch(rng, 30, cfg.input_dim);
  const std::vector<int> labels = random_labels(rng, 30, cfg.n_classes);

  const std::vector<Matrix> before = learner.weights();
  learner.train_epoch(batch, labels);
  CHECK(learner.backprop_count() == 30);
  for (std::size_t layer = 0; layer < before.size(); ++layer) {
    CHECK(learner.weights()[layer].data == before[layer].data);
  }
}

TEST_CASE("backprop counter accumulates example presentations") {
  LearnerConfig cfg = small_config();
  Learner learner(cfg);
  RngStream rng(9);
  const Matrix hundred = random_batch(rng, 100, cfg.input_dim);
  const std::vector<int> labels100 = random_labels(rng, 100, cfg.n_classes);
  learner.train_epoch(hundred, labels100);
  CHECK(learner.backprop_count() == 100);

  const Matrix fortyeight = random_batch(rng, 48, cfg.input_dim);
  const std::vector<int> labels48 = random_labels(rng, 48, cfg.n_classes);
  learner.train_epoch(fortyeight, labels48);
  CHECK(learner.backprop_count() == 148);
}

TEST_CASE("update count tracks minibatches per epoch") {
  LearnerConfig cfg = small_config();
  cfg.batch_size = 8;
  Learner learner(cfg);
  RngStream rng(10);
  const Matrix batch = random_batch(rng, 30, cfg.input_dim);
  const std::vector<int> labels = random_labels(rng, 30, cfg.n_classes);
  learner.train_epoch(batch, labels);
  CHECK(learner.update_count() == 4);  // ceil(30 / 8)
}

TEST_CASE("empty epoch is a no-op returning nothing") {
  Learner learner(small_config());
  const Matrix empty(0, 3);
  const std::vector<Matrix> before = learner.weights();
  const auto loss = learner.train_epoch(empty, {});
  CHECK_FALSE(loss.has_value());
  CHECK(learner.backprop_count() == 0);
  for (std::size_t layer = 0; layer < before.size(); ++layer) {
    CHECK(learner.weights()[layer].data == before[layer].data);
  }
}

TEST_CASE("loss decreases on separable blobs") {
  LearnerConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_dims = {8, 4};
  cfg.n_classes = 2;
  cfg.learning_rate = 0.05;
  cfg.weight_decay = 0.0;
  cfg.seed = 33;
  Learner learner(cfg);

  RngStream rng(44);
  Matrix batch(200, 2);
  std::vector<int> labels(200);
  for (std::size_t i = 0; i < 200; ++i) {
    const int cls = i < 100 ? 0 : 1;
    const double cx = cls == 0 ? -3.0 : 3.0;
    batch(i, 0) = cx + rng.next_normal();
    batch(i, 1) = rng.next_normal();
    labels[i] = cls;
  }

  const double initial = learner.compute_loss(batch, labels);
  for (int epoch = 0; epoch < 50; ++epoch) learner.train_epoch(batch, labels);
  const double final_loss = learner.compute_loss(batch, labels);
  CHECK(final_loss < initial);
}

TEST_CASE("training is deterministic for a fixed seed and data order") {
  LearnerConfig cfg = small_config();
  Learner a(cfg);
  Learner b(cfg);
  RngStream rng(55);
  const Matrix batch = random_batch(rng, 40, cfg.input_dim);
  const std::vector<int> labels = random_labels(rng, 40, cfg.n_classes);
  for (int epoch = 0; epoch < 5; ++epoch) {
    a.train_epoch(batch, labels);
    b.train_epoch(batch, labels);
  }
  for (std::size_t layer = 0; layer < a.n_layers(); ++layer) {
    CHECK(a.weights()[layer].data == b.weights()[layer].data);
    CHECK(a.biases()[layer] == b.biases()[layer]);
  }
}

TEST_CASE("reset restores the fresh-init forward function") {
  LearnerConfig cfg = small_config();
  Learner trained(cfg);
  RngStream rng(66);
  const Matrix batch = random_batch(rng, 25, cfg.input_dim);
  const std::vector<int> labels = random_labels(rng, 25, cfg.n_classes);
  for (int epoch = 0; epoch < 3; ++epoch) trained.train_epoch(batch, labels);
  trained.reset();

  const Learner fresh(cfg);
  const ForwardResult a = trained.forward(batch);
  const ForwardResult b = fresh.forward(batch);
  CHECK(a.probabilities.data == b.probabilities.data);
  CHECK(a.embeddings.data == b.embeddings.data);
}

TEST_CASE("reset is idempotent") {
  LearnerConfig cfg = small_config();
  Learner learner(cfg);
  RngStream rng(67);
  const Matrix batch = random_batch(rng, 10, cfg.input_dim);
  const std::vector<int> labels = random_labels(rng, 10, cfg.n_classes);
  learner.train_epoch(batch, labels);
  learner.reset();
  const std::vector<Matrix> once = learner.weights();
  learner.reset();
  for (std::size_t layer = 0; layer < once.size(); ++layer) {
    CHECK(learner.weights()[layer].data == once[layer].data);
  }
}

TEST_CASE("counters survive a reset") {
  LearnerConfig cfg = small_config();
  Learner learner(cfg);
  RngStream rng(68);
  const Matrix batch = random_batch(rng, 50, cfg.input_dim);
  const std::vector<int> labels = random_labels(rng, 50, cfg.n_classes);
  for (int epoch = 0; epoch < 4; ++epoch) learner.train_epoch(batch, labels);
  CHECK(learner.backprop_count() == 200);
  learner.reset();
  CHECK(learner.backprop_count() == 200);
}

TEST_CASE("snapshot equals the weights right after construction") {
  Learner learner(small_config());
  for (std::size_t layer = 0; layer < learner.n_layers(); ++layer) {
    CHECK(learner.weights()[layer].data == learner.initial_weights()[layer].data);
  }
}

TEST_CASE("predict breaks probability ties toward the lowest class") {
  LearnerConfig cfg = small_config();
  cfg.n_classes = 3;
  Learner learner(cfg);
  for (Matrix& w : learner.weights()) {
    for (double& v : w.data) v = 0.0;
  }
  for (auto& b : learner.biases()) {
    for (double& v : b) v = 0.0;
  }
  Matrix batch(2, cfg.input_dim);
  batch(0, 0) = 1.0;
  batch(1, 1) = -2.0;
  const std::vector<int> out = learner.predict(batch);
  CHECK(out == std::vector<int>{0, 0});
}
