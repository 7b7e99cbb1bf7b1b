#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "alearn/matrix.hpp"
#include "alearn/rng.hpp"

namespace alearn {

struct LearnerConfig {
  std::size_t input_dim = 0;
  // Hidden layer widths; the last entry is the embedding width exposed to
  // the sampler.
  std::vector<std::size_t> hidden_dims = {32, 16};
  std::size_t n_classes = 2;
  double learning_rate = 0.003;
  double momentum = 0.9;
  bool nesterov = true;
  double weight_decay = 0.01;
  std::size_t batch_size = 48;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError

  bool operator==(const LearnerConfig&) const = default;
};

struct ForwardResult {
  Matrix probabilities;  // rows x n_classes, rows sum to 1
  Matrix embeddings;     // rows x hidden_dims.back(), last hidden activations
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

// Multilayer perceptron with smooth hidden activations and a softmax head.
// Training is minibatch SGD with (optionally Nesterov) momentum and L2
// weight decay on the weight matrices; biases are not decayed. The
// activation is the Gaussian error linear unit, chosen over a rectifier so
// the loss surface has no kinks and central finite differences can certify
// the analytic gradients.
class Learner {
 public:
  explicit Learner(LearnerConfig config);

  const LearnerConfig& config() const { return config_; }
  std::size_t n_layers() const { return weights_.size(); }
  std::size_t embedding_dim() const { return config_.hidden_dims.back(); }

  ForwardResult forward(const Matrix& batch) const;
  std::vector<int> predict(const Matrix& batch) const;  // argmax class, ties to lowest

  // Full objective on a batch: mean cross-entropy plus the decay penalty
  // (wd / 2) * sum of squared weights. This is the function the analytic
  // gradients differentiate, which makes it the finite-difference target.
  double compute_loss(const Matrix& batch, const std::vector<int>& labels) const;
  Gradients compute_gradients(const Matrix& batch, const std::vector<int>& labels) const;

  // One pass over the examples in the given order, split into minibatches
  // of config().batch_size (final one may be short). Returns the mean
  // optimized loss over the epoch, or nullopt for an empty input (no state
  // is touched in that case).
  std::optional<double> train_epoch(const Matrix& batch, const std::vector<int>& labels);

  // Restores the initial weights bitwise and clears the momentum buffers.
  // The backprop and update counters deliberately survive: they meter
  // lifetime cost, not the current parameters.
  void reset();

  std::uint64_t backprop_count() const { return backprop_count_; }
  std::uint64_t update_count() const { return update_count_; }

  // Mutable parameter access exists for the gradient-check tests; library
  // code never pokes weights directly.
  std::vector<Matrix>& weights() { return weights_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  std::vector<std::vector<double>>& biases() { return biases_; }
  const std::vector<std::vector<double>>& biases() const { return biases_; }
  const std::vector<Matrix>& initial_weights() const { return init_weights_; }

 private:
  struct Activations;  // per-layer forward cache, defined in the .cpp

  void forward_cached(const Matrix& batch, Activations& acts) const;
  double loss_from(const Activations& acts, const std::vector<int>& labels) const;
  Gradients gradients_from(const Activations& acts, const Matrix& batch,
                           const std::vector<int>& labels) const;
  void apply_update(const Gradients& grads);

  LearnerConfig config_;
  std::vector<std::size_t> dims_;  // input, hidden..., output widths

  std::vector<Matrix> weights_;  // weights_[l] is dims_[l] x dims_[l+1]
  std::vector<std::vector<double>> biases_;
  std::vector<Matrix> velocity_;
  std::vector<std::vector<double>> bias_velocity_;

  std::vector<Matrix> init_weights_;
  std::vector<std::vector<double>> init_biases_;

  std::uint64_t backprop_count_ = 0;
  std::uint64_t update_count_ = 0;
};

}  // namespace alearn
