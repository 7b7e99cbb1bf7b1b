#include "alearn/learner.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace alearn {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

void check_batch(const Matrix& batch, std::size_t input_dim) {
  if (batch.cols != input_dim) {
    throw ShapeError("batch has " + std::to_string(batch.cols) +
                     " features, learner expects " + std::to_string(input_dim));
  }
}

void check_labels(const Matrix& batch, const std::vector<int>& labels,
                  std::size_t n_classes) {
  if (labels.size() != batch.rows) {
    throw ShapeError("label count " + std::to_string(labels.size()) +
                     " does not match batch rows " + std::to_string(batch.rows));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) {
      throw DataError("label " + std::to_string(y) + " outside [0, " +
                      std::to_string(n_classes) + ")");
    }
  }
}

}  // namespace

void LearnerConfig::validate() const {
  if (input_dim == 0) throw ConfigError("learner: input_dim must be positive");
  if (hidden_dims.empty()) throw ConfigError("learner: at least one hidden layer required");
  for (std::size_t w : hidden_dims) {
    if (w == 0) throw ConfigError("learner: hidden layer width must be positive");
  }
  if (n_classes < 2) throw ConfigError("learner: n_classes must be at least 2");
  if (!(learning_rate >= 0.0)) throw ConfigError("learner: learning_rate must be non-negative");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("learner: momentum must be in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("learner: weight_decay must be non-negative");
  if (batch_size == 0) throw ConfigError("learner: batch_size must be positive");
}

struct Learner::Activations {
  // pre[l] and post[l] are the affine inputs and activated outputs of
  // layer l; post.back() holds softmax probabilities.
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
};

Learner::Learner(LearnerConfig config) : config_(std::move(config)) {
  config_.validate();
  dims_.push_back(config_.input_dim);
  for (std::size_t w : config_.hidden_dims) dims_.push_back(w);
  dims_.push_back(config_.n_classes);

  RngStream rng(config_.seed);
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const std::size_t fan_in = dims_[l];
    const std::size_t fan_out = dims_[l + 1];
    Matrix w(fan_in, fan_out);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : w.data) v = rng.next_uniform(-limit, limit);
    weights_.push_back(std::move(w));
    biases_.emplace_back(fan_out, 0.0);
    velocity_.emplace_back(fan_in, fan_out);
    bias_velocity_.emplace_back(fan_out, 0.0);
  }
  init_weights_ = weights_;
  init_biases_ = biases_;
}

void Learner::forward_cached(const Matrix& batch, Activations& acts) const {
  check_batch(batch, config_.input_dim);
  const std::size_t n = batch.rows;
  const std::size_t n_layers = weights_.size();
  acts.pre.assign(n_layers, Matrix());
  acts.post.assign(n_layers, Matrix());

  const Matrix* input = &batch;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const Matrix& w = weights_[l];
    const std::vector<double>& b = biases_[l];
    Matrix z(n, w.cols);
    for (std::size_t i = 0; i < n; ++i) {
      const double* in_row = input->data.data() + i * w.rows;
      double* z_row = z.data.data() + i * w.cols;
      for (std::size_t j = 0; j < w.cols; ++j) z_row[j] = b[j];
      for (std::size_t k = 0; k < w.rows; ++k) {
        const double v = in_row[k];
        const double* w_row = w.data.data() + k * w.cols;
        for (std::size_t j = 0; j < w.cols; ++j) z_row[j] += v * w_row[j];
      }
    }
    Matrix a(n, w.cols);
    if (l + 1 < n_layers) {
      for (std::size_t idx = 0; idx < z.data.size(); ++idx) a.data[idx] = gelu(z.data[idx]);
    } else {
      // Stable softmax via log-sum-exp.
      for (std::size_t i = 0; i < n; ++i) {
        const double* z_row = z.data.data() + i * w.cols;
        double* a_row = a.data.data() + i * w.cols;
        double zmax = z_row[0];
        for (std::size_t j = 1; j < w.cols; ++j) zmax = std::max(zmax, z_row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < w.cols; ++j) sum += std::exp(z_row[j] - zmax);
        const double log_sum = std::log(sum);
        for (std::size_t j = 0; j < w.cols; ++j) {
          a_row[j] = std::exp(z_row[j] - zmax - log_sum);
        }
      }
    }
    acts.pre[l] = std::move(z);
    acts.post[l] = std::move(a);
    input = &acts.post[l];
  }
}

ForwardResult Learner::forward(const Matrix& batch) const {
  Activations acts;
  forward_cached(batch, acts);
  ForwardResult out;
  out.probabilities = std::move(acts.post.back());
  // The embedding is the activation of the last hidden layer.
  out.embeddings = std::move(acts.post[acts.post.size() - 2]);
  return out;
}

std::vector<int> Learner::predict(const Matrix& batch) const {
  const ForwardResult fwd = forward(batch);
  std::vector<int> out(batch.rows);
  for (std::size_t i = 0; i < batch.rows; ++i) {
    const auto row = fwd.probabilities.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
      if (row[j] > row[best]) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

double Learner::loss_from(const Activations& acts, const std::vector<int>& labels) const {
  const Matrix& probs = acts.post.back();
  double ce = 0.0;
  for (std::size_t i = 0; i < probs.rows; ++i) {
    const double p = probs(i, static_cast<std::size_t>(labels[i]));
    ce -= std::log(std::max(p, 1e-300));
  }
  ce /= static_cast<double>(probs.rows);
  double penalty = 0.0;
  for (const Matrix& w : weights_) {
    for (double v : w.data) penalty += v * v;
  }
  return ce + 0.5 * config_.weight_decay * penalty;
}

double Learner::compute_loss(const Matrix& batch, const std::vector<int>& labels) const {
  check_labels(batch, labels, config_.n_classes);
  if (batch.rows == 0) throw PreconditionError("compute_loss: empty batch");
  Activations acts;
  forward_cached(batch, acts);
  return loss_from(acts, labels);
}

Gradients Learner::gradients_from(const Activations& acts, const Matrix& batch,
                                  const std::vector<int>& labels) const {
  const std::size_t n = batch.rows;
  const std::size_t n_layers = weights_.size();
  Gradients grads;
  grads.weights.resize(n_layers);
  grads.biases.resize(n_layers);

  // delta starts as d(mean CE)/d(logits) = (p - onehot) / n.
  Matrix delta = acts.post.back();
  for (std::size_t i = 0; i < n; ++i) {
    delta(i, static_cast<std::size_t>(labels[i])) -= 1.0;
  }
  for (double& v : delta.data) v /= static_cast<double>(n);

  for (std::size_t l = n_layers; l-- > 0;) {
    const Matrix& input = (l == 0) ? batch : acts.post[l - 1];
    const Matrix& w = weights_[l];

    Matrix gw(w.rows, w.cols);
    for (std::size_t i = 0; i < n; ++i) {
      const double* in_row = input.data.data() + i * w.rows;
      const double* d_row = delta.data.data() + i * w.cols;
      for (std::size_t k = 0; k < w.rows; ++k) {
        const double v = in_row[k];
        if (v == 0.0) continue;
        double* g_row = gw.data.data() + k * w.cols;
        for (std::size_t j = 0; j < w.cols; ++j) g_row[j] += v * d_row[j];
      }
    }
    for (std::size_t idx = 0; idx < gw.data.size(); ++idx) {
      gw.data[idx] += config_.weight_decay * w.data[idx];
    }

    std::vector<double> gb(w.cols, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* d_row = delta.data.data() + i * w.cols;
      for (std::size_t j = 0; j < w.cols; ++j) gb[j] += d_row[j];
    }

    if (l > 0) {
      Matrix prev(n, w.rows);
      for (std::size_t i = 0; i < n; ++i) {
        const double* d_row = delta.data.data() + i * w.cols;
        const double* z_row = acts.pre[l - 1].data.data() + i * w.rows;
        double* p_row = prev.data.data() + i * w.rows;
        for (std::size_t k = 0; k < w.rows; ++k) {
          const double* w_row = w.data.data() + k * w.cols;
          double acc = 0.0;
          for (std::size_t j = 0; j < w.cols; ++j) acc += d_row[j] * w_row[j];
          p_row[k] = acc * gelu_grad(z_row[k]);
        }
      }
      delta = std::move(prev);
    }

    grads.weights[l] = std::move(gw);
    grads.biases[l] = std::move(gb);
  }
  return grads;
}

Gradients Learner::compute_gradients(const Matrix& batch, const std::vector<int>& labels) const {
  check_labels(batch, labels, config_.n_classes);
  if (batch.rows == 0) throw PreconditionError("compute_gradients: empty batch");
  Activations acts;
  forward_cached(batch, acts);
  return gradients_from(acts, batch, labels);
}

void Learner::apply_update(const Gradients& grads) {
  const double mu = config_.momentum;
  const double lr = config_.learning_rate;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Matrix& v = velocity_[l];
    Matrix& w = weights_[l];
    const Matrix& g = grads.weights[l];
    for (std::size_t idx = 0; idx < w.data.size(); ++idx) {
      v.data[idx] = mu * v.data[idx] + g.data[idx];
      const double step = config_.nesterov ? g.data[idx] + mu * v.data[idx] : v.data[idx];
      w.data[idx] -= lr * step;
    }
    std::vector<double>& bv = bias_velocity_[l];
    std::vector<double>& b = biases_[l];
    const std::vector<double>& gb = grads.biases[l];
    for (std::size_t j = 0; j < b.size(); ++j) {
      bv[j] = mu * bv[j] + gb[j];
      const double step = config_.nesterov ? gb[j] + mu * bv[j] : bv[j];
      b[j] -= lr * step;
    }
  }
}

std::optional<double> Learner::train_epoch(const Matrix& batch, const std::vector<int>& labels) {
  check_labels(batch, labels, config_.n_classes);
  if (batch.rows == 0) return std::nullopt;

  const std::size_t n = batch.rows;
  const std::size_t bs = config_.batch_size;
  double loss_sum = 0.0;

  for (std::size_t start = 0; start < n; start += bs) {
    const std::size_t count = std::min(bs, n - start);
    Matrix mini(count, batch.cols);
    std::copy_n(batch.data.data() + start * batch.cols, count * batch.cols, mini.data.data());
    std::vector<int> mini_labels(labels.begin() + static_cast<std::ptrdiff_t>(start),
                                 labels.begin() + static_cast<std::ptrdiff_t>(start + count));
    Activations acts;
    forward_cached(mini, acts);
    loss_sum += loss_from(acts, mini_labels) * static_cast<double>(count);
    apply_update(gradients_from(acts, mini, mini_labels));
    backprop_count_ += count;
    update_count_ += 1;
  }
  return loss_sum / static_cast<double>(n);
}

void Learner::reset() {
  weights_ = init_weights_;
  biases_ = init_biases_;
  for (Matrix& v : velocity_) std::fill(v.data.begin(), v.data.end(), 0.0);
  for (std::vector<double>& bv : bias_velocity_) std::fill(bv.begin(), bv.end(), 0.0);
}

}  // namespace alearn
