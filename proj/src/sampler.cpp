#include "alearn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "alearn/errors.hpp"

namespace alearn {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

bool scores_tie(double a, double b) {
  return std::abs(a - b) <= kScoreTieRelTol * std::max(std::abs(a), std::abs(b));
}

// Masked variant of argmax_score; positions with active[pos] == 0 are
// skipped. Returns kNone when nothing is active.
std::size_t argmax_active(std::span<const double> scores, std::span<const std::size_t> ids,
                          std::span<const char> active) {
  std::size_t best = kNone;
  for (std::size_t pos = 0; pos < scores.size(); ++pos) {
    if (!active[pos]) continue;
    if (best == kNone) {
      best = pos;
      continue;
    }
    if (scores_tie(scores[pos], scores[best])) {
      if (ids[pos] < ids[best]) best = pos;
    } else if (scores[pos] > scores[best]) {
      best = pos;
    }
  }
  return best;
}

void check_selection_inputs(const Matrix& train_embeddings, const CandidateSet& candidates) {
  if (train_embeddings.rows == 0) {
    throw PreconditionError("select_batch: training set is empty, centroid undefined");
  }
  if (candidates.ids.size() != candidates.embeddings.rows) {
    throw ShapeError("select_batch: candidate ids and embedding rows disagree");
  }
  if (candidates.embeddings.rows > 0 &&
      candidates.embeddings.cols != train_embeddings.cols) {
    throw ShapeError("select_batch: embedding widths disagree");
  }
}

}  // namespace

void SamplerConfig::validate() const {
  if (top_m == 0) throw ConfigError("sampler: top_m must be positive");
  if (labels_per_iter == 0) throw ConfigError("sampler: labels_per_iter must be positive");
}

double predictive_entropy(std::span<const double> probabilities) {
  double sum = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) {
      throw DataError("predictive_entropy: invalid distribution, negative or non-finite entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw DataError("predictive_entropy: invalid distribution, entries sum to " +
                    std::to_string(sum));
  }
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<std::size_t> top_m_candidates(std::span<const double> entropies, std::size_t m) {
  std::vector<std::size_t> order(entropies.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return entropies[a] > entropies[b];
  });
  if (m < order.size()) order.resize(m);
  return order;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("euclidean_distance: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

std::vector<double> centroid(const Matrix& embeddings) {
  if (embeddings.rows == 0) throw PreconditionError("centroid: empty embedding matrix");
  std::vector<double> mean(embeddings.cols, 0.0);
  for (std::size_t i = 0; i < embeddings.rows; ++i) {
    const double* row = embeddings.data.data() + i * embeddings.cols;
    for (std::size_t j = 0; j < embeddings.cols; ++j) mean[j] += row[j];
  }
  for (double& v : mean) v /= static_cast<double>(embeddings.rows);
  return mean;
}

double score_pairwise(std::span<const double> candidate, const Matrix& train_embeddings,
                      std::uint64_t& distance_evaluations) {
  if (train_embeddings.rows == 0) {
    throw PreconditionError("score_pairwise: empty training matrix");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < train_embeddings.rows; ++i) {
    sum += euclidean_distance(candidate, train_embeddings.row(i));
    distance_evaluations += 1;
  }
  return sum / static_cast<double>(train_embeddings.rows);
}

double score_centroid(std::span<const double> candidate, std::span<const double> y,
                      std::uint64_t& distance_evaluations) {
  const double d = euclidean_distance(candidate, y);
  distance_evaluations += 1;
  return d;
}

std::size_t argmax_score(std::span<const double> scores, std::span<const std::size_t> ids) {
  if (scores.empty()) throw PreconditionError("argmax_score: empty score list");
  if (scores.size() != ids.size()) throw ShapeError("argmax_score: ids must parallel scores");
  std::vector<char> active(scores.size(), 1);
  return argmax_active(scores, ids, active);
}

Selection select_batch(const Matrix& train_embeddings, const CandidateSet& candidates,
                       std::size_t count) {
  check_selection_inputs(train_embeddings, candidates);
  count = std::min(count, candidates.ids.size());

  Selection sel;
  if (count == 0) return sel;

  std::vector<double> y = centroid(train_embeddings);
  double n_train = static_cast<double>(train_embeddings.rows);

  std::vector<char> active(candidates.ids.size(), 1);
  std::vector<double> scores(candidates.ids.size(), 0.0);

  for (std::size_t pick = 0; pick < count; ++pick) {
    for (std::size_t pos = 0; pos < candidates.ids.size(); ++pos) {
      if (!active[pos]) continue;
      scores[pos] = score_centroid(candidates.embeddings.row(pos), y,
                                   sel.distance_evaluations);
    }
    const std::size_t pos = argmax_active(scores, candidates.ids, active);
    active[pos] = 0;

    sel.chosen.push_back(candidates.ids[pos]);
    sel.scores.push_back(scores[pos]);

    const auto e = candidates.embeddings.row(pos);
    for (std::size_t j = 0; j < y.size(); ++j) {
      y[j] += (e[j] - y[j]) / (n_train + 1.0);
    }
    n_train += 1.0;
    sel.centroids.push_back(y);
  }
  return sel;
}

Selection select_batch_pairwise(const Matrix& train_embeddings, const CandidateSet& candidates,
                                std::size_t count) {
  check_selection_inputs(train_embeddings, candidates);
  count = std::min(count, candidates.ids.size());

  Selection sel;
  if (count == 0) return sel;

  // The training set grows as picks are made; rows are appended in pick order.
  Matrix train = train_embeddings;

  std::vector<char> active(candidates.ids.size(), 1);
  std::vector<double> scores(candidates.ids.size(), 0.0);

  for (std::size_t pick = 0; pick < count; ++pick) {
    for (std::size_t pos = 0; pos < candidates.ids.size(); ++pos) {
      if (!active[pos]) continue;
      scores[pos] = score_pairwise(candidates.embeddings.row(pos), train,
                                   sel.distance_evaluations);
    }
    const std::size_t pos = argmax_active(scores, candidates.ids, active);
    active[pos] = 0;

    sel.chosen.push_back(candidates.ids[pos]);
    sel.scores.push_back(scores[pos]);

    const auto e = candidates.embeddings.row(pos);
    train.data.insert(train.data.end(), e.begin(), e.end());
    train.rows += 1;
    sel.centroids.push_back(centroid(train));
  }
  return sel;
}

std::vector<std::size_t> random_select(std::span<const std::size_t> pool_ids,
                                       std::size_t count, RngStream& rng) {
  count = std::min(count, pool_ids.size());
  std::vector<std::size_t> positions = rng.sample_indices(pool_ids.size(), count);
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t pos : positions) out.push_back(pool_ids[pos]);
  return out;
}

std::vector<std::size_t> uncertainty_select(const Matrix& pool_probabilities,
                                            std::size_t count) {
  const std::size_t n = pool_probabilities.rows;
  count = std::min(count, n);
  std::vector<double> entropies(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    entropies[i] = predictive_entropy(pool_probabilities.row(i));
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return entropies[a] > entropies[b];
  });
  order.resize(count);
  return order;
}

}  // namespace alearn
